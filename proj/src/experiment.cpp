#include "awdf/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "awdf/parallel.hpp"

namespace awdf {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw SpecError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw SpecError("unknown key '" + key + "' in " + where);
}

template <class T>
T get_unsigned(const json& v, const std::string& what) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw SpecError(what + " must be a nonnegative integer");
  return static_cast<T>(v.get<unsigned long long>());
}

std::string format_double(double v, int precision = 10) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

std::string eta_text(const std::optional<double>& eta) { return eta ? format_double(*eta) : "none"; }

std::string scheme_text(const std::optional<WeightScheme>& s) {
  return s ? std::string(to_string(*s)) : "none";
}

Strategy parse_strategy(const std::string& s) {
  if (s == "baseline") return Strategy::baseline;
  if (s == "resample") return Strategy::resample;
  if (s == "weighted-split") return Strategy::weighted_split;
  throw SpecError("unknown strategy '" + s + "' (baseline, resample, weighted-split)");
}

GridEntry parse_grid_entry(const json& g, std::size_t index) {
  const std::string where = "grid[" + std::to_string(index) + "]";
  check_keys(g, {"scheme", "strategy", "eta", "trees"}, where);
  GridEntry e;
  if (g.contains("scheme")) {
    const auto name = g.at("scheme").get<std::string>();
    if (name != "none") {
      e.scheme = parse_weight_scheme(name);
      if (!e.scheme) throw SpecError(where + ": unknown scheme '" + name + "'");
    }
  }
  if (g.contains("strategy")) e.strategy = parse_strategy(g.at("strategy").get<std::string>());
  if (g.contains("eta") && !g.at("eta").is_null()) {
    if (!g.at("eta").is_number()) throw SpecError(where + ": eta must be a number or null");
    e.eta = g.at("eta").get<double>();
  }
  if (!g.contains("trees")) throw SpecError(where + ": missing 'trees'");
  const auto& t = g.at("trees");
  if (t.is_array()) {
    for (const auto& v : t) e.trees.push_back(get_unsigned<std::size_t>(v, where + ".trees"));
  } else {
    e.trees.push_back(get_unsigned<std::size_t>(t, where + ".trees"));
  }
  if (e.trees.empty()) throw SpecError(where + ": 'trees' is empty");
  for (auto n : e.trees)
    if (n == 0) throw SpecError(where + ": tree counts must be positive");
  return e;
}

DatasetEntry parse_dataset_entry(const json& d, std::size_t index, const std::filesystem::path& base_dir) {
  const std::string where = "datasets[" + std::to_string(index) + "]";
  check_keys(d, {"name", "path", "label_column", "has_header", "expected"}, where);
  DatasetEntry e;
  if (!d.contains("path")) throw SpecError(where + ": missing 'path'");
  e.path = d.at("path").get<std::string>();
  if (e.path.is_relative()) e.path = base_dir / e.path;
  e.name = d.contains("name") ? d.at("name").get<std::string>() : e.path.stem().string();
  if (d.contains("label_column")) {
    const auto& lc = d.at("label_column");
    e.label_column = lc.is_number_integer() ? std::to_string(get_unsigned<std::size_t>(lc, where + ".label_column"))
                                            : lc.get<std::string>();
  }
  if (d.contains("has_header")) e.has_header = d.at("has_header").get<bool>();
  if (d.contains("expected")) {
    const auto& x = d.at("expected");
    check_keys(x, {"n", "m", "C"}, where + ".expected");
    if (x.contains("n")) e.expected_rows = get_unsigned<std::size_t>(x.at("n"), where + ".expected.n");
    if (x.contains("m")) e.expected_features = get_unsigned<std::size_t>(x.at("m"), where + ".expected.m");
    if (x.contains("C")) e.expected_classes = get_unsigned<int>(x.at("C"), where + ".expected.C");
  }
  return e;
}

double mean_of(const std::vector<std::size_t>& v) {
  if (v.empty()) return 0.0;
  return static_cast<double>(std::accumulate(v.begin(), v.end(), std::size_t{0})) / static_cast<double>(v.size());
}

json ttest_json(const std::vector<double>& a, const std::vector<double>& b) {
  json j;
  try {
    const auto t = paired_t_test(a, b);
    j["mean_difference"] = t.mean_difference;
    j["t_statistic"] = t.t_statistic;
    j["p_value"] = t.p_value;
    j["ci95"] = {t.ci_low, t.ci_high};
    j["degrees_of_freedom"] = t.degrees_of_freedom;
  } catch (const std::invalid_argument& e) {
    j["error"] = e.what();
  }
  return j;
}

}  // namespace

std::string GridEntry::label() const {
  std::string s = scheme ? std::string(to_string(*scheme)) + "/" + std::string(to_string(strategy)) : "gcF";
  if (!scheme && strategy != Strategy::baseline) s += "/" + std::string(to_string(strategy));
  if (eta) s += "@eta=" + format_double(*eta);
  return s;
}

CascadeConfig GridEntry::apply(CascadeConfig base) const {
  base.scheme = scheme;
  base.strategy = strategy;
  base.eta = eta;
  if (!trees.empty()) base.trees_per_forest = trees.front();
  return base;
}

ExperimentSpec parse_experiment_spec(const json& doc, const std::filesystem::path& base_dir) {
  check_keys(doc, {"datasets", "grid", "repetitions", "base_seed", "output_dir", "cascade", "jobs"},
             "experiment spec");
  ExperimentSpec spec;
  try {
    if (!doc.contains("datasets") || !doc.at("datasets").is_array() || doc.at("datasets").empty())
      throw SpecError("'datasets' must be a nonempty array");
    if (!doc.contains("grid") || !doc.at("grid").is_array() || doc.at("grid").empty())
      throw SpecError("'grid' must be a nonempty array");
    for (std::size_t i = 0; i < doc.at("datasets").size(); ++i)
      spec.datasets.push_back(parse_dataset_entry(doc.at("datasets")[i], i, base_dir));
    for (std::size_t i = 0; i < doc.at("grid").size(); ++i)
      spec.grid.push_back(parse_grid_entry(doc.at("grid")[i], i));
    if (doc.contains("repetitions")) spec.repetitions = get_unsigned<std::size_t>(doc.at("repetitions"), "repetitions");
    if (spec.repetitions == 0) throw SpecError("repetitions must be at least 1");
    if (doc.contains("base_seed")) spec.base_seed = get_unsigned<std::uint64_t>(doc.at("base_seed"), "base_seed");
    if (doc.contains("jobs")) spec.jobs = std::max<std::size_t>(1, get_unsigned<std::size_t>(doc.at("jobs"), "jobs"));
    if (doc.contains("output_dir")) {
      spec.output_dir = doc.at("output_dir").get<std::string>();
      if (spec.output_dir.is_relative()) spec.output_dir = base_dir / spec.output_dir;
    }
    if (doc.contains("cascade")) {
      const auto& c = doc.at("cascade");
      check_keys(c, {"forests_per_level", "max_levels", "early_stop_patience", "crossfit_k",
                     "validation_fraction", "refit", "min_samples_split", "max_depth", "jobs"},
                 "cascade");
      auto& cfg = spec.cascade;
      if (c.contains("forests_per_level")) cfg.forests_per_level = get_unsigned<std::size_t>(c.at("forests_per_level"), "forests_per_level");
      if (c.contains("max_levels")) cfg.max_levels = get_unsigned<std::size_t>(c.at("max_levels"), "max_levels");
      if (c.contains("early_stop_patience")) cfg.early_stop_patience = get_unsigned<std::size_t>(c.at("early_stop_patience"), "early_stop_patience");
      if (c.contains("crossfit_k")) cfg.crossfit_k = get_unsigned<std::size_t>(c.at("crossfit_k"), "crossfit_k");
      if (c.contains("validation_fraction")) cfg.validation_fraction = c.at("validation_fraction").get<double>();
      if (c.contains("refit")) cfg.refit = c.at("refit").get<bool>();
      if (c.contains("min_samples_split")) cfg.min_samples_split = get_unsigned<std::size_t>(c.at("min_samples_split"), "min_samples_split");
      if (c.contains("max_depth")) cfg.max_depth = get_unsigned<std::size_t>(c.at("max_depth"), "max_depth");
      if (c.contains("jobs")) cfg.jobs = std::max<std::size_t>(1, get_unsigned<std::size_t>(c.at("jobs"), "jobs"));
    }
    for (std::size_t i = 0; i < spec.grid.size(); ++i) {
      try {
        spec.grid[i].apply(spec.cascade).validate();
      } catch (const std::invalid_argument& e) {
        throw SpecError("grid[" + std::to_string(i) + "]: " + e.what());
      }
    }
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed experiment spec: ") + e.what());
  }
  return spec;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open experiment spec " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SpecError(path.string() + ": " + e.what());
  }
  return parse_experiment_spec(doc, path.parent_path());
}

Dataset load_dataset(const DatasetEntry& entry) {
  CsvOptions opts;
  opts.label_column.spec = entry.label_column;
  opts.has_header = entry.has_header;
  opts.name = entry.name;
  Dataset ds = load_csv(entry.path, opts);
  auto mismatch = [&](const std::string& what, std::size_t want, std::size_t got) {
    throw LoadError(entry.name + ": expected " + what + " = " + std::to_string(want) + ", found " +
                    std::to_string(got));
  };
  if (entry.expected_rows && *entry.expected_rows != ds.size()) mismatch("n", *entry.expected_rows, ds.size());
  if (entry.expected_features && *entry.expected_features != ds.arity())
    mismatch("m", *entry.expected_features, ds.arity());
  if (entry.expected_classes && *entry.expected_classes != ds.class_count)
    mismatch("C", static_cast<std::size_t>(*entry.expected_classes), static_cast<std::size_t>(ds.class_count));
  return ds;
}

void write_results_csv(std::ostream& out, const ExperimentSpec& spec, const ExperimentReport& report) {
  out << "dataset,scheme,strategy,eta,trees,repetition,seed,accuracy,fit_seconds,levels\n";
  for (const auto& cell : report.cells) {
    if (!cell.result) continue;
    const auto& g = spec.grid[cell.grid];
    const auto& r = *cell.result;
    for (std::size_t i = 0; i < r.repetitions; ++i) {
      out << report.dataset_names[cell.dataset] << ',' << scheme_text(g.scheme) << ','
          << to_string(g.strategy) << ',' << eta_text(g.eta) << ',' << cell.trees << ',' << i << ','
          << r.seeds[i] << ',' << format_double(r.accuracies[i], 17) << ','
          << std::fixed << std::setprecision(6) << r.fit_seconds[i] << std::defaultfloat << ','
          << r.levels_grown[i] << '\n';
    }
  }
}

json config_json(const CascadeConfig& cfg) {
  json j;
  j["forests_per_level"] = cfg.forests_per_level;
  j["trees_per_forest"] = cfg.trees_per_forest;
  j["scheme"] = scheme_text(cfg.scheme);
  j["strategy"] = std::string(to_string(cfg.strategy));
  j["eta"] = cfg.eta ? json(*cfg.eta) : json(nullptr);
  j["max_levels"] = cfg.max_levels;
  j["early_stop_patience"] = cfg.early_stop_patience;
  j["crossfit_k"] = cfg.crossfit_k;
  j["validation_fraction"] = cfg.validation_fraction;
  j["refit"] = cfg.refit;
  j["min_samples_split"] = cfg.min_samples_split;
  j["max_depth"] = cfg.max_depth;
  j["seed"] = cfg.seed;
  return j;
}

json model_summary(const CascadeModel& model) {
  json j;
  j["levels"] = model.level_count();
  j["class_count"] = model.class_count();
  j["input_arity"] = model.input_arity();
  j["per_level_train_counts"] = model.per_level_train_counts();
  json per_level = json::array();
  for (std::size_t q = 0; q < model.level_count(); ++q) {
    const auto& l = model.levels()[q];
    per_level.push_back({{"level", q + 1},
                         {"arity", model.level_arity(q)},
                         {"train_count", l.train_count},
                         {"exits", l.exits},
                         {"monitor_accuracy", l.monitor_accuracy},
                         {"eta", l.eta ? json(*l.eta) : json(nullptr)}});
  }
  j["per_level"] = per_level;
  j["stop_reason"] = std::string(to_string(model.stop_reason()));
  j["config"] = config_json(model.config());
  return j;
}

namespace {

// best[dataset][grid] = index into report.cells of the max-over-T cell.
std::vector<std::vector<std::optional<std::size_t>>> best_cells(const ExperimentReport& report) {
  std::vector<std::vector<std::optional<std::size_t>>> best(
      report.dataset_names.size(), std::vector<std::optional<std::size_t>>(report.config_labels.size()));
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    const auto& c = report.cells[i];
    if (!c.result) continue;
    auto& slot = best[c.dataset][c.grid];
    if (!slot || c.result->mean_accuracy > report.cells[*slot].result->mean_accuracy) slot = i;
  }
  return best;
}

}  // namespace

json summary_json(const ExperimentSpec& spec, const ExperimentReport& report) {
  json j;
  j["repetitions"] = spec.repetitions;
  j["base_seed"] = spec.base_seed;
  j["cascade"] = config_json(spec.cascade);
  json cells = json::array();
  for (const auto& c : report.cells) {
    json cj{{"dataset", report.dataset_names[c.dataset]},
            {"config", report.config_labels[c.grid]},
            {"scheme", scheme_text(spec.grid[c.grid].scheme)},
            {"strategy", std::string(to_string(spec.grid[c.grid].strategy))},
            {"eta", spec.grid[c.grid].eta ? json(*spec.grid[c.grid].eta) : json(nullptr)},
            {"trees", c.trees}};
    if (c.result) {
      const auto& r = *c.result;
      cj["mean_accuracy"] = r.mean_accuracy;
      cj["std_accuracy"] = r.std_accuracy;
      cj["mean_fit_seconds"] = r.mean_fit_seconds;
      cj["std_fit_seconds"] = r.std_fit_seconds;
      cj["mean_levels"] = mean_of(r.levels_grown);
    } else {
      cj["error"] = c.error;
    }
    cells.push_back(cj);
  }
  j["cells"] = cells;

  const auto best = best_cells(report);
  json best_json = json::array();
  for (std::size_t d = 0; d < best.size(); ++d)
    for (std::size_t g = 0; g < best[d].size(); ++g)
      if (best[d][g]) {
        const auto& c = report.cells[*best[d][g]];
        best_json.push_back({{"dataset", report.dataset_names[d]},
                             {"config", report.config_labels[g]},
                             {"trees", c.trees},
                             {"mean_accuracy", c.result->mean_accuracy},
                             {"std_accuracy", c.result->std_accuracy}});
      }
  j["best_over_trees"] = best_json;

  // Paired t-tests across datasets against the first plain cascade without screening.
  json tests = json::array();
  std::optional<std::size_t> reference;
  for (std::size_t g = 0; g < spec.grid.size() && !reference; ++g)
    if (!spec.grid[g].scheme && !spec.grid[g].eta && spec.grid[g].strategy == Strategy::baseline) reference = g;
  if (reference) {
    auto collect = [&](std::size_t g, std::vector<double>& a, std::vector<double>& b, std::vector<std::string>& names) {
      for (std::size_t d = 0; d < best.size(); ++d) {
        if (!best[d][g] || !best[d][*reference]) continue;
        a.push_back(100.0 * report.cells[*best[d][g]].result->mean_accuracy);
        b.push_back(100.0 * report.cells[*best[d][*reference]].result->mean_accuracy);
        names.push_back(report.dataset_names[d]);
      }
    };
    for (std::size_t g = 0; g < spec.grid.size(); ++g) {
      if (g == *reference) continue;
      std::vector<double> a, b;
      std::vector<std::string> names;
      collect(g, a, b, names);
      json t = ttest_json(a, b);
      t["comparison"] = report.config_labels[g] + " vs " + report.config_labels[*reference];
      t["basis"] = "max-over-trees accuracy (percent)";
      t["datasets"] = names;
      tests.push_back(t);
    }
    // Best weighted configuration per dataset.
    std::vector<double> a, b;
    std::vector<std::string> names;
    for (std::size_t d = 0; d < best.size(); ++d) {
      if (!best[d][*reference]) continue;
      std::optional<double> top;
      for (std::size_t g = 0; g < spec.grid.size(); ++g)
        if (spec.grid[g].scheme && best[d][g]) {
          const double acc = report.cells[*best[d][g]].result->mean_accuracy;
          if (!top || acc > *top) top = acc;
        }
      if (!top) continue;
      a.push_back(100.0 * *top);
      b.push_back(100.0 * report.cells[*best[d][*reference]].result->mean_accuracy);
      names.push_back(report.dataset_names[d]);
    }
    if (!names.empty()) {
      json t = ttest_json(a, b);
      t["comparison"] = "best weighted vs " + report.config_labels[*reference];
      t["basis"] = "max-over-trees accuracy (percent)";
      t["datasets"] = names;
      tests.push_back(t);
    }
    // Fixed tree count comparisons.
    for (std::size_t g = 0; g < spec.grid.size(); ++g) {
      if (g == *reference) continue;
      for (auto trees : spec.grid[g].trees) {
        std::vector<double> fa, fb;
        std::vector<std::string> fnames;
        for (std::size_t d = 0; d < best.size(); ++d) {
          const CellResult* mine = nullptr;
          const CellResult* ref = nullptr;
          for (const auto& c : report.cells) {
            if (c.dataset != d || c.trees != trees || !c.result) continue;
            if (c.grid == g) mine = &c;
            if (c.grid == *reference) ref = &c;
          }
          if (!mine || !ref) continue;
          fa.push_back(100.0 * mine->result->mean_accuracy);
          fb.push_back(100.0 * ref->result->mean_accuracy);
          fnames.push_back(report.dataset_names[d]);
        }
        if (fnames.empty()) continue;
        json t = ttest_json(fa, fb);
        t["comparison"] = report.config_labels[g] + " vs " + report.config_labels[*reference];
        t["basis"] = "accuracy (percent) at trees=" + std::to_string(trees);
        t["datasets"] = fnames;
        tests.push_back(t);
      }
    }
  }
  j["t_tests"] = tests;
  return j;
}

std::string summary_table(const ExperimentReport& report) {
  const auto best = best_cells(report);
  std::size_t name_width = 7;
  for (const auto& n : report.dataset_names) name_width = std::max(name_width, n.size());
  std::vector<std::size_t> widths;
  for (const auto& l : report.config_labels) widths.push_back(std::max<std::size_t>(l.size(), 7));

  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_width)) << "dataset";
  for (std::size_t g = 0; g < widths.size(); ++g)
    out << "  " << std::right << std::setw(static_cast<int>(widths[g])) << report.config_labels[g];
  out << '\n';
  for (std::size_t d = 0; d < best.size(); ++d) {
    std::optional<double> top;
    for (const auto& slot : best[d])
      if (slot) top = std::max(top.value_or(-1.0), report.cells[*slot].result->mean_accuracy);
    out << std::left << std::setw(static_cast<int>(name_width)) << report.dataset_names[d];
    for (std::size_t g = 0; g < widths.size(); ++g) {
      std::string cell = "ERR";
      if (best[d][g]) {
        const double acc = report.cells[*best[d][g]].result->mean_accuracy;
        std::ostringstream v;
        v << std::fixed << std::setprecision(2) << 100.0 * acc << (acc == *top ? "*" : " ");
        cell = v.str();
      }
      out << "  " << std::right << std::setw(static_cast<int>(widths[g])) << cell;
    }
    out << '\n';
  }
  return out.str();
}

ExperimentReport run_grid(const ExperimentSpec& spec, const std::vector<Dataset>& datasets, std::ostream& log) {
  if (datasets.size() != spec.datasets.size()) throw std::invalid_argument("run_grid: dataset count mismatch");
  ExperimentReport report;
  for (const auto& entry : spec.datasets) report.dataset_names.push_back(entry.name);
  for (const auto& g : spec.grid) report.config_labels.push_back(g.label());
  for (std::size_t d = 0; d < datasets.size(); ++d)
    for (std::size_t g = 0; g < spec.grid.size(); ++g)
      for (auto t : spec.grid[g].trees) report.cells.push_back({d, g, t, std::nullopt, {}});

  std::mutex log_mutex;
  parallel_for(report.cells.size(), spec.jobs, [&](std::size_t i) {
    auto& cell = report.cells[i];
    CascadeConfig cfg = spec.grid[cell.grid].apply(spec.cascade);
    cfg.trees_per_forest = cell.trees;
    try {
      cell.result = evaluate(datasets[cell.dataset], cfg, spec.repetitions, spec.base_seed);
      std::lock_guard lock(log_mutex);
      log << report.dataset_names[cell.dataset] << "  " << report.config_labels[cell.grid]
          << "  T=" << cell.trees << "  accuracy " << std::fixed << std::setprecision(4)
          << cell.result->mean_accuracy << " +- " << cell.result->std_accuracy << std::defaultfloat << std::endl;
    } catch (const std::exception& e) {
      cell.error = e.what();
      std::lock_guard lock(log_mutex);
      log << report.dataset_names[cell.dataset] << "  " << report.config_labels[cell.grid]
          << "  T=" << cell.trees << "  FAILED: " << e.what() << std::endl;
    }
  });
  return report;
}

void write_reports(const ExperimentSpec& spec, const ExperimentReport& report, std::ostream& log) {
  std::filesystem::create_directories(spec.output_dir);
  {
    std::ofstream csv(spec.output_dir / "results.csv");
    write_results_csv(csv, spec, report);
  }
  {
    std::ofstream js(spec.output_dir / "summary.json");
    js << summary_json(spec, report).dump(2) << '\n';
  }
  const std::string table = summary_table(report);
  {
    std::ofstream tt(spec.output_dir / "table.txt");
    tt << table;
  }
  log << '\n' << table;
}

int run_experiment(const ExperimentSpec& spec, std::ostream& log) {
  std::error_code ec;
  std::filesystem::create_directories(spec.output_dir, ec);
  if (ec) {
    log << "cannot create output directory " << spec.output_dir << ": " << ec.message() << '\n';
    return kExitBadSpec;
  }

  std::vector<Dataset> datasets;
  for (const auto& entry : spec.datasets) {
    try {
      datasets.push_back(load_dataset(entry));
    } catch (const std::exception& e) {
      log << "failed to load dataset '" << entry.name << "': " << e.what() << '\n';
      return kExitDatasetLoad;
    }
  }

  const auto report = run_grid(spec, datasets, log);
  write_reports(spec, report, log);
  const bool any_failed = std::any_of(report.cells.begin(), report.cells.end(),
                                      [](const CellResult& c) { return !c.result; });
  return any_failed ? kExitPartialFailure : kExitOk;
}

}  // namespace awdf
