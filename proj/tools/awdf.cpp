#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "awdf/experiment.hpp"

namespace {

std::vector<std::size_t> parse_tree_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t v = 0;
    const auto* end = item.data() + item.size();
    auto [ptr, ec] = std::from_chars(item.data(), end, v);
    if (ec != std::errc() || ptr != end || v == 0) throw awdf::SpecError("bad tree count '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw awdf::SpecError("--trees is empty");
  return out;
}

struct SingleFlags {
  std::string data;
  std::string label_col = "last";
  bool no_header = false;
  std::string scheme = "none";
  std::string strategy = "baseline";
  std::optional<double> eta;
  std::string trees = "100";
  std::size_t reps = 50;
  std::uint64_t seed = 0;
  std::size_t crossfit_k = 3;
  std::size_t max_levels = 20;
  std::string out = "awdf-out";
  std::size_t jobs = 1;
};

nlohmann::json single_spec_json(const SingleFlags& f) {
  nlohmann::json trees = nlohmann::json::array();
  for (auto t : parse_tree_list(f.trees)) trees.push_back(t);
  nlohmann::json grid{{"scheme", f.scheme}, {"strategy", f.strategy}, {"trees", trees}};
  grid["eta"] = f.eta ? nlohmann::json(*f.eta) : nlohmann::json(nullptr);
  const auto path = std::filesystem::absolute(f.data);
  return {{"datasets", {{{"name", path.stem().string()},
                         {"path", path.string()},
                         {"label_column", f.label_col},
                         {"has_header", !f.no_header}}}},
          {"grid", {grid}},
          {"repetitions", f.reps},
          {"base_seed", f.seed},
          {"output_dir", std::filesystem::absolute(f.out).string()},
          {"jobs", f.jobs},
          {"cascade", {{"crossfit_k", f.crossfit_k}, {"max_levels", f.max_levels}}}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cascade forest with adaptive instance weights"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment grid from a JSON spec");
  std::string spec_path;
  std::optional<std::string> out_override;
  std::optional<std::size_t> reps_override;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::size_t> jobs_override;
  run->add_option("spec", spec_path, "Experiment spec (JSON)")->required();
  run->add_option("--out", out_override, "Output directory");
  run->add_option("--reps", reps_override, "Repetitions");
  run->add_option("--seed", seed_override, "Base seed");
  run->add_option("--jobs", jobs_override, "Concurrent grid cells");

  auto* single = app.add_subcommand("single", "Evaluate one configuration on one dataset");
  SingleFlags f;
  single->add_option("--data", f.data, "CSV file")->required();
  single->add_option("--label-col", f.label_col, "Label column name or zero-based index ('last' by default)");
  single->add_flag("--no-header", f.no_header, "The file has no header row");
  single->add_option("--scheme", f.scheme, "none, 1-w, 1-w2, 1-wsqrt or l2");
  single->add_option("--strategy", f.strategy, "baseline, resample or weighted-split");
  single->add_option("--eta", f.eta, "Screening threshold in (0, 1]");
  single->add_option("--trees", f.trees, "Trees per forest, comma separated for a sweep");
  single->add_option("--reps", f.reps, "Repetitions");
  single->add_option("--seed", f.seed, "Base seed");
  single->add_option("--crossfit-k", f.crossfit_k, "Folds for class-vector generation");
  single->add_option("--max-levels", f.max_levels, "Maximum cascade levels");
  single->add_option("--out", f.out, "Output directory");
  single->add_option("--jobs", f.jobs, "Concurrent grid cells");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : awdf::kExitBadSpec;
  }

  awdf::ExperimentSpec spec;
  try {
    if (*run) {
      spec = awdf::load_experiment_spec(spec_path);
      if (out_override) spec.output_dir = *out_override;
      if (reps_override) {
        if (*reps_override == 0) throw awdf::SpecError("--reps must be at least 1");
        spec.repetitions = *reps_override;
      }
      if (seed_override) spec.base_seed = *seed_override;
      if (jobs_override) spec.jobs = std::max<std::size_t>(1, *jobs_override);
    } else {
      spec = awdf::parse_experiment_spec(single_spec_json(f), std::filesystem::current_path());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return awdf::kExitBadSpec;
  }

  try {
    return awdf::run_experiment(spec, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return awdf::kExitFailure;
  }
}
