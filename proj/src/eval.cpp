#include "awdf/eval.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "awdf/random.hpp"

namespace awdf {

namespace {

constexpr std::uint64_t kSplitTag = 21;
constexpr std::uint64_t kModelTag = 22;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::uint64_t split_seed(std::uint64_t base_seed, std::size_t repetition) {
  return derive_seed(base_seed, {kSplitTag, repetition});
}

std::uint64_t model_seed(std::uint64_t base_seed, std::size_t repetition) {
  return derive_seed(base_seed, {kModelTag, repetition});
}

std::uint64_t split_hash(std::span<const std::size_t> train_rows, std::span<const std::size_t> test_rows) {
  // FNV-1a over the row ids with a separator between the two sides.
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  for (auto r : train_rows) mix(r);
  mix(~0ULL);
  for (auto r : test_rows) mix(r);
  return h;
}

std::pair<double, double> mean_std(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

RunResult evaluate(const Dataset& ds, const CascadeConfig& cfg, std::size_t repetitions,
                   std::uint64_t base_seed) {
  if (repetitions == 0) throw std::invalid_argument("evaluate: repetitions must be at least 1");
  cfg.validate();
  RunResult out;
  out.dataset = ds.name;
  out.config = cfg;
  out.repetitions = repetitions;
  for (std::size_t r = 0; r < repetitions; ++r) {
    const auto split = stratified_split(ds, kTrainFraction, split_seed(base_seed, r));
    CascadeConfig run_cfg = cfg;
    run_cfg.seed = model_seed(base_seed, r);
    const auto start = std::chrono::steady_clock::now();
    const auto model = CascadeModel::fit(split.train, run_cfg);
    out.fit_seconds.push_back(seconds_since(start));
    out.accuracies.push_back(model.accuracy(split.test, cfg.jobs));
    out.levels_grown.push_back(model.level_count());
    out.seeds.push_back(run_cfg.seed);
    out.split_hashes.push_back(split_hash(split.train_rows, split.test_rows));
  }
  std::tie(out.mean_accuracy, out.std_accuracy) = mean_std(out.accuracies);
  std::tie(out.mean_fit_seconds, out.std_fit_seconds) = mean_std(out.fit_seconds);
  return out;
}

std::vector<RunResult> sweep_trees(const Dataset& ds, const CascadeConfig& cfg,
                                   std::span<const std::size_t> tree_counts, std::size_t repetitions,
                                   std::uint64_t base_seed) {
  if (tree_counts.empty()) throw std::invalid_argument("sweep_trees: no tree counts");
  std::vector<RunResult> out;
  for (auto t : tree_counts) {
    if (t == 0) throw std::invalid_argument("sweep_trees: tree counts must be positive");
    CascadeConfig c = cfg;
    c.trees_per_forest = t;
    out.push_back(evaluate(ds, c, repetitions, base_seed));
  }
  return out;
}

const RunResult& best_over_trees(std::span<const RunResult> sweep) {
  if (sweep.empty()) throw std::invalid_argument("best_over_trees: empty sweep");
  const RunResult* best = &sweep.front();
  for (const auto& r : sweep)
    if (r.mean_accuracy > best->mean_accuracy) best = &r;
  return *best;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired_t_test: samples differ in length");
  if (a.size() < 2) throw std::invalid_argument("paired_t_test: need at least two pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const auto [mean, sd] = mean_std(d);
  if (!(sd > 0.0)) throw std::invalid_argument("paired_t_test: differences have zero variance");

  const auto n = static_cast<double>(d.size());
  const double se = sd / std::sqrt(n);
  TTestResult out;
  out.degrees_of_freedom = d.size() - 1;
  out.mean_difference = mean;
  out.t_statistic = mean / se;
  const boost::math::students_t dist(static_cast<double>(out.degrees_of_freedom));
  out.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t_statistic))));
  const double t_crit = boost::math::quantile(boost::math::complement(dist, 0.025));
  out.ci_low = mean - t_crit * se;
  out.ci_high = mean + t_crit * se;
  return out;
}

TimingResult measure_fit_time(const Dataset& ds, const CascadeConfig& cfg, std::size_t repetitions,
                              std::uint64_t base_seed) {
  if (repetitions == 0) throw std::invalid_argument("measure_fit_time: repetitions must be at least 1");
  TimingResult out;
  for (std::size_t r = 0; r < repetitions; ++r) {
    const auto split = stratified_split(ds, kTrainFraction, split_seed(base_seed, r));
    CascadeConfig run_cfg = cfg;
    run_cfg.seed = model_seed(base_seed, r);
    const auto start = std::chrono::steady_clock::now();
    const auto model = CascadeModel::fit(split.train, run_cfg);
    out.seconds.push_back(seconds_since(start));
  }
  std::tie(out.mean, out.std) = mean_std(out.seconds);
  return out;
}

}  // namespace awdf
