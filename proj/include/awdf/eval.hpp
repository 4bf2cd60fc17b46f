#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "awdf/cascade.hpp"
#include "awdf/dataset.hpp"

namespace awdf {

/// Fraction of each repetition used for training.
inline constexpr double kTrainFraction = 0.8;

/// Split and cascade seeds of repetition r (0-based). They depend only on the
/// base seed and r, so every configuration sees the same partitions.
std::uint64_t split_seed(std::uint64_t base_seed, std::size_t repetition);
std::uint64_t model_seed(std::uint64_t base_seed, std::size_t repetition);

/// Order-sensitive hash of a partition's row ids.
std::uint64_t split_hash(std::span<const std::size_t> train_rows, std::span<const std::size_t> test_rows);

struct RunResult {
  std::string dataset;
  CascadeConfig config;
  std::size_t repetitions = 0;
  std::vector<double> accuracies;
  std::vector<double> fit_seconds;
  std::vector<std::size_t> levels_grown;
  std::vector<std::uint64_t> seeds;
  std::vector<std::uint64_t> split_hashes;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_fit_seconds = 0.0;
  double std_fit_seconds = 0.0;
};

/// Mean and sample standard deviation (0 for fewer than two values).
std::pair<double, double> mean_std(std::span<const double> values);

/// Repeated holdout: for r in [0, repetitions) split 80/20 with split_seed,
/// fit on train with model_seed, score accuracy on test.
RunResult evaluate(const Dataset& ds, const CascadeConfig& cfg, std::size_t repetitions,
                   std::uint64_t base_seed);

/// evaluate() once per tree count, with identical splits across counts.
std::vector<RunResult> sweep_trees(const Dataset& ds, const CascadeConfig& cfg,
                                   std::span<const std::size_t> tree_counts, std::size_t repetitions,
                                   std::uint64_t base_seed);

/// Entry with the largest mean accuracy (first one on ties).
const RunResult& best_over_trees(std::span<const RunResult> sweep);

struct TTestResult {
  double mean_difference = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t degrees_of_freedom = 0;
};

/// One-sample t-test of a[i] - b[i] against zero, two-sided, with a 95%
/// confidence interval for the mean difference. Throws std::invalid_argument
/// for mismatched or too-short inputs, or differences with zero variance.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

struct TimingResult {
  std::vector<double> seconds;
  double mean = 0.0;
  double std = 0.0;
};

/// Wall-clock time of the fit call alone, per repetition, on the same splits
/// evaluate() uses.
TimingResult measure_fit_time(const Dataset& ds, const CascadeConfig& cfg, std::size_t repetitions,
                              std::uint64_t base_seed);

}  // namespace awdf
