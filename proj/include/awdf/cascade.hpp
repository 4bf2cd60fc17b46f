#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "awdf/class_vector.hpp"
#include "awdf/dataset.hpp"
#include "awdf/forest.hpp"
#include "awdf/weights.hpp"

namespace awdf {

struct CascadeConfig {
  /// M. The first ceil(M/2) forests of a level are random-subspace, the rest
  /// completely-random.
  std::size_t forests_per_level = 4;
  /// T.
  std::size_t trees_per_forest = 100;
  /// Unset runs the plain cascade.
  std::optional<WeightScheme> scheme;
  Strategy strategy = Strategy::baseline;
  /// Confidence threshold; unset disables screening.
  std::optional<double> eta;
  std::size_t max_levels = 20;
  /// Levels without a strict accuracy gain before growth stops.
  std::size_t early_stop_patience = 1;
  /// Folds for training-time class vectors; 0 or 1 uses resubstitution.
  std::size_t crossfit_k = 3;
  /// Share of the training set held out to monitor level growth. With 0 the
  /// out-of-fold accuracy on the training set is monitored instead.
  double validation_fraction = 0.2;
  /// After the level count is chosen on the holdout, retrain that many
  /// levels on the whole training set.
  bool refit = false;
  std::size_t min_samples_split = 2;
  /// 0 means unlimited.
  std::size_t max_depth = 0;
  std::uint64_t seed = 0;
  /// Threads for tree induction; does not change results.
  std::size_t jobs = 1;

  /// Throws std::invalid_argument when fields are inconsistent, including a
  /// weight scheme paired with the baseline strategy or vice versa.
  void validate() const;

  TreeKind forest_kind(std::size_t k) const {
    return k < (forests_per_level + 1) / 2 ? TreeKind::random_subspace : TreeKind::completely_random;
  }
};

inline bool operator==(const CascadeConfig& a, const CascadeConfig& b) {
  return a.forests_per_level == b.forests_per_level && a.trees_per_forest == b.trees_per_forest &&
         a.scheme == b.scheme && a.strategy == b.strategy && a.eta == b.eta &&
         a.max_levels == b.max_levels && a.early_stop_patience == b.early_stop_patience &&
         a.crossfit_k == b.crossfit_k && a.validation_fraction == b.validation_fraction && a.refit == b.refit &&
         a.min_samples_split == b.min_samples_split && a.max_depth == b.max_depth && a.seed == b.seed;
}

enum class StopReason { max_levels, no_improvement, all_perfect, active_set_exhausted };
std::string_view to_string(StopReason r);

struct CascadeLevel {
  std::vector<Forest> forests;
  std::optional<double> eta;
  /// Instances the level's forests were trained on.
  std::size_t train_count = 0;
  /// Accuracy used for growth control after this level.
  double monitor_accuracy = 0.0;
  /// Training instances that left the cascade after this level.
  std::size_t exits = 0;

  bool operator==(const CascadeLevel&) const = default;
};

class CascadeModel {
 public:
  struct Prediction {
    int label = 0;
    ClassVector probs;
    /// 1-based level that produced the prediction.
    std::size_t level = 0;
  };

  static CascadeModel fit(const Dataset& train, const CascadeConfig& cfg);

  /// Runs x through the levels; with screening enabled it stops at the first
  /// level whose mean class vector reaches eta.
  Prediction predict(std::span<const double> x) const;
  std::vector<Prediction> predict_batch(const Matrix& xs, std::size_t jobs = 1) const;
  double accuracy(const Dataset& test, std::size_t jobs = 1) const;

  /// Mean class vector of level q (0-based) for a row, given the previous
  /// level's concatenated forest vectors (empty for q = 0). Writes this
  /// level's concatenated forest vectors into forest_vectors (M*C).
  ClassVector level_output(std::size_t q, std::span<const double> x, std::span<const double> previous,
                           std::span<double> forest_vectors) const;

  const std::vector<CascadeLevel>& levels() const { return levels_; }
  std::size_t level_count() const { return levels_.size(); }
  int class_count() const { return class_count_; }
  std::size_t input_arity() const { return input_arity_; }
  std::size_t level_arity(std::size_t q) const;
  std::vector<std::size_t> per_level_train_counts() const;
  /// Exit level (1-based) of each training instance used for level growth,
  /// 0 if it stayed to the end. Indexed like grown_rows().
  const std::vector<std::size_t>& exit_levels() const { return exit_levels_; }
  /// Rows of the training set the kept levels were trained on. Without
  /// refitting this excludes the monitoring holdout.
  const std::vector<std::size_t>& grown_rows() const { return grown_rows_; }
  /// Training rows active at each kept level, as indices into grown_rows().
  const std::vector<std::vector<std::size_t>>& active_sets() const { return active_sets_; }
  StopReason stop_reason() const { return stop_reason_; }
  const CascadeConfig& config() const { return config_; }

  bool operator==(const CascadeModel&) const = default;

 private:
  // fixed_levels > 0 trains exactly that many levels on every row, without
  // holdout or trimming.
  static CascadeModel grow(const Dataset& train, const CascadeConfig& cfg, std::size_t fixed_levels);

  std::vector<CascadeLevel> levels_;
  int class_count_ = 0;
  std::size_t input_arity_ = 0;
  std::vector<std::size_t> exit_levels_;
  std::vector<std::size_t> grown_rows_;
  std::vector<std::vector<std::size_t>> active_sets_;
  StopReason stop_reason_ = StopReason::max_levels;
  CascadeConfig config_;
};

}  // namespace awdf
