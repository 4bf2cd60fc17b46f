#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "awdf/class_vector.hpp"
#include "awdf/matrix.hpp"
#include "awdf/random.hpp"

namespace awdf {

enum class TreeKind {
  /// Best entropy split among ceil(sqrt(m)) randomly drawn features.
  random_subspace,
  /// One random feature and a uniform random threshold per node.
  completely_random,
};

/// Weights below this are treated as exactly zero.
inline constexpr double kWeightFloor = 1e-12;

/// Gains within this distance are treated as ties.
inline constexpr double kGainTolerance = 1e-12;

/// value <= threshold goes left, value > threshold goes right.
struct SplitRule {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

/// Entropy in bits of the distribution proportional to class_weight_sums.
/// Throws std::invalid_argument when every component is zero.
double weighted_entropy(std::span<const double> class_weight_sums);

/// Exhaustive search for the (feature, midpoint) pair with the largest
/// weighted information gain among candidate_features. `weights` is aligned
/// with `rows`. Returns nullopt when no split has positive gain. Ties go to
/// the lowest feature index, then the lowest threshold.
std::optional<SplitRule> best_split(const Matrix& x, std::span<const int> labels, int class_count,
                                    std::span<const std::size_t> rows, std::span<const double> weights,
                                    std::span<const std::size_t> candidate_features);

struct TreeParams {
  TreeKind kind = TreeKind::random_subspace;
  std::size_t min_samples_split = 2;
  /// 0 means unlimited.
  std::size_t max_depth = 0;
};

class Tree {
 public:
  struct Node {
    /// -1 marks a leaf.
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    /// Offset of the leaf distribution in the leaf table.
    std::uint32_t leaf = 0;

    bool is_leaf() const { return feature < 0; }
    bool operator==(const Node&) const = default;
  };

  /// Induces a tree on x.row(rows[i]) with weight weights[i]. Rows whose
  /// weight falls below kWeightFloor are dropped before anything else, so
  /// they influence neither thresholds nor leaves. The sum of weights must
  /// be positive.
  static Tree fit(const Matrix& x, std::span<const int> labels, int class_count,
                  std::span<const std::size_t> rows, std::span<const double> weights,
                  const TreeParams& params, Rng& rng);

  /// Leaf distribution for x. Throws std::invalid_argument on arity mismatch.
  std::span<const double> predict(std::span<const double> x) const;
  ClassVector predict_distribution(std::span<const double> x) const;

  std::size_t arity() const { return arity_; }
  int class_count() const { return class_count_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const { return leaf_probs_.size() / static_cast<std::size_t>(class_count_); }
  std::size_t depth() const;
  const std::vector<Node>& nodes() const { return nodes_; }
  std::span<const double> leaf_distribution(const Node& n) const {
    return {leaf_probs_.data() + n.leaf, static_cast<std::size_t>(class_count_)};
  }

  bool operator==(const Tree&) const = default;

  /// Hand-assembled trees for tests and tooling.
  static Tree from_nodes(std::vector<Node> nodes, std::vector<double> leaf_probs, std::size_t arity,
                         int class_count);

 private:
  std::vector<Node> nodes_;
  std::vector<double> leaf_probs_;
  std::size_t arity_ = 0;
  int class_count_ = 0;
};

}  // namespace awdf
