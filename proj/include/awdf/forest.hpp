#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "awdf/class_vector.hpp"
#include "awdf/matrix.hpp"
#include "awdf/tree.hpp"

namespace awdf {

/// How instance weights reach tree induction.
enum class Strategy {
  /// Plain bootstrap with unit weights; weights are ignored.
  baseline,
  /// Bootstrap drawn with probability proportional to the weights.
  resample,
  /// Plain bootstrap; weights enter the entropy of the splitting rule.
  weighted_split,
};

std::string_view to_string(Strategy s);
std::string_view to_string(TreeKind k);

struct ForestParams {
  std::size_t trees = 100;
  TreeKind kind = TreeKind::random_subspace;
  Strategy strategy = Strategy::baseline;
  TreeParams tree;
  /// Threads used for tree induction; results do not depend on it.
  std::size_t jobs = 1;
};

/// Bootstrap draw of `draws` positions over `weights` (length n), returned as
/// per-position multiplicities. Draws are inverse-CDF lookups of uniform
/// variates; scaling the weights by a power of two leaves the sample
/// unchanged. Forest::fit rescales weights to a maximum of 1 first.
std::vector<double> bootstrap_counts(std::span<const double> weights, std::size_t draws, Rng& rng);

class Forest {
 public:
  /// Trains params.trees trees on the listed rows of x. `weights` is aligned
  /// with `rows`. Tree t draws from the stream derive_seed(seed, {t}).
  /// Throws std::invalid_argument when the weights sum to zero.
  static Forest fit(const Matrix& x, std::span<const int> labels, int class_count,
                    std::span<const std::size_t> rows, std::span<const double> weights,
                    const ForestParams& params, std::uint64_t seed);

  /// Mean of the trees' leaf distributions.
  ClassVector class_vector(std::span<const double> x) const;
  /// Adds the forest's class vector for x into out (length C).
  void accumulate(std::span<const double> x, std::span<double> out) const;

  const std::vector<Tree>& trees() const { return trees_; }
  TreeKind kind() const { return kind_; }
  Strategy strategy() const { return strategy_; }
  std::size_t arity() const { return arity_; }
  int class_count() const { return class_count_; }

  bool operator==(const Forest&) const = default;

  static Forest from_trees(std::vector<Tree> trees, TreeKind kind, Strategy strategy);

 private:
  std::vector<Tree> trees_;
  TreeKind kind_ = TreeKind::random_subspace;
  Strategy strategy_ = Strategy::baseline;
  std::size_t arity_ = 0;
  int class_count_ = 0;
};

/// Out-of-fold class vectors plus a forest trained on every listed row.
struct CrossFitResult {
  /// One row per entry of `rows`, C columns.
  Matrix vectors;
  Forest forest;
  /// Fold of each entry of `rows`; empty when k < 2.
  std::vector<std::size_t> folds;
};

/// Stratified k-fold cross-fitting. For each fold a forest is trained on the
/// other folds (weights restricted to them) and predicts the held-out rows.
/// With k < 2 the vectors come from the full forest itself (resubstitution).
/// A fold whose training weights sum to zero is trained with unit weights.
/// k is capped at the number of rows.
CrossFitResult crossfit_class_vectors(const Matrix& x, std::span<const int> labels, int class_count,
                                      std::span<const std::size_t> rows, std::span<const double> weights,
                                      const ForestParams& params, std::size_t k, std::uint64_t seed);

}  // namespace awdf
