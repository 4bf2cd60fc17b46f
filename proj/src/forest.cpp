#include "awdf/forest.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "awdf/dataset.hpp"
#include "awdf/parallel.hpp"

namespace awdf {

namespace {

// Stream tags under a cross-fit seed; fold f uses {kFoldTag, f}.
constexpr std::uint64_t kFoldAssignmentTag = 1;
constexpr std::uint64_t kFoldTag = 2;
constexpr std::uint64_t kFullForestTag = 3;

// Rescales so the largest weight is exactly 1. Returns an empty vector when
// the weights are all zero.
std::vector<double> unit_scaled(std::span<const double> weights) {
  double max_w = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("weights must be finite and nonnegative");
    max_w = std::max(max_w, w);
  }
  if (!(max_w > 0.0)) return {};
  std::vector<double> out(weights.begin(), weights.end());
  for (double& w : out) w /= max_w;
  return out;
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::baseline: return "baseline";
    case Strategy::resample: return "resample";
    case Strategy::weighted_split: return "weighted-split";
  }
  return "?";
}

std::string_view to_string(TreeKind k) {
  switch (k) {
    case TreeKind::random_subspace: return "random-subspace";
    case TreeKind::completely_random: return "completely-random";
  }
  return "?";
}

std::vector<double> bootstrap_counts(std::span<const double> weights, std::size_t draws, Rng& rng) {
  std::vector<double> cdf(weights.size());
  std::partial_sum(weights.begin(), weights.end(), cdf.begin());
  std::vector<double> counts(weights.size(), 0.0);
  if (cdf.empty() || !(cdf.back() > 0.0)) throw std::invalid_argument("bootstrap_counts: zero total weight");
  std::uniform_real_distribution<double> uniform(0.0, cdf.back());
  // With unit weights the cumulative sums are the integers 1..n, so the lookup
  // reduces to truncation.
  if (std::all_of(weights.begin(), weights.end(), [](double w) { return w == 1.0; })) {
    const std::size_t last = weights.size() - 1;
    for (std::size_t d = 0; d < draws; ++d)
      counts[std::min(static_cast<std::size_t>(uniform(rng)), last)] += 1.0;
    return counts;
  }
  for (std::size_t d = 0; d < draws; ++d) {
    auto it = std::upper_bound(cdf.begin(), cdf.end(), uniform(rng));
    if (it == cdf.end()) --it;
    counts[static_cast<std::size_t>(it - cdf.begin())] += 1.0;
  }
  return counts;
}

Forest Forest::fit(const Matrix& x, std::span<const int> labels, int class_count,
                   std::span<const std::size_t> rows, std::span<const double> weights,
                   const ForestParams& params, std::uint64_t seed) {
  if (params.trees == 0) throw std::invalid_argument("Forest::fit: need at least one tree");
  if (rows.empty()) throw std::invalid_argument("Forest::fit: no rows");
  if (rows.size() != weights.size()) throw std::invalid_argument("Forest::fit: rows and weights differ");
  const std::size_t n = rows.size();

  std::vector<double> scaled = unit_scaled(weights);
  if (scaled.empty() && params.strategy != Strategy::baseline)
    throw std::invalid_argument("Forest::fit: weights sum to zero");
  const std::vector<double> unit(n, 1.0);
  const std::span<const double> draw_weights =
      params.strategy == Strategy::resample ? std::span<const double>(scaled) : std::span<const double>(unit);

  Forest forest;
  forest.kind_ = params.tree.kind;
  forest.strategy_ = params.strategy;
  forest.arity_ = x.cols();
  forest.class_count_ = class_count;
  forest.trees_.resize(params.trees);
  TreeParams tree_params = params.tree;

  parallel_for(params.trees, params.jobs, [&](std::size_t t) {
    Rng rng = make_rng(seed, {t});
    std::vector<double> tree_weights = bootstrap_counts(draw_weights, n, rng);
    if (params.strategy == Strategy::weighted_split) {
      std::vector<double> weighted(tree_weights);
      bool any = false;
      for (std::size_t i = 0; i < n; ++i) {
        weighted[i] *= scaled[i];
        any = any || weighted[i] >= kWeightFloor;
      }
      // A bootstrap holding only zero-weight rows keeps its plain counts.
      if (any) tree_weights = std::move(weighted);
    }
    forest.trees_[t] = Tree::fit(x, labels, class_count, rows, tree_weights, tree_params, rng);
  });
  return forest;
}

void Forest::accumulate(std::span<const double> x, std::span<double> out) const {
  if (x.size() != arity_)
    throw std::invalid_argument("Forest: expected " + std::to_string(arity_) + " features, got " +
                                std::to_string(x.size()));
  if (out.size() != static_cast<std::size_t>(class_count_))
    throw std::invalid_argument("Forest: output length differs from class count");
  // Running mean: identical trees reproduce their leaf values exactly.
  thread_local std::vector<double> mean;
  mean.assign(out.size(), 0.0);
  double count = 0.0;
  for (const auto& tree : trees_) {
    auto leaf = tree.predict(x);
    count += 1.0;
    for (std::size_t c = 0; c < out.size(); ++c) mean[c] += (leaf[c] - mean[c]) / count;
  }
  for (std::size_t c = 0; c < out.size(); ++c) out[c] += mean[c];
}

ClassVector Forest::class_vector(std::span<const double> x) const {
  ClassVector v(static_cast<std::size_t>(class_count_));
  accumulate(x, v.probs);
  return v;
}

Forest Forest::from_trees(std::vector<Tree> trees, TreeKind kind, Strategy strategy) {
  if (trees.empty()) throw std::invalid_argument("Forest::from_trees: empty tree list");
  Forest f;
  f.arity_ = trees.front().arity();
  f.class_count_ = trees.front().class_count();
  for (const auto& t : trees)
    if (t.arity() != f.arity_ || t.class_count() != f.class_count_)
      throw std::invalid_argument("Forest::from_trees: trees disagree on arity or class count");
  f.trees_ = std::move(trees);
  f.kind_ = kind;
  f.strategy_ = strategy;
  return f;
}

CrossFitResult crossfit_class_vectors(const Matrix& x, std::span<const int> labels, int class_count,
                                      std::span<const std::size_t> rows, std::span<const double> weights,
                                      const ForestParams& params, std::size_t k, std::uint64_t seed) {
  if (rows.size() != weights.size()) throw std::invalid_argument("crossfit: rows and weights differ");
  const std::size_t n = rows.size();
  const auto classes = static_cast<std::size_t>(class_count);
  CrossFitResult out;
  out.vectors = Matrix(n, classes);
  out.forest = Forest::fit(x, labels, class_count, rows, weights, params, derive_seed(seed, {kFullForestTag}));

  const std::size_t folds = std::min(k, n);
  if (folds < 2) {
    for (std::size_t i = 0; i < n; ++i) out.forest.accumulate(x.row(rows[i]), out.vectors.row(i));
    return out;
  }

  std::vector<int> row_labels(n);
  for (std::size_t i = 0; i < n; ++i) row_labels[i] = labels[rows[i]];
  out.folds = stratified_folds(row_labels, class_count, folds, derive_seed(seed, {kFoldAssignmentTag}));

  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_rows;
    std::vector<double> train_weights;
    for (std::size_t i = 0; i < n; ++i) {
      if (out.folds[i] == f) continue;
      train_rows.push_back(rows[i]);
      train_weights.push_back(weights[i]);
    }
    const bool any_weight = std::any_of(train_weights.begin(), train_weights.end(),
                                        [](double w) { return w >= kWeightFloor; });
    if (!any_weight) std::fill(train_weights.begin(), train_weights.end(), 1.0);
    const Forest fold_forest = Forest::fit(x, labels, class_count, train_rows, train_weights, params,
                                           derive_seed(seed, {kFoldTag, f}));
    for (std::size_t i = 0; i < n; ++i)
      if (out.folds[i] == f) fold_forest.accumulate(x.row(rows[i]), out.vectors.row(i));
  }
  return out;
}

}  // namespace awdf
