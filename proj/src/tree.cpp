#include "awdf/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace awdf {

namespace {

double entropy_of(const double* sums, std::size_t classes, double total) {
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    const double s = sums[c];
    if (s > 0.0) {
      const double q = s / total;
      h -= q * std::log2(q);
    }
  }
  return h;
}

struct Sample {
  std::size_t row;
  double weight;
  int label;
};

struct SortKey {
  double value;
  double weight;
  int label;
};

bool better(const SplitRule& cand, const std::optional<SplitRule>& best) {
  if (!best) return true;
  if (cand.gain > best->gain + kGainTolerance) return true;
  if (cand.gain < best->gain - kGainTolerance) return false;
  if (cand.feature != best->feature) return cand.feature < best->feature;
  return cand.threshold < best->threshold;
}

double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  // Adjacent doubles: keep the partition exact by putting lo on the left.
  return (mid > lo && mid < hi) ? mid : lo;
}

class Builder {
 public:
  Builder(const Matrix& x, int class_count) : x_(x), classes_(static_cast<std::size_t>(class_count)) {
    left_.resize(classes_);
    node_sums_.resize(classes_);
  }

  // Best entropy split of samples[begin, end) over the candidate features.
  std::optional<SplitRule> search(std::span<const Sample> samples,
                                  std::span<const std::size_t> candidates) {
    std::fill(node_sums_.begin(), node_sums_.end(), 0.0);
    double total = 0.0;
    for (const auto& s : samples) {
      node_sums_[static_cast<std::size_t>(s.label)] += s.weight;
      total += s.weight;
    }
    if (total <= 0.0 || samples.size() < 2) return std::nullopt;
    const double parent = entropy_of(node_sums_.data(), classes_, total);

    std::optional<SplitRule> best;
    keys_.resize(samples.size());
    for (auto f : candidates) {
      for (std::size_t i = 0; i < samples.size(); ++i)
        keys_[i] = {x_(samples[i].row, f), samples[i].weight, samples[i].label};
      std::sort(keys_.begin(), keys_.end(),
                [](const SortKey& a, const SortKey& b) { return a.value < b.value; });
      if (!(keys_.front().value < keys_.back().value)) continue;

      std::fill(left_.begin(), left_.end(), 0.0);
      right_ = node_sums_;
      double w_left = 0.0;
      for (std::size_t i = 0; i + 1 < keys_.size(); ++i) {
        const auto c = static_cast<std::size_t>(keys_[i].label);
        left_[c] += keys_[i].weight;
        right_[c] = std::max(0.0, right_[c] - keys_[i].weight);
        w_left += keys_[i].weight;
        if (!(keys_[i].value < keys_[i + 1].value)) continue;
        const double w_right = std::max(0.0, total - w_left);
        if (w_left <= 0.0 || w_right <= 0.0) continue;
        const double gain = parent - (w_left / total) * entropy_of(left_.data(), classes_, w_left) -
                            (w_right / total) * entropy_of(right_.data(), classes_, w_right);
        SplitRule cand{f, midpoint(keys_[i].value, keys_[i + 1].value), gain};
        if (better(cand, best)) best = cand;
      }
    }
    if (best && best->gain > kGainTolerance) return best;
    return std::nullopt;
  }

 private:
  const Matrix& x_;
  std::size_t classes_;
  std::vector<double> left_;
  std::vector<double> right_;
  std::vector<double> node_sums_;
  std::vector<SortKey> keys_;
};

void check_labels(std::span<const int> labels, int class_count, std::span<const std::size_t> rows) {
  for (auto r : rows) {
    if (r >= labels.size()) throw std::out_of_range("row index outside label range");
    if (labels[r] < 0 || labels[r] >= class_count) throw std::invalid_argument("label outside [0, C)");
  }
}

}  // namespace

double weighted_entropy(std::span<const double> class_weight_sums) {
  double total = 0.0;
  for (double w : class_weight_sums) {
    if (w < 0.0) throw std::invalid_argument("weighted_entropy: negative class weight");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("weighted_entropy: all class weights are zero");
  return entropy_of(class_weight_sums.data(), class_weight_sums.size(), total);
}

std::optional<SplitRule> best_split(const Matrix& x, std::span<const int> labels, int class_count,
                                    std::span<const std::size_t> rows, std::span<const double> weights,
                                    std::span<const std::size_t> candidate_features) {
  if (rows.size() != weights.size()) throw std::invalid_argument("best_split: rows and weights differ");
  check_labels(labels, class_count, rows);
  for (auto f : candidate_features)
    if (f >= x.cols()) throw std::out_of_range("best_split: candidate feature out of range");
  if (candidate_features.empty()) return std::nullopt;
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (weights[i] < 0.0) throw std::invalid_argument("best_split: negative weight");
    if (weights[i] >= kWeightFloor) samples.push_back({rows[i], weights[i], labels[rows[i]]});
  }
  Builder builder(x, class_count);
  return builder.search(samples, candidate_features);
}

Tree Tree::fit(const Matrix& x, std::span<const int> labels, int class_count,
               std::span<const std::size_t> rows, std::span<const double> weights,
               const TreeParams& params, Rng& rng) {
  if (rows.size() != weights.size()) throw std::invalid_argument("Tree::fit: rows and weights differ");
  if (class_count < 1) throw std::invalid_argument("Tree::fit: class_count must be positive");
  check_labels(labels, class_count, rows);
  const std::size_t m = x.cols();
  const auto classes = static_cast<std::size_t>(class_count);

  std::vector<Sample> samples;
  samples.reserve(rows.size());
  double max_weight = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (weights[i] < 0.0 || !std::isfinite(weights[i]))
      throw std::invalid_argument("Tree::fit: weights must be finite and nonnegative");
    if (weights[i] >= kWeightFloor) {
      samples.push_back({rows[i], weights[i], labels[rows[i]]});
      max_weight = std::max(max_weight, weights[i]);
    }
  }
  if (samples.empty()) throw std::invalid_argument("Tree::fit: total weight is zero");
  // Scale so the largest weight is exactly 1; equal weights become exact unit weights.
  for (auto& s : samples) s.weight /= max_weight;

  Tree tree;
  tree.arity_ = m;
  tree.class_count_ = class_count;

  Builder builder(x, class_count);
  std::vector<std::size_t> feature_pool(m);
  std::iota(feature_pool.begin(), feature_pool.end(), 0);
  const std::size_t subspace =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m)))));
  std::vector<double> sums(classes);

  struct Task {
    std::uint32_t node;
    std::size_t begin;
    std::size_t end;
    std::size_t depth;
  };
  tree.nodes_.emplace_back();
  std::vector<Task> stack{{0, 0, samples.size(), 0}};

  auto make_leaf = [&](std::uint32_t node, std::size_t begin, std::size_t end) {
    std::fill(sums.begin(), sums.end(), 0.0);
    double total = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      sums[static_cast<std::size_t>(samples[i].label)] += samples[i].weight;
      total += samples[i].weight;
    }
    auto& n = tree.nodes_[node];
    n.feature = -1;
    n.leaf = static_cast<std::uint32_t>(tree.leaf_probs_.size());
    for (std::size_t c = 0; c < classes; ++c) tree.leaf_probs_.push_back(sums[c] / total);
  };

  while (!stack.empty()) {
    const Task task = stack.back();
    stack.pop_back();
    const std::size_t count = task.end - task.begin;
    std::span<const Sample> node_samples(samples.data() + task.begin, count);

    int first_label = node_samples.front().label;
    const bool pure = std::all_of(node_samples.begin(), node_samples.end(),
                                  [&](const Sample& s) { return s.label == first_label; });
    if (pure || count < params.min_samples_split ||
        (params.max_depth > 0 && task.depth >= params.max_depth)) {
      make_leaf(task.node, task.begin, task.end);
      continue;
    }

    std::optional<SplitRule> rule;
    if (params.kind == TreeKind::random_subspace) {
      const std::size_t k = std::min(subspace, m);
      for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, m - 1);
        std::swap(feature_pool[i], feature_pool[pick(rng)]);
      }
      rule = builder.search(node_samples, std::span<const std::size_t>(feature_pool.data(), k));
    } else {
      for (std::size_t i = 0; i < m && !rule; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, m - 1);
        std::swap(feature_pool[i], feature_pool[pick(rng)]);
        const std::size_t f = feature_pool[i];
        double lo = x(node_samples.front().row, f);
        double hi = lo;
        for (const auto& s : node_samples) {
          const double v = x(s.row, f);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        if (!(lo < hi)) continue;
        std::uniform_real_distribution<double> uniform(lo, hi);
        double t = uniform(rng);
        if (!(t < hi)) t = lo;
        rule = SplitRule{f, t, 0.0};
      }
    }
    if (!rule) {
      make_leaf(task.node, task.begin, task.end);
      continue;
    }

    const auto first = samples.begin() + static_cast<std::ptrdiff_t>(task.begin);
    const auto last = samples.begin() + static_cast<std::ptrdiff_t>(task.end);
    const auto mid = std::partition(
        first, last, [&](const Sample& s) { return x(s.row, rule->feature) <= rule->threshold; });
    const auto split = task.begin + static_cast<std::size_t>(mid - first);
    if (split == task.begin || split == task.end) {
      make_leaf(task.node, task.begin, task.end);
      continue;
    }

    const auto left = static_cast<std::uint32_t>(tree.nodes_.size());
    tree.nodes_.emplace_back();
    tree.nodes_.emplace_back();
    auto& n = tree.nodes_[task.node];
    n.feature = static_cast<std::int32_t>(rule->feature);
    n.threshold = rule->threshold;
    n.left = left;
    n.right = left + 1;
    stack.push_back({left + 1, split, task.end, task.depth + 1});
    stack.push_back({left, task.begin, split, task.depth + 1});
  }
  return tree;
}

std::span<const double> Tree::predict(std::span<const double> x) const {
  if (x.size() != arity_)
    throw std::invalid_argument("Tree::predict: expected " + std::to_string(arity_) + " features, got " +
                                std::to_string(x.size()));
  const Node* n = &nodes_.front();
  while (!n->is_leaf())
    n = &nodes_[x[static_cast<std::size_t>(n->feature)] <= n->threshold ? n->left : n->right];
  return leaf_distribution(*n);
}

ClassVector Tree::predict_distribution(std::span<const double> x) const { return ClassVector(predict(x)); }

std::size_t Tree::depth() const {
  std::size_t deepest = 0;
  std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [id, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    const auto& n = nodes_[id];
    if (!n.is_leaf()) {
      stack.emplace_back(n.left, d + 1);
      stack.emplace_back(n.right, d + 1);
    }
  }
  return deepest;
}

Tree Tree::from_nodes(std::vector<Node> nodes, std::vector<double> leaf_probs, std::size_t arity,
                      int class_count) {
  if (nodes.empty()) throw std::invalid_argument("Tree::from_nodes: empty node list");
  Tree t;
  t.nodes_ = std::move(nodes);
  t.leaf_probs_ = std::move(leaf_probs);
  t.arity_ = arity;
  t.class_count_ = class_count;
  for (const auto& n : t.nodes_) {
    if (n.is_leaf()) {
      if (n.leaf + static_cast<std::size_t>(class_count) > t.leaf_probs_.size())
        throw std::invalid_argument("Tree::from_nodes: leaf offset out of range");
    } else if (n.left >= t.nodes_.size() || n.right >= t.nodes_.size() ||
               static_cast<std::size_t>(n.feature) >= arity) {
      throw std::invalid_argument("Tree::from_nodes: malformed internal node");
    }
  }
  return t;
}

}  // namespace awdf
