#include "awdf/cascade.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "awdf/parallel.hpp"

namespace awdf {

namespace {

constexpr std::uint64_t kHoldoutTag = 11;
constexpr std::uint64_t kLevelTag = 12;

}  // namespace

void CascadeConfig::validate() const {
  if (forests_per_level == 0) throw std::invalid_argument("forests_per_level must be at least 1");
  if (trees_per_forest == 0) throw std::invalid_argument("trees_per_forest must be at least 1");
  if (max_levels == 0) throw std::invalid_argument("max_levels must be at least 1");
  if (early_stop_patience == 0) throw std::invalid_argument("early_stop_patience must be at least 1");
  if (strategy != Strategy::baseline && !scheme)
    throw std::invalid_argument("strategy " + std::string(to_string(strategy)) + " needs a weight scheme");
  if (strategy == Strategy::baseline && scheme)
    throw std::invalid_argument("weight scheme " + std::string(to_string(*scheme)) +
                                " needs the resample or weighted-split strategy");
  if (eta && !(*eta > 0.0 && *eta <= 1.0)) throw std::invalid_argument("eta must lie in (0, 1]");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw std::invalid_argument("validation_fraction must lie in [0, 1)");
  if (min_samples_split < 2) throw std::invalid_argument("min_samples_split must be at least 2");
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::max_levels: return "max-levels";
    case StopReason::no_improvement: return "no-improvement";
    case StopReason::all_perfect: return "all-perfect";
    case StopReason::active_set_exhausted: return "active-set-exhausted";
  }
  return "?";
}

std::size_t CascadeModel::level_arity(std::size_t q) const {
  const auto aug = config_.forests_per_level * static_cast<std::size_t>(class_count_);
  return q == 0 ? input_arity_ : input_arity_ + aug;
}

std::vector<std::size_t> CascadeModel::per_level_train_counts() const {
  std::vector<std::size_t> counts;
  for (const auto& level : levels_) counts.push_back(level.train_count);
  return counts;
}

ClassVector CascadeModel::level_output(std::size_t q, std::span<const double> x,
                                       std::span<const double> previous,
                                       std::span<double> forest_vectors) const {
  const auto classes = static_cast<std::size_t>(class_count_);
  const auto& level = levels_.at(q);
  thread_local std::vector<double> input;
  input.assign(x.begin(), x.end());
  if (q > 0) input.insert(input.end(), previous.begin(), previous.end());
  ClassVector mean(classes);
  std::fill(forest_vectors.begin(), forest_vectors.end(), 0.0);
  for (std::size_t k = 0; k < level.forests.size(); ++k) {
    auto out = forest_vectors.subspan(k * classes, classes);
    level.forests[k].accumulate(input, out);
    for (std::size_t c = 0; c < classes; ++c) mean[c] += out[c];
  }
  const auto m = static_cast<double>(level.forests.size());
  for (auto& p : mean.probs) p /= m;
  return mean;
}

CascadeModel::Prediction CascadeModel::predict(std::span<const double> x) const {
  if (x.size() != input_arity_)
    throw std::invalid_argument("CascadeModel::predict: expected " + std::to_string(input_arity_) +
                                " features, got " + std::to_string(x.size()));
  const std::size_t aug = config_.forests_per_level * static_cast<std::size_t>(class_count_);
  std::vector<double> previous(aug, 0.0);
  std::vector<double> current(aug, 0.0);
  Prediction out;
  for (std::size_t q = 0; q < levels_.size(); ++q) {
    out.probs = level_output(q, x, previous, current);
    out.label = out.probs.argmax();
    out.level = q + 1;
    const auto& eta = levels_[q].eta;
    if (eta && screening_indicator(out.probs, *eta)) break;
    std::swap(previous, current);
  }
  return out;
}

std::vector<CascadeModel::Prediction> CascadeModel::predict_batch(const Matrix& xs, std::size_t jobs) const {
  std::vector<Prediction> out(xs.rows());
  parallel_for(xs.rows(), jobs, [&](std::size_t i) { out[i] = predict(xs.row(i)); });
  return out;
}

double CascadeModel::accuracy(const Dataset& test, std::size_t jobs) const {
  if (test.size() == 0) throw std::invalid_argument("accuracy: empty test set");
  const auto preds = predict_batch(test.features, jobs);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i].label == test.labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

CascadeModel CascadeModel::fit(const Dataset& train, const CascadeConfig& cfg) {
  cfg.validate();
  train.validate();
  auto model = grow(train, cfg, 0);
  if (!cfg.refit || model.grown_rows_.size() == train.size()) return model;
  auto full = grow(train, cfg, model.level_count());
  for (std::size_t q = 0; q < full.levels_.size(); ++q)
    full.levels_[q].monitor_accuracy = model.levels_[q].monitor_accuracy;
  full.stop_reason_ = model.stop_reason_;
  return full;
}

CascadeModel CascadeModel::grow(const Dataset& train, const CascadeConfig& cfg, std::size_t fixed_levels) {
  const int class_count = train.class_count;
  const auto classes = static_cast<std::size_t>(class_count);
  const std::size_t m = train.arity();
  const std::size_t forests = cfg.forests_per_level;
  const std::size_t aug = forests * classes;

  CascadeModel model;
  model.class_count_ = class_count;
  model.input_arity_ = m;
  model.config_ = cfg;

  // Monitoring holdout.
  std::vector<std::size_t> grown(train.size());
  std::iota(grown.begin(), grown.end(), 0);
  std::vector<std::size_t> holdout;
  if (cfg.validation_fraction > 0.0 && fixed_levels == 0) {
    auto part = stratified_partition(train.labels, class_count, 1.0 - cfg.validation_fraction,
                                     derive_seed(cfg.seed, {kHoldoutTag}));
    if (!part.second.empty() && part.first.size() >= 2 * classes) {
      grown = std::move(part.first);
      holdout = std::move(part.second);
    }
  }
  const Dataset fit_set = train.subset(grown);
  const Dataset val_set = train.subset(holdout);
  const std::size_t n = fit_set.size();
  const std::size_t nv = val_set.size();
  model.grown_rows_ = grown;
  model.exit_levels_.assign(n, 0);

  Matrix fit_aug(n, aug);
  Matrix val_aug(nv, aug);
  Matrix val_next(nv, aug);
  std::vector<int> val_pred(nv, 0);
  std::vector<char> val_exited(nv, 0);
  std::vector<int> fit_exit_pred(n, 0);

  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), 0);
  std::vector<double> weights(n, 1.0);

  double best_accuracy = -1.0;
  std::size_t best_levels = 0;
  std::size_t stale = 0;
  model.stop_reason_ = StopReason::max_levels;

  const std::size_t level_limit = fixed_levels > 0 ? fixed_levels : cfg.max_levels;
  for (std::size_t q = 0; q < level_limit; ++q) {
    const std::size_t na = active.size();
    const std::size_t arity = q == 0 ? m : m + aug;
    Matrix x(na, arity);
    std::vector<int> y(na);
    std::vector<double> level_weights(na, 1.0);
    for (std::size_t i = 0; i < na; ++i) {
      const std::size_t r = active[i];
      auto dst = x.row(i);
      auto base = fit_set.features.row(r);
      std::copy(base.begin(), base.end(), dst.begin());
      if (q > 0) {
        auto prev = fit_aug.row(r);
        std::copy(prev.begin(), prev.end(), dst.begin() + static_cast<std::ptrdiff_t>(m));
        level_weights[i] = weights[r];
      }
      y[i] = fit_set.labels[r];
    }
    std::vector<std::size_t> local_rows(na);
    std::iota(local_rows.begin(), local_rows.end(), 0);
    const Strategy strategy = q == 0 ? Strategy::baseline : cfg.strategy;

    CascadeLevel level;
    level.eta = cfg.eta;
    level.train_count = na;
    std::vector<Matrix> oof;
    oof.reserve(forests);
    for (std::size_t k = 0; k < forests; ++k) {
      ForestParams params;
      params.trees = cfg.trees_per_forest;
      params.kind = cfg.forest_kind(k);
      params.strategy = strategy;
      params.tree.kind = params.kind;
      params.tree.min_samples_split = cfg.min_samples_split;
      params.tree.max_depth = cfg.max_depth;
      params.jobs = cfg.jobs;
      auto cf = crossfit_class_vectors(x, y, class_count, local_rows, level_weights, params, cfg.crossfit_k,
                                       derive_seed(cfg.seed, {kLevelTag, q, k}));
      oof.push_back(std::move(cf.vectors));
      level.forests.push_back(std::move(cf.forest));
    }
    model.levels_.push_back(std::move(level));
    model.active_sets_.push_back(active);
    const auto& lvl = model.levels_.back();

    // Mean out-of-fold vectors, raw weights, and next-level features.
    Matrix mean(na, classes);
    for (std::size_t i = 0; i < na; ++i) {
      auto dst = fit_aug.row(active[i]);
      for (std::size_t k = 0; k < forests; ++k)
        for (std::size_t c = 0; c < classes; ++c) {
          dst[k * classes + c] = oof[k](i, c);
          mean(i, c) += oof[k](i, c);
        }
      for (std::size_t c = 0; c < classes; ++c) mean(i, c) /= static_cast<double>(forests);
    }
    std::vector<double> raw;
    bool all_perfect = false;
    if (cfg.scheme) {
      auto wv = update_weights(oof, y, *cfg.scheme, false);
      all_perfect = wv.all_perfect;
      raw = std::move(wv.weights);
    }

    // Monitored accuracy.
    double accuracy = 0.0;
    if (nv > 0) {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < nv; ++i) {
        if (!val_exited[i]) {
          const auto v = model.level_output(q, val_set.features.row(i), val_aug.row(i), val_next.row(i));
          val_pred[i] = v.argmax();
          if (lvl.eta && screening_indicator(v, *lvl.eta)) val_exited[i] = 1;
        }
        hits += val_pred[i] == val_set.labels[i] ? 1 : 0;
      }
      std::swap(val_aug, val_next);
      accuracy = static_cast<double>(hits) / static_cast<double>(nv);
    }

    // Exits.
    std::vector<std::size_t> next_active;
    std::size_t exits = 0;
    for (std::size_t i = 0; i < na; ++i) {
      auto v = mean.row(i);
      const int pred = ClassVector::argmax_of(v);
      bool leave = false;
      if (cfg.eta) {
        leave = cfg.scheme ? weight_screening_indicator(raw[i], *cfg.eta)
                           : screening_indicator(v, *cfg.eta) && pred == y[i];
      } else if (cfg.strategy == Strategy::resample && cfg.scheme) {
        leave = raw[i] < kWeightFloor;
      }
      if (leave) {
        model.exit_levels_[active[i]] = q + 1;
        fit_exit_pred[active[i]] = pred;
        ++exits;
      } else {
        next_active.push_back(active[i]);
        fit_exit_pred[active[i]] = pred;
      }
    }
    model.levels_.back().exits = exits;

    if (nv == 0) {
      std::size_t hits = 0;
      for (std::size_t r = 0; r < n; ++r) hits += fit_exit_pred[r] == fit_set.labels[r] ? 1 : 0;
      accuracy = static_cast<double>(hits) / static_cast<double>(n);
    }
    model.levels_.back().monitor_accuracy = accuracy;

    // Next-level weights over the surviving instances.
    if (cfg.scheme) {
      double total = 0.0;
      for (std::size_t i = 0, j = 0; i < na; ++i) {
        if (j < next_active.size() && next_active[j] == active[i]) {
          weights[active[i]] = raw[i];
          total += raw[i];
          ++j;
        }
      }
      if (cfg.strategy == Strategy::resample && total > 0.0)
        for (auto r : next_active) weights[r] /= total;
    }

    if (fixed_levels > 0) {
      best_levels = q + 1;
    } else if (accuracy > best_accuracy) {
      best_accuracy = accuracy;
      best_levels = q + 1;
      stale = 0;
    } else if (++stale >= cfg.early_stop_patience) {
      model.stop_reason_ = StopReason::no_improvement;
      break;
    }
    if (all_perfect) {
      model.stop_reason_ = StopReason::all_perfect;
      break;
    }
    if (next_active.size() < 2 * classes) {
      model.stop_reason_ = StopReason::active_set_exhausted;
      break;
    }
    active = std::move(next_active);
  }

  // Keep the levels up to the best monitored accuracy.
  model.levels_.resize(best_levels);
  model.active_sets_.resize(best_levels);
  for (auto& e : model.exit_levels_)
    if (e > best_levels) e = 0;
  return model;
}

}  // namespace awdf
