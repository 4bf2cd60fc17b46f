#include "awdf/weights.hpp"

#include <cmath>
#include <stdexcept>

namespace awdf {

std::string_view to_string(WeightScheme s) {
  switch (s) {
    case WeightScheme::one_minus_w: return "1-w";
    case WeightScheme::one_minus_w_squared: return "1-w2";
    case WeightScheme::one_minus_w_sqrt: return "1-wsqrt";
    case WeightScheme::l2: return "l2";
  }
  return "?";
}

std::optional<WeightScheme> parse_weight_scheme(std::string_view name) {
  if (name == "1-w") return WeightScheme::one_minus_w;
  if (name == "1-w2") return WeightScheme::one_minus_w_squared;
  if (name == "1-wsqrt") return WeightScheme::one_minus_w_sqrt;
  if (name == "l2") return WeightScheme::l2;
  return std::nullopt;
}

ClassVector mean_class_vector(std::span<const ClassVector> vectors) {
  if (vectors.empty()) throw std::invalid_argument("mean_class_vector: no vectors");
  const std::size_t classes = vectors.front().size();
  ClassVector mean(classes);
  for (const auto& v : vectors) {
    if (v.size() != classes) throw std::invalid_argument("mean_class_vector: class counts differ");
    for (std::size_t c = 0; c < classes; ++c) mean[c] += v[c];
  }
  const auto m = static_cast<double>(vectors.size());
  for (auto& p : mean.probs) p /= m;
  return mean;
}

double instance_weight(std::span<const double> v, int y, WeightScheme scheme) {
  if (y < 0 || static_cast<std::size_t>(y) >= v.size())
    throw std::invalid_argument("instance_weight: class id out of range");
  const double p = v[static_cast<std::size_t>(y)];
  switch (scheme) {
    case WeightScheme::one_minus_w: return 1.0 - p;
    case WeightScheme::one_minus_w_squared: return 1.0 - p * p;
    case WeightScheme::one_minus_w_sqrt: return 1.0 - std::sqrt(p);
    case WeightScheme::l2: {
      double sq = 0.0;
      for (std::size_t c = 0; c < v.size(); ++c) {
        const double d = v[c] - (c == static_cast<std::size_t>(y) ? 1.0 : 0.0);
        sq += d * d;
      }
      return std::sqrt(sq);
    }
  }
  throw std::invalid_argument("instance_weight: unknown scheme");
}

bool screening_indicator(std::span<const double> v, double eta) {
  if (v.empty()) return false;
  return v[static_cast<std::size_t>(ClassVector::argmax_of(v))] >= eta;
}

bool weight_screening_indicator(double w, double eta) { return 1.0 - w >= eta; }

WeightVector update_weights(std::span<const Matrix> forest_vectors, std::span<const int> labels,
                            WeightScheme scheme, bool normalize) {
  if (forest_vectors.empty()) throw std::invalid_argument("update_weights: no forest outputs");
  const std::size_t n = labels.size();
  const std::size_t classes = forest_vectors.front().cols();
  for (const auto& fv : forest_vectors)
    if (fv.rows() != n || fv.cols() != classes)
      throw std::invalid_argument("update_weights: class vectors not aligned with labels");

  WeightVector out;
  out.mean_vectors = Matrix(n, classes);
  out.weights.resize(n);
  const auto m = static_cast<double>(forest_vectors.size());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto mean = out.mean_vectors.row(i);
    for (const auto& fv : forest_vectors)
      for (std::size_t c = 0; c < classes; ++c) mean[c] += fv(i, c);
    for (auto& p : mean) p /= m;
    out.weights[i] = instance_weight(mean, labels[i], scheme);
    total += out.weights[i];
  }
  if (n > 0 && !(total > 0.0)) {
    out.weights.assign(n, 1.0 / static_cast<double>(n));
    out.normalized = true;
    out.all_perfect = true;
    return out;
  }
  if (normalize) {
    for (auto& w : out.weights) w /= total;
    out.normalized = true;
  }
  return out;
}

WeightVector update_weights(std::span<const std::vector<ClassVector>> level_vectors,
                            std::span<const int> labels, WeightScheme scheme, bool normalize) {
  if (level_vectors.size() != labels.size())
    throw std::invalid_argument("update_weights: class vectors not aligned with labels");
  if (level_vectors.empty()) throw std::invalid_argument("update_weights: no instances");
  const std::size_t forests = level_vectors.front().size();
  if (forests == 0) throw std::invalid_argument("update_weights: no forest outputs");
  const std::size_t classes = level_vectors.front().front().size();
  std::vector<Matrix> per_forest(forests, Matrix(level_vectors.size(), classes));
  for (std::size_t i = 0; i < level_vectors.size(); ++i) {
    if (level_vectors[i].size() != forests)
      throw std::invalid_argument("update_weights: instances have different forest counts");
    for (std::size_t k = 0; k < forests; ++k) {
      if (level_vectors[i][k].size() != classes)
        throw std::invalid_argument("update_weights: class counts differ");
      for (std::size_t c = 0; c < classes; ++c) per_forest[k](i, c) = level_vectors[i][k][c];
    }
  }
  return update_weights(per_forest, labels, scheme, normalize);
}

}  // namespace awdf
