#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "awdf/class_vector.hpp"
#include "awdf/matrix.hpp"

namespace awdf {

/// Maps an instance's mean class vector v and true class y to a weight for
/// the next cascade level. With p = v[y]:
///   one_minus_w          1 - p
///   one_minus_w_squared  1 - p^2
///   one_minus_w_sqrt     1 - sqrt(p)
///   l2                   ||v - onehot(y)||_2   (range [0, sqrt 2])
enum class WeightScheme { one_minus_w, one_minus_w_squared, one_minus_w_sqrt, l2 };

/// Names used on the command line and in reports: "1-w", "1-w2", "1-wsqrt", "l2".
std::string_view to_string(WeightScheme s);
std::optional<WeightScheme> parse_weight_scheme(std::string_view name);
inline constexpr WeightScheme kAllWeightSchemes[] = {
    WeightScheme::one_minus_w_squared, WeightScheme::one_minus_w_sqrt, WeightScheme::l2,
    WeightScheme::one_minus_w};

/// Componentwise mean of M class vectors of equal length.
ClassVector mean_class_vector(std::span<const ClassVector> vectors);

double instance_weight(std::span<const double> v, int y, WeightScheme scheme);
inline double instance_weight(const ClassVector& v, int y, WeightScheme scheme) {
  return instance_weight(std::span<const double>(v.probs), y, scheme);
}

/// 1 when the largest component of v reaches eta (inclusive).
bool screening_indicator(std::span<const double> v, double eta);
inline bool screening_indicator(const ClassVector& v, double eta) {
  return screening_indicator(std::span<const double>(v.probs), eta);
}

/// 1 when 1 - w reaches eta (inclusive): the instance leaves the cascade.
bool weight_screening_indicator(double w, double eta);

struct WeightVector {
  std::vector<double> weights;
  bool normalized = false;
  /// Every instance was classified perfectly; weights were replaced by 1/n.
  bool all_perfect = false;
  /// Per-instance mean class vectors the weights were computed from.
  Matrix mean_vectors;
};

/// `forest_vectors[k]` holds forest k's class vectors, one row per instance.
/// Computes each instance's mean vector and weight; normalizes to sum 1 when
/// asked. Throws std::invalid_argument on length mismatches.
WeightVector update_weights(std::span<const Matrix> forest_vectors, std::span<const int> labels,
                            WeightScheme scheme, bool normalize);

/// Same, taking one list of M class vectors per instance.
WeightVector update_weights(std::span<const std::vector<ClassVector>> level_vectors,
                            std::span<const int> labels, WeightScheme scheme, bool normalize);

}  // namespace awdf
