#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace awdf {

/// Probability distribution over C classes.
struct ClassVector {
  std::vector<double> probs;

  ClassVector() = default;
  explicit ClassVector(std::size_t classes) : probs(classes, 0.0) {}
  ClassVector(std::initializer_list<double> p) : probs(p) {}
  explicit ClassVector(std::span<const double> p) : probs(p.begin(), p.end()) {}

  std::size_t size() const { return probs.size(); }
  double operator[](std::size_t c) const { return probs[c]; }
  double& operator[](std::size_t c) { return probs[c]; }

  /// Index of the largest component; ties go to the lowest class id.
  int argmax() const { return argmax_of(probs); }

  double max() const {
    double best = probs.empty() ? 0.0 : probs[0];
    for (double p : probs) best = p > best ? p : best;
    return best;
  }

  /// Nonnegative components summing to 1 within tol.
  bool is_valid(double tol = 1e-9) const {
    if (probs.empty()) return false;
    double sum = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0)) return false;
      sum += p;
    }
    return std::abs(sum - 1.0) <= tol;
  }

  static int argmax_of(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < v.size(); ++c)
      if (v[c] > v[best]) best = c;
    return static_cast<int>(best);
  }

  static ClassVector one_hot(std::size_t classes, int y) {
    ClassVector v(classes);
    v.probs[static_cast<std::size_t>(y)] = 1.0;
    return v;
  }

  bool operator==(const ClassVector&) const = default;
};

}  // namespace awdf
