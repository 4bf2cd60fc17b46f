#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <vector>

#include "awdf/matrix.hpp"
#include "awdf/tree.hpp"

namespace oracle {

using awdf::kWeightFloor;
using awdf::Matrix;

// Reference entropy, written out from the definition.
inline double oracle_entropy(const std::vector<double>& sums) {
  double total = 0.0;
  for (double s : sums) total += s;
  double h = 0.0;
  for (double s : sums)
    if (s > 0.0) h += -(s / total) * std::log(s / total) / std::log(2.0);
  return h;
}

struct Candidate {
  std::size_t feature;
  double threshold;
  double gain;
};

// Enumerates every (feature, midpoint) pair and recomputes the gain from
// scratch for each one.
inline std::optional<Candidate> oracle_split(const Matrix& x, const std::vector<int>& y, int classes,
                                             const std::vector<std::size_t>& rows, const std::vector<double>& w,
                                             const std::vector<std::size_t>& features) {
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (w[i] >= kWeightFloor) live.push_back(i);
  if (live.size() < 2) return std::nullopt;
  std::vector<double> parent(static_cast<std::size_t>(classes), 0.0);
  double total = 0.0;
  for (auto i : live) {
    parent[static_cast<std::size_t>(y[rows[i]])] += w[i];
    total += w[i];
  }
  const double h_parent = oracle_entropy(parent);
  std::vector<Candidate> all;
  for (auto f : features) {
    std::set<double> values;
    for (auto i : live) values.insert(x(rows[i], f));
    std::vector<double> sorted(values.begin(), values.end());
    for (std::size_t j = 0; j + 1 < sorted.size(); ++j) {
      const double t = (sorted[j] + sorted[j + 1]) / 2.0;
      std::vector<double> l(static_cast<std::size_t>(classes), 0.0), r(l);
      double wl = 0.0, wr = 0.0;
      for (auto i : live) {
        const auto c = static_cast<std::size_t>(y[rows[i]]);
        if (x(rows[i], f) <= t) {
          l[c] += w[i];
          wl += w[i];
        } else {
          r[c] += w[i];
          wr += w[i];
        }
      }
      const double gain = h_parent - wl / total * oracle_entropy(l) - wr / total * oracle_entropy(r);
      all.push_back({f, t, gain});
    }
  }
  std::optional<Candidate> best;
  for (const auto& c : all) {
    if (!best || c.gain > best->gain + 1e-12) {
      best = c;
    } else if (std::abs(c.gain - best->gain) <= 1e-12 &&
               (c.feature < best->feature || (c.feature == best->feature && c.threshold < best->threshold))) {
      best = c;
    }
  }
  if (best && best->gain > 1e-12) return best;
  return std::nullopt;
}

}  // namespace oracle
