#include <doctest.h>

#include <cmath>
#include <numeric>

#include "awdf/weights.hpp"
#include "gen.hpp"

using namespace awdf;

TEST_SUITE("weights") {

TEST_CASE("scheme names") {
  for (auto s : kAllWeightSchemes) CHECK(parse_weight_scheme(to_string(s)) == s);
  CHECK(to_string(WeightScheme::one_minus_w) == "1-w");
  CHECK(to_string(WeightScheme::one_minus_w_squared) == "1-w2");
  CHECK(to_string(WeightScheme::one_minus_w_sqrt) == "1-wsqrt");
  CHECK(to_string(WeightScheme::l2) == "l2");
  CHECK_FALSE(parse_weight_scheme("1-w3"));
}

TEST_CASE("mean class vector") {
  const std::vector<ClassVector> two{{0.4, 0.6}, {0.6, 0.4}};
  const auto m = mean_class_vector(two);
  CHECK(m[0] == doctest::Approx(0.5));
  CHECK(m[1] == doctest::Approx(0.5));
  const std::vector<ClassVector> one{{0.2, 0.3, 0.5}};
  CHECK(mean_class_vector(one) == one[0]);
  CHECK_THROWS_AS(mean_class_vector(std::vector<ClassVector>{}), std::invalid_argument);

  gen::Engine e(1);
  std::vector<ClassVector> four;
  for (int k = 0; k < 4; ++k) four.emplace_back(std::span<const double>(gen::distribution(e, 3)));
  const auto got = mean_class_vector(four);
  for (std::size_t c = 0; c < 3; ++c) {
    const double want = (four[0][c] + four[1][c] + four[2][c] + four[3][c]) / 4.0;
    CHECK(got[c] == doctest::Approx(want).epsilon(1e-15));
  }
}

TEST_CASE("instance weights at the extremes") {
  for (auto s : kAllWeightSchemes)
    for (int y = 0; y < 3; ++y) CHECK(instance_weight(ClassVector::one_hot(3, y), y, s) == 0.0);
  CHECK(instance_weight(ClassVector{0, 1}, 0, WeightScheme::one_minus_w) == 1.0);
  CHECK(instance_weight(ClassVector{0, 1}, 0, WeightScheme::l2) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("instance weights for a split vote") {
  const ClassVector v{0.5, 0.5};
  CHECK(instance_weight(v, 0, WeightScheme::one_minus_w) == doctest::Approx(0.5));
  CHECK(instance_weight(v, 0, WeightScheme::one_minus_w_squared) == doctest::Approx(0.75));
  CHECK(instance_weight(v, 0, WeightScheme::one_minus_w_sqrt) == doctest::Approx(1.0 - std::sqrt(0.5)));
  CHECK(instance_weight(v, 0, WeightScheme::l2) == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("property: weight formulas match direct evaluation") {
  gen::Engine e(2);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = static_cast<std::size_t>(gen::uniform_int(e, 2, 6));
    const auto v = gen::distribution(e, c);
    const int y = gen::uniform_int(e, 0, static_cast<int>(c) - 1);
    const double p = v[static_cast<std::size_t>(y)];
    double d2 = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double o = static_cast<int>(j) == y ? 1.0 : 0.0;
      d2 += (v[j] - o) * (v[j] - o);
    }
    CHECK(instance_weight(v, y, WeightScheme::one_minus_w) == doctest::Approx(1 - p).epsilon(1e-14));
    CHECK(instance_weight(v, y, WeightScheme::one_minus_w_squared) == doctest::Approx(1 - p * p).epsilon(1e-14));
    CHECK(instance_weight(v, y, WeightScheme::one_minus_w_sqrt) == doctest::Approx(1 - std::sqrt(p)).epsilon(1e-14));
    CHECK(instance_weight(v, y, WeightScheme::l2) == doctest::Approx(std::sqrt(d2)).epsilon(1e-14));
  }
}

TEST_CASE("property: weights decrease as the true-class share grows") {
  for (int i = 1; i < 200; ++i) {
    const double p1 = i / 200.0;
    const double p2 = (i + 1) / 200.0;
    for (auto s : kAllWeightSchemes) {
      // All remaining mass on one wrong class.
      const double w1 = instance_weight(ClassVector{p1, 1 - p1, 0}, 0, s);
      const double w2 = instance_weight(ClassVector{p2, 1 - p2, 0}, 0, s);
      CHECK(w2 < w1);
    }
    const ClassVector v{p1, 1 - p1};
    const double sq = instance_weight(v, 0, WeightScheme::one_minus_w_squared);
    const double lin = instance_weight(v, 0, WeightScheme::one_minus_w);
    const double rt = instance_weight(v, 0, WeightScheme::one_minus_w_sqrt);
    CHECK(sq >= lin);
    CHECK(lin >= rt);
  }
}

TEST_CASE("property: zero weight exactly at the one-hot vector") {
  gen::Engine e(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = static_cast<std::size_t>(gen::uniform_int(e, 2, 5));
    const int y = gen::uniform_int(e, 0, static_cast<int>(c) - 1);
    const auto v = gen::distribution(e, c);
    for (auto s : kAllWeightSchemes) CHECK(instance_weight(v, y, s) > 0.0);
  }
}

TEST_CASE("value screening") {
  CHECK(screening_indicator(ClassVector{0.96, 0.04}, 0.95));
  CHECK_FALSE(screening_indicator(ClassVector{0.94, 0.06}, 0.95));
  CHECK(screening_indicator(ClassVector{0.25, 0.25, 0.25, 0.25}, 0.25));
}

TEST_CASE("weight screening") {
  CHECK(weight_screening_indicator(0.03, 0.95));
  CHECK_FALSE(weight_screening_indicator(0.06, 0.95));
  CHECK(weight_screening_indicator(0.05, 0.95));
}

TEST_CASE("property: screening is monotone in eta") {
  gen::Engine e(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto v = gen::distribution(e, static_cast<std::size_t>(gen::uniform_int(e, 2, 5)));
    bool previous = true;
    for (int k = 1; k <= 100; ++k) {
      const bool now = screening_indicator(v, k / 100.0);
      CHECK((!now || previous));
      previous = now;
    }
  }
}

TEST_CASE("update weights: all perfect") {
  std::vector<std::vector<ClassVector>> level{{ClassVector{1, 0}, ClassVector{1, 0}},
                                              {ClassVector{0, 1}, ClassVector{0, 1}},
                                              {ClassVector{1, 0}, ClassVector{1, 0}}};
  const std::vector<int> y{0, 1, 0};
  const auto wv = update_weights(level, y, WeightScheme::one_minus_w, true);
  CHECK(wv.all_perfect);
  for (double w : wv.weights) CHECK(w == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("update weights: normalisation") {
  // p = 0.8 and p = 0.4 under 1-w give raw weights 0.2 and 0.6.
  std::vector<std::vector<ClassVector>> level{{ClassVector{0.8, 0.2}}, {ClassVector{0.6, 0.4}}};
  const std::vector<int> y{0, 1};
  const auto raw = update_weights(level, y, WeightScheme::one_minus_w, false);
  CHECK(raw.weights[0] == doctest::Approx(0.2));
  CHECK(raw.weights[1] == doctest::Approx(0.6));
  CHECK_FALSE(raw.normalized);
  const auto norm = update_weights(level, y, WeightScheme::one_minus_w, true);
  CHECK(norm.weights[0] == doctest::Approx(0.25));
  CHECK(norm.weights[1] == doctest::Approx(0.75));
  CHECK(norm.normalized);
}

TEST_CASE("update weights: five-instance mixed case") {
  gen::Engine e(5);
  const std::size_t n = 5, forests = 4, classes = 3;
  std::vector<Matrix> by_forest(forests, Matrix(n, classes));
  std::vector<std::vector<ClassVector>> by_instance(n);
  const auto y = gen::covering_labels(e, n, 3);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < forests; ++k) {
      const auto v = gen::distribution(e, classes);
      for (std::size_t c = 0; c < classes; ++c) by_forest[k](i, c) = v[c];
      by_instance[i].emplace_back(std::span<const double>(v));
    }
  for (auto s : kAllWeightSchemes) {
    const auto a = update_weights(by_forest, y, s, true);
    const auto b = update_weights(by_instance, y, s, true);
    std::vector<double> want(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> mean(classes, 0.0);
      for (std::size_t k = 0; k < forests; ++k)
        for (std::size_t c = 0; c < classes; ++c) mean[c] += by_forest[k](i, c) / forests;
      want[i] = instance_weight(mean, y[i], s);
    }
    const double total = std::accumulate(want.begin(), want.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(a.weights[i] == doctest::Approx(want[i] / total).epsilon(1e-12));
      CHECK(b.weights[i] == doctest::Approx(want[i] / total).epsilon(1e-12));
    }
    CHECK(a.mean_vectors.rows() == n);
  }
  CHECK_THROWS_AS(update_weights(by_forest, std::vector<int>{0, 1}, WeightScheme::l2, false), std::invalid_argument);
}

TEST_CASE("property: normalised weights form a distribution") {
  gen::Engine e(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<std::size_t>(gen::uniform_int(e, 1, 30));
    const auto classes = static_cast<std::size_t>(gen::uniform_int(e, 2, 4));
    const auto forests = static_cast<std::size_t>(gen::uniform_int(e, 1, 4));
    const auto y = gen::labels(e, n, static_cast<int>(classes));
    std::vector<Matrix> vs(forests, Matrix(n, classes));
    for (auto& m : vs)
      for (std::size_t i = 0; i < n; ++i) {
        // Some instances perfectly classified.
        const auto v = gen::uniform(e) < 0.3 ? ClassVector::one_hot(classes, y[i]).probs : gen::distribution(e, classes);
        for (std::size_t c = 0; c < classes; ++c) m(i, c) = v[c];
      }
    for (auto s : kAllWeightSchemes) {
      const auto wv = update_weights(vs, y, s, true);
      double total = 0.0;
      for (double w : wv.weights) {
        CHECK(w >= 0.0);
        total += w;
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

}
