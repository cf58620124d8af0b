#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "qponder/core.hpp"
#include "qponder/metrics.hpp"

using namespace qponder;

namespace {

// Brute-force Pearson, written independently of the library: naive
// one-pass sums over raw values.
double pearson_oracle(const std::vector<double>& x,
                      const std::vector<double>& y) {
  const double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double vx = sxx / n - (sx / n) * (sx / n);
  const double vy = syy / n - (sy / n) * (sy / n);
  return cov / std::sqrt(vx * vy);
}

// Average ranks by explicit counting: rank of v = (#smaller) + (#equal+1)/2,
// 1-based. O(n^2), independent of the library's sort-based approach.
std::vector<double> ranks_oracle(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::size_t smaller = 0, equal = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (x[j] < x[i]) ++smaller;
      if (x[j] == x[i]) ++equal;
    }
    r[i] = double(smaller) + (double(equal) + 1.0) / 2.0;
  }
  return r;
}

double spearman_oracle(const std::vector<double>& x,
                       const std::vector<double>& y) {
  return pearson_oracle(ranks_oracle(x), ranks_oracle(y));
}

std::vector<double> random_vector(core::SeededRng& rng, std::size_t n,
                                  bool with_ties) {
  std::vector<double> v(n);
  for (auto& e : v) {
    e = with_ties ? double(rng.next_below(6)) : rng.next_range(-50.0, 50.0);
  }
  return v;
}

}  // namespace

TEST_CASE("plcc on a known hand case") {
  // x=(1,2,3), y=(2,4,6): perfectly linear.
  CHECK(metrics::plcc(std::vector<double>{1, 2, 3},
                      std::vector<double>{2, 4, 6}) == doctest::Approx(1.0));
  CHECK(metrics::plcc(std::vector<double>{1, 2, 3},
                      std::vector<double>{6, 4, 2}) == doctest::Approx(-1.0));
}

TEST_CASE("srcc hand case with one swapped pair is exactly 0.8") {
  const double v = metrics::srcc(std::vector<double>{1, 2, 3, 4},
                                 std::vector<double>{1, 3, 2, 4});
  CHECK(v == 0.8);
}

TEST_CASE("plcc and srcc match brute-force oracles on random vectors") {
  core::SeededRng rng(2024, 101);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 2 + rng.next_below(99);
    const bool ties = trial % 2 == 1;
    const auto x = random_vector(rng, n, ties);
    const auto y = random_vector(rng, n, ties);
    const bool x_const =
        std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
    const bool y_const =
        std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
    if (x_const || y_const) {
      CHECK_THROWS_AS(metrics::plcc(x, y), metrics::DegenerateVariance);
      continue;
    }
    CHECK(std::abs(metrics::plcc(x, y) - pearson_oracle(x, y)) < 1e-12);
    CHECK(std::abs(metrics::srcc(x, y) - spearman_oracle(x, y)) < 1e-12);
  }
}

TEST_CASE("srcc equals plcc of average ranks, bit for bit") {
  core::SeededRng rng(99, 5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng.next_below(40);
    const auto x = random_vector(rng, n, true);
    const auto y = random_vector(rng, n, true);
    const auto rx = metrics::average_ranks(x);
    const auto ry = metrics::average_ranks(y);
    const bool rx_const = std::all_of(rx.begin(), rx.end(),
                                      [&](double v) { return v == rx[0]; });
    const bool ry_const = std::all_of(ry.begin(), ry.end(),
                                      [&](double v) { return v == ry[0]; });
    if (rx_const || ry_const) continue;
    CHECK(metrics::srcc(x, y) == metrics::plcc(rx, ry));
  }
}

TEST_CASE("average_ranks assigns mean ranks to ties") {
  const auto r = metrics::average_ranks(std::vector<double>{10, 20, 20, 30});
  REQUIRE(r.size() == 4);
  CHECK(r[0] == 1.0);
  CHECK(r[1] == 2.5);
  CHECK(r[2] == 2.5);
  CHECK(r[3] == 4.0);
}

TEST_CASE("average_ranks of an all-tie vector is constant") {
  const auto r = metrics::average_ranks(std::vector<double>{7, 7, 7});
  CHECK(r == std::vector<double>{2.0, 2.0, 2.0});
}

TEST_CASE("plcc is symmetric and invariant to positive affine maps") {
  core::SeededRng rng(7, 23);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 5 + rng.next_below(30);
    const auto x = random_vector(rng, n, false);
    const auto y = random_vector(rng, n, false);
    const double base = metrics::plcc(x, y);
    CHECK(metrics::plcc(y, x) == doctest::Approx(base).epsilon(1e-12));
    std::vector<double> ax(n);
    for (std::size_t i = 0; i < n; ++i) ax[i] = 3.5 * x[i] - 11.0;
    CHECK(metrics::plcc(ax, y) == doctest::Approx(base).epsilon(1e-9));
    std::vector<double> neg(n);
    for (std::size_t i = 0; i < n; ++i) neg[i] = -x[i];
    CHECK(metrics::plcc(neg, y) == doctest::Approx(-base).epsilon(1e-9));
  }
}

TEST_CASE("correlations ignore simultaneous permutation") {
  core::SeededRng rng(8, 24);
  std::vector<double> x = random_vector(rng, 20, false);
  std::vector<double> y = random_vector(rng, 20, false);
  const double p0 = metrics::plcc(x, y);
  const double s0 = metrics::srcc(x, y);
  std::vector<std::size_t> order(20);
  std::iota(order.begin(), order.end(), 0u);
  for (std::size_t i = 19; i > 0; --i)
    std::swap(order[i], order[rng.next_below(i + 1)]);
  std::vector<double> px(20), py(20);
  for (std::size_t i = 0; i < 20; ++i) {
    px[i] = x[order[i]];
    py[i] = y[order[i]];
  }
  CHECK(metrics::plcc(px, py) == doctest::Approx(p0).epsilon(1e-12));
  CHECK(metrics::srcc(px, py) == doctest::Approx(s0).epsilon(1e-12));
}

TEST_CASE("results are clamped into [-1, 1]") {
  core::SeededRng rng(31, 77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.next_below(10);
    auto x = random_vector(rng, n, false);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = 2.0 * x[i] + 1.0;
    const double v = metrics::plcc(x, y);
    CHECK(v <= 1.0);
    CHECK(v >= -1.0);
    CHECK(v == doctest::Approx(1.0));
  }
}

TEST_CASE("degenerate inputs throw with the offending side named") {
  const std::vector<double> c{4, 4, 4, 4};
  const std::vector<double> v{1, 2, 3, 4};
  CHECK_THROWS_AS(metrics::plcc(c, v), metrics::DegenerateVariance);
  CHECK_THROWS_AS(metrics::plcc(v, c), metrics::DegenerateVariance);
  CHECK_THROWS_AS(metrics::srcc(c, v), metrics::DegenerateVariance);
  CHECK_THROWS_WITH_AS(metrics::plcc(c, v),
                       doctest::Contains("first"), metrics::DegenerateVariance);
  CHECK_THROWS_WITH_AS(metrics::plcc(v, c),
                       doctest::Contains("second"), metrics::DegenerateVariance);
}

TEST_CASE("length and finiteness preconditions") {
  const std::vector<double> one{1.0};
  const std::vector<double> two{1.0, 2.0};
  const std::vector<double> three{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(metrics::plcc(one, one), std::invalid_argument);
  CHECK_THROWS_AS(metrics::plcc(two, three), std::invalid_argument);
  const std::vector<double> bad{1.0, std::nan("")};
  CHECK_THROWS_AS(metrics::plcc(two, bad), std::invalid_argument);
  const std::vector<double> inf{1.0, std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(metrics::srcc(inf, two), std::invalid_argument);
}
