#include "qponder/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>

namespace qponder::metrics {

DegenerateVariance::DegenerateVariance(const std::string& side)
    : std::runtime_error("correlation undefined: " + side +
                         " vector is constant") {}

namespace {

void validate_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("correlation: length mismatch");
  if (x.size() < 2)
    throw std::invalid_argument("correlation: need at least two points");
  for (double v : x)
    if (!std::isfinite(v))
      throw std::invalid_argument("correlation: non-finite entry");
  for (double v : y)
    if (!std::isfinite(v))
      throw std::invalid_argument("correlation: non-finite entry");
}

// Exact constancy check; a variance epsilon would misclassify tiny but
// genuine spreads.
bool is_constant(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *lo == *hi;
}

}  // namespace

double plcc(std::span<const double> x, std::span<const double> y) {
  validate_pair(x, y);
  if (is_constant(x)) throw DegenerateVariance("first");
  if (is_constant(y)) throw DegenerateVariance("second");

  const std::size_t n = x.size();
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / double(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / double(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });

  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    // Positions i..j (0-based) hold equal values; each gets the mean of the
    // 1-based ranks i+1 .. j+1.
    const double shared = (double(i) + double(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

double srcc(std::span<const double> x, std::span<const double> y) {
  validate_pair(x, y);
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  return plcc(rx, ry);
}

}  // namespace qponder::metrics
