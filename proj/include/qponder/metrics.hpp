#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qponder::metrics {

// Raised when a correlation is requested against a constant vector; the
// coefficient is undefined there rather than zero.
class DegenerateVariance : public std::runtime_error {
 public:
  explicit DegenerateVariance(const std::string& side);
};

// Pearson linear correlation. Requires equal lengths >= 2 and finite
// entries (std::invalid_argument otherwise); DegenerateVariance when either
// side is constant. Result is clamped to [-1, 1] so downstream comparisons
// never see rounding spill.
double plcc(std::span<const double> x, std::span<const double> y);

// Fractional ranks, 1-based; ties share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> v);

// Spearman rank correlation, defined as plcc over average_ranks. Same
// error contract as plcc; an input that is constant (all-tied) degenerates.
double srcc(std::span<const double> x, std::span<const double> y);

}  // namespace qponder::metrics
