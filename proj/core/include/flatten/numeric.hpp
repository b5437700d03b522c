#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace flatten {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_sum(std::span<const double> xs);

/// Pairwise (cascade) summation; deterministic for a fixed input order.
double pairwise_sum(std::span<const double> xs);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t n = 0;
};

/// Ordinary least squares y ~ slope * x + intercept. Needs at least two
/// distinct x values.
LinearFit least_squares(std::span<const double> xs, std::span<const double> ys);

/// Geometric sequence first, first*ratio, ... with `count` terms.
std::vector<double> geometric_sequence(double first, double ratio, std::size_t count);

/// Shortest round-trip-safe text: %.17g.
std::string format_double(double x);

}  // namespace flatten
