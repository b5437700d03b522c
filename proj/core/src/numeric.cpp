#include "flatten/numeric.hpp"

#include <cmath>
#include <cstdio>

#include "flatten/error.hpp"

namespace flatten {

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::fabs(sum_) >= std::fabs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

double compensated_sum(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

double pairwise_sum(std::span<const double> xs) {
  constexpr std::size_t kLeaf = 64;
  if (xs.size() <= kLeaf) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

LinearFit least_squares(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw Error(ErrorCode::kInsufficientScales, "least squares needs at least two points");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx <= 0.0) throw Error(ErrorCode::kInsufficientScales, "least squares needs distinct abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.n = xs.size();
  return fit;
}

std::vector<double> geometric_sequence(double first, double ratio, std::size_t count) {
  std::vector<double> out;
  out.reserve(count);
  double v = first;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(v);
    v *= ratio;
  }
  return out;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace flatten
