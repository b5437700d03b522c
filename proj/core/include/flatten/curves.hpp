#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "flatten/ifs.hpp"
#include "flatten/polynomial.hpp"

namespace flatten {

/// Polynomial curve x -> (x, g(x)) in R^d on a closed domain. The moment
/// curve V_d is the graph of g(x) = (x^2, ..., x^d).
class CurveSpec {
 public:
  enum class Kind { kMoment, kGraph };

  static CurveSpec moment(std::size_t d, Interval domain);
  /// Graph of g = (components...); ambient dimension is components.size() + 1.
  static CurveSpec graph(std::vector<Polynomial> components, Interval domain);

  Kind kind() const noexcept { return kind_; }
  std::size_t ambient_dim() const noexcept { return components_.size() + 1; }
  const Interval& domain() const noexcept { return domain_; }
  /// g's components (for V_d these are x^2..x^d).
  const std::vector<Polynomial>& components() const noexcept { return components_; }

  /// Same curve on another domain.
  CurveSpec with_domain(Interval domain) const;

 private:
  CurveSpec(Kind kind, std::vector<Polynomial> components, Interval domain);

  Kind kind_ = Kind::kGraph;
  std::vector<Polynomial> components_;
  Interval domain_;
};

/// Default curve domain for a driving IFS: its attractor interval inflated by
/// `inflation` of its length on each side.
Interval default_curve_domain(const WeightedIFS& ifs, double inflation = 0.05);

/// Q(x); the first coordinate is exactly x.
std::vector<double> evaluate(const CurveSpec& c, double x);
void evaluate_into(const CurveSpec& c, double x, std::span<double> out);

/// d x d matrix stored row-major; column k-1 is Q^{(k)}(x), k = 1..d.
struct SquareMatrix {
  std::size_t n = 0;
  std::vector<double> data;

  double operator()(std::size_t r, std::size_t c) const noexcept { return data[r * n + c]; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return data[r * n + c]; }
};

SquareMatrix derivative_matrix(const CurveSpec& c, double x);

/// Determinant by partial-pivot elimination.
double determinant(SquareMatrix m);

/// det [Q'(x) ... Q^{(d)}(x)]; for graphs this equals det G(x).
double nondegeneracy_det(const CurveSpec& c, double x);

/// D(x) = det[g''(x) ... g^{(d)}(x)] as an exact polynomial (computed over the
/// rationals from the exact binary values of the coefficients).
Polynomial determinant_polynomial(const CurveSpec& c);

/// Sorted, pairwise disjoint closed intervals.
class IntervalUnion {
 public:
  IntervalUnion() = default;
  /// Merges overlapping input intervals.
  explicit IntervalUnion(std::vector<Interval> intervals);

  const std::vector<Interval>& intervals() const noexcept { return intervals_; }
  bool empty() const noexcept { return intervals_.empty(); }
  bool contains(double x) const noexcept;
  /// Closures of the connected pieces of `domain` minus this union.
  std::vector<Interval> complement_in(const Interval& domain) const;

 private:
  std::vector<Interval> intervals_;
};

struct GoodSetReport {
  IntervalUnion excluded;        // E = closed delta-neighborhood of the zeros of D
  std::vector<double> roots;     // zeros of D in the domain
  double min_abs_det = 0.0;      // inf of |D| over domain \ E
};

/// All real zeros of a polynomial in [lo, hi], isolated with exact Sturm
/// sequences and squeezed to width <= width.
std::vector<double> real_roots(const Polynomial& p, Interval range, double width = 1e-13);

/// Throws kIdenticallyZero when D == 0 (graph trapped in a hyperplane).
GoodSetReport good_set_complement(const CurveSpec& c, double delta);

struct GoodSetFit {
  double c1 = 0.0;                 // fitted exponent of min|D| ~ delta^c1
  std::vector<double> deltas;
  std::vector<double> minima;
};

GoodSetFit fit_good_set_exponent(const CurveSpec& c, std::span<const double> deltas);

}  // namespace flatten
