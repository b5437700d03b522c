#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "flatten/ifs.hpp"
#include "flatten/measures.hpp"

namespace flatten {

using Complex = std::complex<double>;

/// xi = (theta, zeta) in R x R^{d-1}; zeta is empty on the line.
struct Frequency {
  double theta = 0.0;
  std::vector<double> zeta;

  std::size_t dim() const noexcept { return zeta.size() + 1; }
  double zeta_norm() const noexcept;  // max norm
};

/// e(x) = exp(2 pi i x).
Complex unit_phase(double x) noexcept;

namespace region {
struct Ball {
  double R;
};
/// |theta|^eps < ||zeta|| <= R, inside Ball(R).
struct C {
  double R;
  double epsilon;
};
/// ||zeta|| <= |theta|^eps <= R^eps.
struct E {
  double R;
  double epsilon;
};
struct Box {
  std::vector<Interval> bounds;
};
}  // namespace region

using FrequencyRegion = std::variant<region::Ball, region::C, region::E, region::Box>;

std::string region_name(const FrequencyRegion& r);

/// Checks R >= 1, eps in (0, 1]; C and E need d >= 2.
void validate_region(const FrequencyRegion& r, std::size_t dim);

/// Max-norm membership tests. Ties ||zeta|| = |theta|^eps go to E.
bool region_contains(const FrequencyRegion& r, const Frequency& xi);

/// nu^(xi) = sum_j w_j e(<xi, x_j>).
Complex ft_discrete(const DiscreteMeasure& m, const Frequency& xi);
Complex ft_discrete(const DiscreteMeasure& m, double theta);  // d = 1

/// Fourier transform of a self-similar measure at theta to a guaranteed
/// accuracy, through the cut-set discretization at a tau small enough that
/// 2 pi tau |theta| max|x| <= tol. Discretizations are cached on a dyadic tau
/// ladder, so repeated calls at nearby |theta| reuse atoms.
class SelfSimilarTransform {
 public:
  explicit SelfSimilarTransform(WeightedIFS ifs, std::size_t atom_budget = 20'000'000);

  Complex operator()(double theta, double tol);

  /// |mu^(q step)| for q = 0..count-1, each to accuracy tol. Phases advance
  /// by rotation along the grid, re-anchored every 256 samples.
  std::vector<double> abs_on_grid(double step, std::size_t count, double tol);

  /// tau needed for (theta, tol); 1 means no discretization is needed.
  double required_tau(double theta, double tol) const noexcept;
  /// Largest atom count materialized so far.
  std::size_t peak_atoms() const noexcept { return peak_atoms_; }
  const WeightedIFS& ifs() const noexcept { return ifs_; }

 private:
  const DiscreteMeasure& discretization(int ladder_index);
  int ladder_index(double theta, double tol) const noexcept;

  WeightedIFS ifs_;
  double support_radius_ = 0.0;
  std::size_t atom_budget_;
  std::size_t peak_atoms_ = 0;
  std::map<int, DiscreteMeasure> cache_;
};

/// One-shot convenience around SelfSimilarTransform. tol in (0, 0.1].
Complex ft_selfsimilar(const WeightedIFS& ifs, double theta, double tol);

struct LpIntegral {
  double estimate = 0.0;
  std::size_t cells = 0;
};

inline constexpr std::size_t kDefaultGridBudget = 1'000'000'000;

/// Default quadrature step: 1/4 for p * diam <= 1, shrinking as 1/(4 p diam).
double default_grid_step(const DiscreteMeasure& m, double p);

/// Midpoint rule for the integral of |nu^|^p over `region` on the axis-aligned
/// grid of step h centered at the origin, counting cells whose centers lie in
/// the region. Budget is on (cells x atoms) evaluations.
///
/// For p = 2 on Ball/Box regions the same midpoint sum is evaluated in closed
/// form through pairwise atom differences (a product of Dirichlet kernels),
/// which costs O(n^2 d) instead of O(cells n).
LpIntegral lp_region_integral(const DiscreteMeasure& m, const FrequencyRegion& region, double p, double h,
                              std::size_t grid_budget = kDefaultGridBudget);

/// The cell-by-cell scan, regardless of p or region shape.
LpIntegral lp_region_integral_scan(const DiscreteMeasure& m, const FrequencyRegion& region, double p, double h,
                                   std::size_t grid_budget = kDefaultGridBudget);

/// The closed-form p = 2 route over a box grid [lo_k, lo_k + n_k h].
LpIntegral l2_box_integral_pairwise(const DiscreteMeasure& m, std::span<const Interval> box, double h);

struct SuperlevelScan {
  std::size_t count = 0;       // marked unit intervals [k, k+1)
  double threshold = 0.0;      // R^-delta
  std::size_t samples = 0;
};

/// Counts unit intervals [k, k+1) within [-R, R) containing a step-1/4
/// sample theta with |mu^(theta)| >= R^-delta.
SuperlevelScan superlevel_cover_count(const WeightedIFS& ifs, double R, double delta, double tol);
SuperlevelScan superlevel_cover_count(SelfSimilarTransform& transform, double R, double delta, double tol);
/// Same scan for a measure on the line, evaluated exactly.
SuperlevelScan superlevel_cover_count(const DiscreteMeasure& m, double R, double delta);

struct DecayFit {
  double gamma = 0.0;                  // min over rays and theta of fitted exponents
  std::vector<double> per_ray;         // per (ray, theta) pair
};

/// Samples |nu^(theta, s u)| at s = 2^(j/4) for s in [1, R], theta in {0, 1},
/// fits -slope of the log upper envelope against log s.
DecayFit pointwise_decay_fit(const DiscreteMeasure& m, const std::vector<std::vector<double>>& rays, double R);

}  // namespace flatten
