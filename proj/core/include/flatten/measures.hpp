#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "flatten/ifs.hpp"

namespace flatten {

class CurveSpec;

/// Finite atomic probability measure on R^d. Coordinates are stored flat,
/// atom i occupying coords[i*dim, (i+1)*dim).
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  DiscreteMeasure(std::size_t dim, std::vector<double> coords, std::vector<double> weights);

  /// Point mass at `point`.
  static DiscreteMeasure dirac(std::vector<double> point);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return weights_.size(); }
  bool empty() const noexcept { return weights_.empty(); }

  std::span<const double> point(std::size_t i) const noexcept {
    return {coords_.data() + i * dim_, dim_};
  }
  double coord(std::size_t i, std::size_t k) const noexcept { return coords_[i * dim_ + k]; }
  double weight(std::size_t i) const noexcept { return weights_[i]; }

  const std::vector<double>& coords() const noexcept { return coords_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  double total_mass() const;

  /// Per-axis bounding box of the atoms.
  std::vector<Interval> bounding_box() const;

  /// Copy with atoms sorted lexicographically by coordinate (then weight).
  DiscreteMeasure sorted() const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
  std::vector<double> weights_;
};

/// Codimension-1 affine subspace {x : <normal, x> = offset}, unit normal.
struct Hyperplane {
  std::vector<double> normal;
  double offset = 0.0;

  /// Normalizes `normal` (and scales `offset` accordingly).
  static Hyperplane make(std::vector<double> normal, double offset);
  double signed_distance(std::span<const double> x) const noexcept;
};

struct ConvolveOptions {
  /// Cell width of the coalescing grid; 0 merges only bit-identical sums.
  double coalesce_width = 0.0;
  std::size_t atom_budget = 10'000'000;
};

inline constexpr double kMassTolerance = 1e-9;

/// mu_tau = sum_{w in P_tau} p_w delta_{f_w(0)}; atoms are not merged.
DiscreteMeasure discretize(const WeightedIFS& ifs, double tau);

/// Same construction over all words of one fixed length.
DiscreteMeasure discretize_depth(const WeightedIFS& ifs, std::size_t depth);

/// Atom x -> curve(x). Throws kDomainViolation naming the first atom outside
/// the curve's domain.
DiscreteMeasure pushforward(const DiscreteMeasure& mu, const CurveSpec& curve);

DiscreteMeasure convolve(const DiscreteMeasure& a, const DiscreteMeasure& b,
                         const ConvolveOptions& options = {});
DiscreteMeasure convolution_power(const DiscreteMeasure& a, unsigned p,
                                  const ConvolveOptions& options = {});

/// Mass of the closed max-norm ball B(center, r).
double ball_mass(const DiscreteMeasure& m, std::span<const double> center, double r);

/// max over atom-centered closed balls of radius r.
double max_ball_mass(const DiscreteMeasure& m, double r);

struct ScaleRow {
  double scale;
  double value;
};

struct FrostmanFit {
  double exponent = 0.0;
  std::vector<ScaleRow> table;  // (r, max ball mass)
};

/// Conservative scale floor tau^rho for a discretization at tau.
double frostman_scale_floor(double tau, double rho = 0.5);

/// Least-squares slope of log M(r) against log r. `floor`, when positive,
/// rejects radii at or below it.
FrostmanFit frostman_fit(const DiscreteMeasure& m, std::span<const double> radii, double floor = 0.0);

/// Mass of the open slab |<normal, x> - offset| < eps. Needs dim >= 2.
double slab_mass(const DiscreteMeasure& m, const Hyperplane& w, double eps);

struct NonconcentrationRow {
  double eps;
  double worst_mass;
};

struct NonconcentrationResult {
  std::vector<NonconcentrationRow> table;
  double beta = 0.0;               // fitted exponent of worst mass vs eps
  std::size_t hyperplanes_tested = 0;
};

struct NonconcentrationOptions {
  std::size_t random_trials = 256;
  /// Atom-anchored candidates (pairs in d = 2, d-tuples otherwise). All pairs
  /// are used when they fit under this cap, otherwise a seeded sample.
  std::size_t anchored_cap = 1u << 20;
  std::uint64_t seed = 1;
};

/// Heuristic lower bound for sup_W m(W(eps)) over hyperplanes W, per eps.
NonconcentrationResult nonconcentration_sweep(const DiscreteMeasure& m, std::span<const double> eps_list,
                                              const NonconcentrationOptions& options = {});

/// CSV: a header line holding "dim,n_atoms" as values (e.g. "2,1024"), then one
/// "x_1,...,x_d,weight" row per atom, 17 significant digits.
void write_measure_csv(std::ostream& os, const DiscreteMeasure& m);
DiscreteMeasure read_measure_csv(std::istream& is);

/// Largest coordinate distance between atoms of a and b after sorting both,
/// plus the largest weight difference. Infinity when the atom counts differ.
double atom_set_distance(const DiscreteMeasure& a, const DiscreteMeasure& b);

}  // namespace flatten
