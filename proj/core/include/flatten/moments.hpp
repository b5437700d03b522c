#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "flatten/curves.hpp"
#include "flatten/ifs.hpp"
#include "flatten/measures.hpp"

namespace flatten {

/// Cell 2^-level (index + [0,1)^d) with its mass.
struct DyadicCell {
  std::vector<std::int64_t> index;
  double mass = 0.0;
};

/// Masses of a measure on the level-m dyadic partition. Cells are sorted by
/// index and carry positive mass.
class DyadicHistogram {
 public:
  DyadicHistogram(int level, std::size_t dim, std::vector<DyadicCell> cells);

  int level() const noexcept { return level_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<DyadicCell>& cells() const noexcept { return cells_; }
  double total_mass() const;

 private:
  int level_;
  std::size_t dim_;
  std::vector<DyadicCell> cells_;
};

inline constexpr int kMaxDyadicLevel = 40;
inline constexpr double kInfiniteOrder = std::numeric_limits<double>::infinity();

DyadicHistogram bin(const DiscreteMeasure& m, int level);

/// Aggregates a histogram to a coarser level (level <= h.level()).
DyadicHistogram coarsen(const DyadicHistogram& h, int level);

/// s_m(nu, q) = sum over cells of mass^q; the max cell mass for q = infinity.
double moment_sum(const DyadicHistogram& h, double q);

/// Level histogram of a * b without materializing the convolution: every
/// pair sum is binned directly.
DyadicHistogram convolution_histogram(const DiscreteMeasure& a, const DiscreteMeasure& b, int level);

struct PowerHistogram {
  DyadicHistogram histogram;
  double coalesce_width = 0.0;  // 0 when the half powers were exact
  std::size_t pairs = 0;        // pair sums streamed into the histogram
};

/// Level histogram of nu^{*p}: materializes nu^{*ceil(p/2)} and
/// nu^{*floor(p/2)} and streams their pair sums. When a half power exceeds
/// the atom budget it is rebuilt on a coalescing grid of width `fallback_width`
/// (if positive), and the width is reported.
PowerHistogram convolution_power_histogram(const DiscreteMeasure& nu, unsigned p, int level,
                                           const ConvolveOptions& options = {}, double fallback_width = 0.0);

struct LevelRange {
  int lo = 4;
  int hi = 10;
  std::size_t count() const noexcept { return hi >= lo ? static_cast<std::size_t>(hi - lo + 1) : 0; }
};

struct MomentRow {
  int m = 0;
  double s_m = 0.0;
  double neg_log2 = 0.0;       // -log2 s_m
  double increment = 0.0;      // finite difference of neg_log2 from the previous level (0 on the first)
};

struct LqDimension {
  double tau_q = 0.0;   // least-squares slope of -log2 s_m against m
  double dim_q = 0.0;   // tau_q / (q - 1); tau_q itself for q = infinity
  std::vector<MomentRow> rows;
};

/// Fits the L^q dimension from one histogram per level (any order).
LqDimension lq_dimension_from(const std::vector<DyadicHistogram>& levels, double q);

/// L^q dimension of an already discretized measure over the level range (at
/// least 4 levels).
LqDimension lq_dimension(const DiscreteMeasure& m, double q, LevelRange range);

/// How to build nu^{*p} for a dimension estimate: mu_tau of the IFS, pushed
/// to the curve (if any), convolved p times.
struct MeasureRecipe {
  WeightedIFS ifs;
  std::optional<CurveSpec> curve;
  unsigned power = 1;
  double tau = 0.0;               // 0: 2^-(range.hi + 4)
  ConvolveOptions convolve;
  bool allow_coalesce = true;     // coalesce at 2^-(range.hi + 6) on budget overflow
};

/// Default discretization for a level range: atoms 16x finer than the finest cell.
double default_tau(LevelRange range);

DiscreteMeasure realize_base(const MeasureRecipe& recipe, LevelRange range);

LqDimension lq_dimension(const MeasureRecipe& recipe, double q, LevelRange range);

struct FlatteningRow {
  unsigned p = 1;
  int m = 0;
  double s_m = 0.0;
  double normalized = 0.0;   // s_m(nu^{*p}, 2) * 2^{m (d - epsilon)}
  double dim2_fit = 0.0;     // dim_2(nu^{*p}) over the whole level range
};

struct FlatteningReport {
  std::size_t dim = 0;
  double epsilon = 0.0;
  double tau = 0.0;
  std::vector<FlatteningRow> rows;
  std::vector<double> dim2;              // index p - 1
  std::vector<double> normalized_slope;  // slope of log2 normalized against m, per p
  std::vector<double> coalesce_width;    // per p
  std::size_t pairs_streamed = 0;
};

FlatteningReport flattening_report(const WeightedIFS& ifs, const std::optional<CurveSpec>& curve, unsigned p_max,
                                   LevelRange range, double epsilon, const ConvolveOptions& options = {},
                                   double tau = 0.0);

/// Same report for a given base measure.
FlatteningReport flattening_report(const DiscreteMeasure& nu, unsigned p_max, LevelRange range, double epsilon,
                                   const ConvolveOptions& options = {});

struct L2Improving {
  double ratio = 0.0;   // s_m(theta * nu, 2) / s_m(theta, 2)
  double gate = 0.0;    // s_m(theta, 2) * 2^{m (d - gamma)}; the hypothesis holds when > 1
};

L2Improving l2_improving_check(const DiscreteMeasure& theta, const DiscreteMeasure& nu, int m, double gamma);

struct ConsistencyResult {
  int level = 0;
  double s_m = 0.0;
  double integral = 0.0;
  std::size_t cells = 0;
  double ratio = 0.0;   // s_m / (2^{-d level} integral)
};

/// Compares s_level(nu, 2) with the L^2 norm of nu^ over Ball(2^level). h = 0
/// picks default_grid_step.
ConsistencyResult fourier_moment_consistency(const DiscreteMeasure& m, int level, double h = 0.0);

}  // namespace flatten
