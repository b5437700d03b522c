#include "flatten/moments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "detail/point_map.hpp"
#include "flatten/error.hpp"
#include "flatten/numeric.hpp"
#include "flatten/parallel.hpp"
#include "flatten/spectral.hpp"

namespace flatten {

namespace {

constexpr double kIndexLimit = 4.0e18;
constexpr std::size_t kDenseCellCap = std::size_t{1} << 22;

void check_level(int level) {
  if (level < 0 || level > kMaxDyadicLevel) {
    throw Error(ErrorCode::kLevelOutOfRange, "level " + std::to_string(level) + " outside [0, " +
                                                 std::to_string(kMaxDyadicLevel) + "]");
  }
}

std::int64_t cell_of(double scaled) {
  const double f = std::floor(scaled);
  if (!(std::fabs(f) < kIndexLimit)) {
    throw Error(ErrorCode::kLevelOutOfRange, "cell index " + format_double(f) + " does not fit in 64 bits");
  }
  return static_cast<std::int64_t>(f);
}

/// Sorts (index, mass) pairs by index and merges equal indices in input order.
std::vector<DyadicCell> merge_cells(std::vector<DyadicCell> cells) {
  std::stable_sort(cells.begin(), cells.end(),
                   [](const DyadicCell& a, const DyadicCell& b) { return a.index < b.index; });
  std::vector<DyadicCell> out;
  for (auto& c : cells) {
    if (!out.empty() && out.back().index == c.index) {
      out.back().mass += c.mass;
    } else {
      out.push_back(std::move(c));
    }
  }
  std::erase_if(out, [](const DyadicCell& c) { return !(c.mass > 0.0); });
  return out;
}

}  // namespace

DyadicHistogram::DyadicHistogram(int level, std::size_t dim, std::vector<DyadicCell> cells)
    : level_(level), dim_(dim), cells_(std::move(cells)) {
  check_level(level);
  for (const auto& c : cells_) {
    if (c.index.size() != dim_) throw Error(ErrorCode::kDimMismatch, "cell index has the wrong dimension");
  }
}

double DyadicHistogram::total_mass() const {
  CompensatedSum s;
  for (const auto& c : cells_) s.add(c.mass);
  return s.value();
}

DyadicHistogram bin(const DiscreteMeasure& m, int level) {
  check_level(level);
  std::vector<DyadicCell> cells(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    cells[i].index.resize(m.dim());
    for (std::size_t k = 0; k < m.dim(); ++k) cells[i].index[k] = cell_of(std::ldexp(m.coord(i, k), level));
    cells[i].mass = m.weight(i);
  }
  return DyadicHistogram(level, m.dim(), merge_cells(std::move(cells)));
}

DyadicHistogram coarsen(const DyadicHistogram& h, int level) {
  check_level(level);
  if (level > h.level()) {
    throw Error(ErrorCode::kLevelOutOfRange, "cannot refine a level-" + std::to_string(h.level()) + " histogram");
  }
  const int shift = h.level() - level;
  std::vector<DyadicCell> cells = h.cells();
  for (auto& c : cells) {
    for (auto& k : c.index) k >>= shift;  // arithmetic shift: floor division by 2^shift
  }
  return DyadicHistogram(level, h.dim(), merge_cells(std::move(cells)));
}

double moment_sum(const DyadicHistogram& h, double q) {
  if (q == kInfiniteOrder) {
    double best = 0.0;
    for (const auto& c : h.cells()) best = std::max(best, c.mass);
    return best;
  }
  if (!(q > 1.0)) throw Error(ErrorCode::kInvalidArgument, "moment order must exceed 1");
  std::vector<double> terms;
  terms.reserve(h.cells().size());
  for (const auto& c : h.cells()) terms.push_back(q == 2.0 ? c.mass * c.mass : std::pow(c.mass, q));
  return pairwise_sum(terms);
}

DyadicHistogram convolution_histogram(const DiscreteMeasure& a, const DiscreteMeasure& b, int level) {
  check_level(level);
  if (a.dim() != b.dim()) throw Error(ErrorCode::kDimMismatch, "convolution of measures of different dimension");
  const std::size_t d = a.dim();
  if (a.empty() || b.empty()) return DyadicHistogram(level, d, {});

  // Scaling by 2^level is exact, so floor(x' + y') is the cell of x + y.
  std::vector<double> sa(a.coords().size()), sb(b.coords().size());
  for (std::size_t i = 0; i < sa.size(); ++i) sa[i] = std::ldexp(a.coords()[i], level);
  for (std::size_t i = 0; i < sb.size(); ++i) sb[i] = std::ldexp(b.coords()[i], level);

  std::vector<std::int64_t> lo(d), extent(d);
  double cells = 1.0;
  const auto box_a = a.bounding_box();
  const auto box_b = b.bounding_box();
  for (std::size_t k = 0; k < d; ++k) {
    lo[k] = cell_of(std::ldexp(box_a[k].lo, level) + std::ldexp(box_b[k].lo, level)) - 1;
    const std::int64_t hi = cell_of(std::ldexp(box_a[k].hi, level) + std::ldexp(box_b[k].hi, level)) + 1;
    extent[k] = hi - lo[k] + 1;
    cells *= static_cast<double>(extent[k]);
  }

  std::vector<DyadicCell> out;
  if (cells <= static_cast<double>(kDenseCellCap)) {
    const auto n_cells = static_cast<std::size_t>(cells);
    // Chunk count depends only on the problem size, never on the thread count.
    const std::size_t chunks = std::clamp<std::size_t>(kDenseCellCap / std::max<std::size_t>(n_cells, 1) / 4, 1,
                                                       std::min<std::size_t>(16, a.size()));
    std::vector<std::vector<double>> partial(chunks);
    parallel_for_chunks(chunks, [&](std::size_t c) {
      auto& grid = partial[c];
      grid.assign(n_cells, 0.0);
      const ChunkRange range = chunk_range(a.size(), chunks, c);
      for (std::size_t i = range.begin; i < range.end; ++i) {
        const double* xa = &sa[i * d];
        const double wa = a.weight(i);
        for (std::size_t j = 0; j < b.size(); ++j) {
          const double* xb = &sb[j * d];
          std::size_t flat = 0;
          for (std::size_t k = 0; k < d; ++k) {
            const auto idx = static_cast<std::int64_t>(std::floor(xa[k] + xb[k])) - lo[k];
            flat = flat * static_cast<std::size_t>(extent[k]) + static_cast<std::size_t>(idx);
          }
          grid[flat] += wa * b.weight(j);
        }
      }
    });
    for (std::size_t f = 0; f < n_cells; ++f) {
      double mass = 0.0;
      for (std::size_t c = 0; c < chunks; ++c) mass += partial[c][f];
      if (!(mass > 0.0)) continue;
      DyadicCell cell;
      cell.index.resize(d);
      std::size_t rem = f;
      for (std::size_t k = d; k-- > 0;) {
        cell.index[k] = lo[k] + static_cast<std::int64_t>(rem % static_cast<std::size_t>(extent[k]));
        rem /= static_cast<std::size_t>(extent[k]);
      }
      cell.mass = mass;
      out.push_back(std::move(cell));
    }
    return DyadicHistogram(level, d, std::move(out));
  }

  detail::PointAccumulator acc(d, std::min<std::size_t>(a.size() * b.size(), std::size_t{1} << 20));
  std::vector<std::uint64_t> key(d);
  const std::vector<double> none(d, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      for (std::size_t k = 0; k < d; ++k) {
        key[k] = static_cast<std::uint64_t>(cell_of(sa[i * d + k] + sb[j * d + k]));
      }
      acc.add(key, none, a.weight(i) * b.weight(j));
    }
  }
  out.resize(acc.size());
  for (std::size_t e = 0; e < acc.size(); ++e) {
    out[e].index.resize(d);
    for (std::size_t k = 0; k < d; ++k) out[e].index[k] = static_cast<std::int64_t>(acc.key(e)[k]);
    out[e].mass = acc.weight(e);
  }
  return DyadicHistogram(level, d, merge_cells(std::move(out)));
}

namespace {

/// nu^{*k} for increasing k, reusing lower powers. A power that overflows the
/// atom budget is rebuilt on the coalescing grid when a width is available.
class PowerLadder {
 public:
  PowerLadder(const DiscreteMeasure& nu, ConvolveOptions options, double fallback_width)
      : options_(options), fallback_width_(fallback_width) {
    powers_.emplace(1, Entry{nu, 0.0});
  }

  struct Entry {
    DiscreteMeasure measure;
    double coalesce_width;
  };

  const Entry& get(unsigned k) {
    auto it = powers_.find(k);
    if (it != powers_.end()) return it->second;
    const Entry& prev = get(k - 1);
    const DiscreteMeasure& base = powers_.at(1).measure;
    ConvolveOptions opts = options_;
    if (prev.coalesce_width > 0.0) opts.coalesce_width = prev.coalesce_width;
    try {
      Entry e{convolve(prev.measure, base, opts), opts.coalesce_width};
      return powers_.emplace(k, std::move(e)).first->second;
    } catch (const Error& err) {
      if (err.code() != ErrorCode::kAtomBudgetExceeded || !(fallback_width_ > 0.0) || opts.coalesce_width > 0.0) {
        throw;
      }
    }
    opts.coalesce_width = fallback_width_;
    Entry e{convolve(prev.measure, base, opts), fallback_width_};
    return powers_.emplace(k, std::move(e)).first->second;
  }

 private:
  ConvolveOptions options_;
  double fallback_width_;
  std::map<unsigned, Entry> powers_;
};

PowerHistogram power_histogram(PowerLadder& ladder, unsigned p, int level) {
  if (p == 0) throw Error(ErrorCode::kInvalidArgument, "convolution power must be at least 1");
  if (p == 1) {
    const auto& nu = ladder.get(1).measure;
    return {bin(nu, level), 0.0, nu.size()};
  }
  const auto& hi = ladder.get((p + 1) / 2);
  const auto& lo = ladder.get(p / 2);
  PowerHistogram out{convolution_histogram(hi.measure, lo.measure, level),
                     std::max(hi.coalesce_width, lo.coalesce_width), hi.measure.size() * lo.measure.size()};
  return out;
}

std::vector<DyadicHistogram> level_ladder(const DyadicHistogram& finest, LevelRange range) {
  std::vector<DyadicHistogram> levels;
  for (int m = range.lo; m <= range.hi; ++m) levels.push_back(coarsen(finest, m));
  return levels;
}

void check_range(LevelRange range) {
  if (range.lo < 0 || range.hi > kMaxDyadicLevel) {
    throw Error(ErrorCode::kLevelOutOfRange, "level range must lie in [0, " + std::to_string(kMaxDyadicLevel) + "]");
  }
  if (range.count() < 4) throw Error(ErrorCode::kInsufficientScales, "a dimension fit needs at least 4 levels");
}

}  // namespace

PowerHistogram convolution_power_histogram(const DiscreteMeasure& nu, unsigned p, int level,
                                           const ConvolveOptions& options, double fallback_width) {
  PowerLadder ladder(nu, options, fallback_width);
  return power_histogram(ladder, p, level);
}

LqDimension lq_dimension_from(const std::vector<DyadicHistogram>& levels, double q) {
  if (levels.size() < 4) throw Error(ErrorCode::kInsufficientScales, "a dimension fit needs at least 4 levels");
  std::vector<const DyadicHistogram*> sorted;
  for (const auto& h : levels) sorted.push_back(&h);
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->level() < b->level(); });

  LqDimension out;
  std::vector<double> ms, ys;
  for (const auto* h : sorted) {
    MomentRow row;
    row.m = h->level();
    row.s_m = moment_sum(*h, q);
    if (!(row.s_m > 0.0)) throw Error(ErrorCode::kIdenticallyZero, "moment sum vanishes at level " + std::to_string(row.m));
    row.neg_log2 = -std::log2(row.s_m);
    if (!out.rows.empty()) row.increment = row.neg_log2 - out.rows.back().neg_log2;
    out.rows.push_back(row);
    ms.push_back(static_cast<double>(row.m));
    ys.push_back(row.neg_log2);
  }
  out.tau_q = least_squares(ms, ys).slope;
  out.dim_q = q == kInfiniteOrder ? out.tau_q : out.tau_q / (q - 1.0);
  return out;
}

LqDimension lq_dimension(const DiscreteMeasure& m, double q, LevelRange range) {
  check_range(range);
  return lq_dimension_from(level_ladder(bin(m, range.hi), range), q);
}

double default_tau(LevelRange range) { return std::ldexp(1.0, -(range.hi + 4)); }

DiscreteMeasure realize_base(const MeasureRecipe& recipe, LevelRange range) {
  const double tau = recipe.tau > 0.0 ? recipe.tau : default_tau(range);
  DiscreteMeasure mu = discretize(recipe.ifs, tau);
  if (recipe.curve) return pushforward(mu, *recipe.curve);
  return mu;
}

namespace {

double fallback_width(LevelRange range, bool allow) { return allow ? std::ldexp(1.0, -(range.hi + 6)) : 0.0; }

}  // namespace

LqDimension lq_dimension(const MeasureRecipe& recipe, double q, LevelRange range) {
  check_range(range);
  const DiscreteMeasure base = realize_base(recipe, range);
  PowerLadder ladder(base, recipe.convolve, fallback_width(range, recipe.allow_coalesce));
  const PowerHistogram ph = power_histogram(ladder, recipe.power, range.hi);
  return lq_dimension_from(level_ladder(ph.histogram, range), q);
}

FlatteningReport flattening_report(const DiscreteMeasure& nu, unsigned p_max, LevelRange range, double epsilon,
                                   const ConvolveOptions& options) {
  check_range(range);
  if (p_max < 1 || p_max > 6) throw Error(ErrorCode::kInvalidArgument, "p_max must lie in [1, 6]");
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be nonnegative");
  FlatteningReport report;
  report.dim = nu.dim();
  report.epsilon = epsilon;
  const double d = static_cast<double>(nu.dim());

  PowerLadder ladder(nu, options, fallback_width(range, true));
  for (unsigned p = 1; p <= p_max; ++p) {
    const PowerHistogram ph = power_histogram(ladder, p, range.hi);
    report.pairs_streamed += p == 1 ? 0 : ph.pairs;
    const LqDimension fit = lq_dimension_from(level_ladder(ph.histogram, range), 2.0);
    std::vector<double> ms, logs;
    for (const auto& row : fit.rows) {
      FlatteningRow out;
      out.p = p;
      out.m = row.m;
      out.s_m = row.s_m;
      out.normalized = row.s_m * std::exp2(static_cast<double>(row.m) * (d - epsilon));
      out.dim2_fit = fit.dim_q;
      report.rows.push_back(out);
      ms.push_back(static_cast<double>(row.m));
      logs.push_back(std::log2(out.normalized));
    }
    report.dim2.push_back(fit.dim_q);
    report.normalized_slope.push_back(least_squares(ms, logs).slope);
    report.coalesce_width.push_back(ph.coalesce_width);
  }
  return report;
}

FlatteningReport flattening_report(const WeightedIFS& ifs, const std::optional<CurveSpec>& curve, unsigned p_max,
                                   LevelRange range, double epsilon, const ConvolveOptions& options, double tau) {
  MeasureRecipe recipe{ifs, curve, 1, tau, options, true};
  const DiscreteMeasure base = realize_base(recipe, range);
  FlatteningReport report = flattening_report(base, p_max, range, epsilon, options);
  report.tau = tau > 0.0 ? tau : default_tau(range);
  return report;
}

L2Improving l2_improving_check(const DiscreteMeasure& theta, const DiscreteMeasure& nu, int m, double gamma) {
  if (theta.dim() != nu.dim()) throw Error(ErrorCode::kDimMismatch, "theta and nu must share a dimension");
  const double s_theta = moment_sum(bin(theta, m), 2.0);
  const double s_conv = moment_sum(convolution_histogram(theta, nu, m), 2.0);
  L2Improving out;
  out.ratio = s_conv / s_theta;
  out.gate = s_theta * std::exp2(static_cast<double>(m) * (static_cast<double>(theta.dim()) - gamma));
  return out;
}

ConsistencyResult fourier_moment_consistency(const DiscreteMeasure& m, int level, double h) {
  if (level < 0 || level > 12) throw Error(ErrorCode::kLevelOutOfRange, "consistency levels must lie in [0, 12]");
  const double step = h > 0.0 ? h : default_grid_step(m, 2.0);
  ConsistencyResult out;
  out.level = level;
  out.s_m = moment_sum(bin(m, level), 2.0);
  const LpIntegral integral = lp_region_integral(m, region::Ball{std::ldexp(1.0, level)}, 2.0, step);
  out.integral = integral.estimate;
  out.cells = integral.cells;
  out.ratio = out.s_m / (std::ldexp(1.0, -static_cast<int>(m.dim()) * level) * out.integral);
  return out;
}

}  // namespace flatten
