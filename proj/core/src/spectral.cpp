#include "flatten/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "detail/cut_walk.hpp"
#include "flatten/error.hpp"
#include "flatten/numeric.hpp"
#include "flatten/parallel.hpp"

namespace flatten {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct ComplexSum {
  CompensatedSum re;
  CompensatedSum im;
  void add(Complex z) noexcept {
    re.add(z.real());
    im.add(z.imag());
  }
  Complex value() const noexcept { return {re.value(), im.value()}; }
};

double max_norm(std::span<const double> v) {
  double r = 0.0;
  for (double x : v) r = std::max(r, std::fabs(x));
  return r;
}

}  // namespace

double Frequency::zeta_norm() const noexcept { return max_norm(zeta); }

Complex unit_phase(double x) noexcept {
  const double frac = x - std::nearbyint(x);
  return {std::cos(kTwoPi * frac), std::sin(kTwoPi * frac)};
}

std::string region_name(const FrequencyRegion& r) {
  struct Visitor {
    std::string operator()(const region::Ball&) const { return "ball"; }
    std::string operator()(const region::C&) const { return "C"; }
    std::string operator()(const region::E&) const { return "E"; }
    std::string operator()(const region::Box&) const { return "box"; }
  };
  return std::visit(Visitor{}, r);
}

void validate_region(const FrequencyRegion& r, std::size_t dim) {
  auto check_R = [](double R) {
    if (!(R >= 1.0) || !std::isfinite(R)) throw Error(ErrorCode::kInvalidArgument, "region radius must be >= 1");
  };
  auto check_eps = [](double eps) {
    if (!(eps > 0.0 && eps <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "region epsilon must lie in (0, 1]");
  };
  if (const auto* b = std::get_if<region::Ball>(&r)) {
    check_R(b->R);
  } else if (const auto* c = std::get_if<region::C>(&r)) {
    check_R(c->R);
    check_eps(c->epsilon);
    if (dim < 2) throw Error(ErrorCode::kDimMismatch, "C regions need d >= 2");
  } else if (const auto* e = std::get_if<region::E>(&r)) {
    check_R(e->R);
    check_eps(e->epsilon);
    if (dim < 2) throw Error(ErrorCode::kDimMismatch, "E regions need d >= 2");
  } else if (const auto* box = std::get_if<region::Box>(&r)) {
    if (box->bounds.size() != dim) throw Error(ErrorCode::kDimMismatch, "box dimension mismatch");
    for (const auto& iv : box->bounds) {
      if (!(iv.lo <= iv.hi)) throw Error(ErrorCode::kInvalidArgument, "box bounds must satisfy lo <= hi");
    }
  }
}

bool region_contains(const FrequencyRegion& r, const Frequency& xi) {
  const double t = std::fabs(xi.theta);
  const double z = xi.zeta_norm();
  if (const auto* b = std::get_if<region::Ball>(&r)) return std::max(t, z) <= b->R;
  if (const auto* c = std::get_if<region::C>(&r)) {
    return t <= c->R && std::pow(t, c->epsilon) < z && z <= c->R;
  }
  if (const auto* e = std::get_if<region::E>(&r)) {
    const double te = std::pow(t, e->epsilon);
    return z <= te && te <= std::pow(e->R, e->epsilon);
  }
  const auto& box = std::get<region::Box>(r);
  if (!box.bounds[0].contains(xi.theta)) return false;
  for (std::size_t k = 0; k < xi.zeta.size(); ++k) {
    if (!box.bounds[k + 1].contains(xi.zeta[k])) return false;
  }
  return true;
}

Complex ft_discrete(const DiscreteMeasure& m, const Frequency& xi) {
  if (xi.dim() != m.dim()) {
    throw Error(ErrorCode::kDimMismatch, "frequency of dim " + std::to_string(xi.dim()) + " for a measure of dim " +
                                             std::to_string(m.dim()));
  }
  ComplexSum acc;
  for (std::size_t i = 0; i < m.size(); ++i) {
    auto x = m.point(i);
    double phase = xi.theta * x[0];
    for (std::size_t k = 1; k < m.dim(); ++k) phase += xi.zeta[k - 1] * x[k];
    acc.add(m.weight(i) * unit_phase(phase));
  }
  return acc.value();
}

Complex ft_discrete(const DiscreteMeasure& m, double theta) { return ft_discrete(m, Frequency{theta, {}}); }

SelfSimilarTransform::SelfSimilarTransform(WeightedIFS ifs, std::size_t atom_budget)
    : ifs_(std::move(ifs)), atom_budget_(atom_budget) {
  validate(ifs_);
  const Interval j = attractor_interval(ifs_);
  support_radius_ = std::max(std::fabs(j.lo), std::fabs(j.hi));
}

double SelfSimilarTransform::required_tau(double theta, double tol) const noexcept {
  const double scale = kTwoPi * std::fabs(theta) * support_radius_;
  if (!(scale > 0.0)) return 1.0;
  return std::min(1.0, tol / scale);
}

const DiscreteMeasure& SelfSimilarTransform::discretization(int ladder_index) {
  auto it = cache_.find(ladder_index);
  if (it != cache_.end()) return it->second;
  const double tau = std::ldexp(1.0, -ladder_index);
  std::vector<double> coords;
  std::vector<double> weights;
  try {
    detail::walk_cut_set(ifs_, tau, atom_budget_, [&](const detail::WalkState& s, const Word&) {
      coords.push_back(s.translation);
      weights.push_back(s.weight);
    });
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kSizeOverflow) throw;
    throw Error(ErrorCode::kTauUnderflow,
                "tau = 2^-" + std::to_string(ladder_index) + " needs more than " + std::to_string(atom_budget_) + " atoms");
  }
  peak_atoms_ = std::max(peak_atoms_, weights.size());
  return cache_.emplace(ladder_index, DiscreteMeasure(1, std::move(coords), std::move(weights))).first->second;
}

int SelfSimilarTransform::ladder_index(double theta, double tol) const noexcept {
  return std::max(1, static_cast<int>(std::ceil(-std::log2(required_tau(theta, tol)))));
}

Complex SelfSimilarTransform::operator()(double theta, double tol) {
  if (!(tol > 0.0 && tol <= 0.1)) throw Error(ErrorCode::kInvalidArgument, "tol must lie in (0, 0.1]");
  if (theta == 0.0) return {1.0, 0.0};
  return ft_discrete(discretization(ladder_index(theta, tol)), theta);
}

std::vector<double> SelfSimilarTransform::abs_on_grid(double step, std::size_t count, double tol) {
  if (!(tol > 0.0 && tol <= 0.1)) throw Error(ErrorCode::kInvalidArgument, "tol must lie in (0, 0.1]");
  constexpr std::size_t kBlock = 256;
  struct Task {
    std::size_t begin, end;
    const DiscreteMeasure* atoms;
  };
  // Blocks never straddle a ladder change, so each uses one discretization;
  // all of them are materialized before the parallel part.
  std::vector<Task> tasks;
  std::size_t q = 1;
  while (q < count) {
    const int index = ladder_index(step * static_cast<double>(q), tol);
    std::size_t end = std::min(count, q + kBlock);
    for (std::size_t k = q + 1; k < end; ++k) {
      if (ladder_index(step * static_cast<double>(k), tol) != index) {
        end = k;
        break;
      }
    }
    tasks.push_back({q, end, &discretization(index)});
    q = end;
  }

  std::vector<double> out(count, 1.0);
  parallel_for_chunks(tasks.size(), [&](std::size_t t) {
    const Task& task = tasks[t];
    const DiscreteMeasure& m = *task.atoms;
    std::vector<Complex> phase(m.size()), rot(m.size());
    const double theta0 = step * static_cast<double>(task.begin);
    for (std::size_t i = 0; i < m.size(); ++i) {
      phase[i] = m.weight(i) * unit_phase(theta0 * m.coord(i, 0));
      rot[i] = unit_phase(step * m.coord(i, 0));
    }
    for (std::size_t k = task.begin; k < task.end; ++k) {
      double re = 0.0, im = 0.0;
      for (std::size_t i = 0; i < m.size(); ++i) {
        re += phase[i].real();
        im += phase[i].imag();
        phase[i] *= rot[i];
      }
      out[k] = std::hypot(re, im);
    }
  });
  return out;
}

Complex ft_selfsimilar(const WeightedIFS& ifs, double theta, double tol) {
  SelfSimilarTransform transform(ifs);
  return transform(theta, tol);
}

double default_grid_step(const DiscreteMeasure& m, double p) {
  double diam = 0.0;
  for (const auto& iv : m.bounding_box()) diam = std::max(diam, iv.length());
  const double spread = p * diam;
  return spread <= 1.0 ? 0.25 : 0.25 / spread;
}

namespace {

/// Index range [lo, hi) of step-h cells, centers h (i + 1/2), per axis.
struct AxisGrid {
  std::int64_t lo;
  std::int64_t hi;
  std::size_t count() const { return static_cast<std::size_t>(hi - lo); }
};

std::vector<AxisGrid> region_grid(const FrequencyRegion& region, std::size_t dim, double h) {
  std::vector<AxisGrid> axes;
  if (const auto* box = std::get_if<region::Box>(&region)) {
    for (const auto& iv : box->bounds) {
      axes.push_back({static_cast<std::int64_t>(std::ceil(iv.lo / h - 0.5)),
                      static_cast<std::int64_t>(std::floor(iv.hi / h - 0.5)) + 1});
    }
    return axes;
  }
  const double R = std::visit([](const auto& r) -> double {
    if constexpr (requires { r.R; }) {
      return r.R;
    } else {
      return 0.0;
    }
  }, region);
  const auto n = static_cast<std::int64_t>(std::ceil(R / h));
  axes.assign(dim, AxisGrid{-n, n});
  return axes;
}

double total_cells(const std::vector<AxisGrid>& axes) {
  double cells = 1.0;
  for (const auto& a : axes) cells *= static_cast<double>(std::max<std::int64_t>(0, a.hi - a.lo));
  return cells;
}

double power_abs(Complex z, double p) {
  const double sq = std::norm(z);
  if (p == 2.0) return sq;
  return std::pow(sq, 0.5 * p);
}

}  // namespace

LpIntegral lp_region_integral_scan(const DiscreteMeasure& m, const FrequencyRegion& region, double p, double h,
                                   std::size_t grid_budget) {
  const std::size_t d = m.dim();
  validate_region(region, d);
  if (!(p >= 1.0)) throw Error(ErrorCode::kInvalidArgument, "p must be >= 1");
  if (!(h > 0.0 && h <= 0.25)) throw Error(ErrorCode::kInvalidArgument, "grid step must lie in (0, 1/4]");
  const auto axes = region_grid(region, d, h);
  const double cells = total_cells(axes);
  if (cells * static_cast<double>(m.size()) > static_cast<double>(grid_budget)) {
    throw Error(ErrorCode::kGridBudgetExceeded, format_double(cells) + " cells x " + std::to_string(m.size()) +
                                                    " atoms exceed the budget of " + std::to_string(grid_budget));
  }
  if (cells == 0.0) return {};

  // Outer axes enumerate rows; along the last axis phases advance by a
  // per-atom rotation e(h x_last) instead of fresh sincos calls.
  const std::size_t last = d - 1;
  std::size_t rows = 1;
  for (std::size_t k = 0; k < last; ++k) rows *= axes[k].count();
  const std::size_t inner = axes[last].count();

  std::vector<double> row_sums(rows, 0.0);
  std::vector<std::size_t> row_cells(rows, 0);
  parallel_for_chunks(rows, [&](std::size_t row) {
    Frequency xi;
    xi.zeta.assign(d - 1, 0.0);
    std::vector<double> coord(d);
    std::size_t rem = row;
    for (std::size_t k = last; k-- > 0;) {
      const std::size_t idx = rem % axes[k].count();
      rem /= axes[k].count();
      coord[k] = h * (static_cast<double>(axes[k].lo + static_cast<std::int64_t>(idx)) + 0.5);
    }
    coord[last] = h * (static_cast<double>(axes[last].lo) + 0.5);

    std::vector<Complex> phase(m.size());
    std::vector<Complex> step(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      auto x = m.point(i);
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += coord[k] * x[k];
      phase[i] = m.weight(i) * unit_phase(s);
      step[i] = unit_phase(h * x[last]);
    }
    CompensatedSum sum;
    std::size_t counted = 0;
    for (std::size_t j = 0; j < inner; ++j) {
      const double c_last = h * (static_cast<double>(axes[last].lo + static_cast<std::int64_t>(j)) + 0.5);
      xi.theta = last == 0 ? c_last : coord[0];
      for (std::size_t k = 1; k < d; ++k) xi.zeta[k - 1] = k == last ? c_last : coord[k];
      const bool inside = region_contains(region, xi);
      if (inside) {
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i) {
          re += phase[i].real();
          im += phase[i].imag();
        }
        sum.add(power_abs({re, im}, p));
        ++counted;
      }
      // Re-anchor periodically so rotation round-off cannot accumulate.
      if ((j + 1) % 256 == 0) {
        const double next = h * (static_cast<double>(axes[last].lo + static_cast<std::int64_t>(j + 1)) + 0.5);
        for (std::size_t i = 0; i < m.size(); ++i) {
          auto x = m.point(i);
          double s = next * x[last];
          for (std::size_t k = 0; k < last; ++k) s += coord[k] * x[k];
          phase[i] = m.weight(i) * unit_phase(s);
        }
      } else {
        for (std::size_t i = 0; i < m.size(); ++i) phase[i] *= step[i];
      }
    }
    row_sums[row] = sum.value();
    row_cells[row] = counted;
  });

  LpIntegral out;
  out.estimate = pairwise_sum(row_sums) * std::pow(h, static_cast<double>(d));
  for (std::size_t c : row_cells) out.cells += c;
  return out;
}

namespace {

/// sum_{i=lo}^{hi-1} e(h (i + 1/2) delta).
Complex dirichlet(const AxisGrid& axis, double h, double delta) {
  const double n = static_cast<double>(axis.count());
  const double x = h * delta;
  const double frac = x - std::nearbyint(x);
  if (std::fabs(frac) < 1e-9) {
    Complex s = 0.0;
    for (std::int64_t i = axis.lo; i < axis.hi; ++i) s += unit_phase(h * (static_cast<double>(i) + 0.5) * delta);
    return s;
  }
  const double center = h * (static_cast<double>(axis.lo) + 0.5 + 0.5 * (n - 1.0)) * delta;
  const double ratio = std::sin(std::numbers::pi * n * x) / std::sin(std::numbers::pi * x);
  return ratio * unit_phase(center);
}

bool is_box_like(const FrequencyRegion& r) {
  return std::holds_alternative<region::Ball>(r) || std::holds_alternative<region::Box>(r);
}

}  // namespace

LpIntegral l2_box_integral_pairwise(const DiscreteMeasure& m, std::span<const Interval> box, double h) {
  if (box.size() != m.dim()) throw Error(ErrorCode::kDimMismatch, "box dimension mismatch");
  region::Box region{std::vector<Interval>(box.begin(), box.end())};
  const auto axes = region_grid(region, m.dim(), h);
  const std::size_t d = m.dim();
  const std::size_t n = m.size();

  // sum over cells of |nu^|^2 = sum_{a,b} w_a w_b prod_k D_k(x_a,k - x_b,k);
  // the (a,b) and (b,a) terms are conjugate, so only a < b is needed.
  constexpr std::size_t kChunks = 64;
  std::vector<double> partial(kChunks, 0.0);
  parallel_for_chunks(kChunks, [&](std::size_t c) {
    CompensatedSum sum;
    for (std::size_t a = c; a < n; a += kChunks) {
      auto xa = m.point(a);
      for (std::size_t b = a + 1; b < n; ++b) {
        auto xb = m.point(b);
        Complex term = m.weight(a) * m.weight(b);
        for (std::size_t k = 0; k < d; ++k) term *= dirichlet(axes[k], h, xa[k] - xb[k]);
        sum.add(2.0 * term.real());
      }
    }
    partial[c] = sum.value();
  });
  double diagonal_cells = total_cells(axes);
  CompensatedSum diag;
  for (std::size_t a = 0; a < n; ++a) diag.add(m.weight(a) * m.weight(a) * diagonal_cells);
  partial.push_back(diag.value());

  LpIntegral out;
  out.estimate = pairwise_sum(partial) * std::pow(h, static_cast<double>(d));
  out.cells = static_cast<std::size_t>(diagonal_cells);
  return out;
}

LpIntegral lp_region_integral(const DiscreteMeasure& m, const FrequencyRegion& region, double p, double h,
                              std::size_t grid_budget) {
  validate_region(region, m.dim());
  if (!(h > 0.0 && h <= 0.25)) throw Error(ErrorCode::kInvalidArgument, "grid step must lie in (0, 1/4]");
  if (p == 2.0 && is_box_like(region)) {
    const auto axes = region_grid(region, m.dim(), h);
    const double n = static_cast<double>(m.size());
    // Rough operation counts: a sincos pair per axis per atom pair versus a
    // complex multiply-add per atom per cell.
    const double pair_cost = 0.5 * n * n * static_cast<double>(m.dim()) * 16.0;
    const double scan_cost = total_cells(axes) * n;
    if (pair_cost < scan_cost) {
      if (pair_cost > static_cast<double>(grid_budget)) {
        throw Error(ErrorCode::kGridBudgetExceeded, "pairwise L2 evaluation exceeds the grid budget");
      }
      std::vector<Interval> bounds;
      for (const auto& a : axes) {
        bounds.push_back({h * (static_cast<double>(a.lo) + 0.5), h * (static_cast<double>(a.hi) - 0.5)});
      }
      return l2_box_integral_pairwise(m, bounds, h);
    }
  }
  return lp_region_integral_scan(m, region, p, h, grid_budget);
}

namespace {

void check_scan_args(double R, double delta) {
  if (!(R >= 2.0) || !std::isfinite(R)) throw Error(ErrorCode::kInvalidArgument, "R must be >= 2");
  if (!(delta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "delta must be positive");
}

/// Marks unit intervals given |transform| at the quarter grid -R + j/4.
template <class AbsAt>
SuperlevelScan scan_quarter_grid(double R, double threshold, AbsAt&& abs_at) {
  SuperlevelScan out;
  out.threshold = threshold;
  const auto samples = static_cast<std::size_t>(std::ceil(8.0 * R));
  out.samples = samples;
  const auto first = static_cast<std::int64_t>(std::floor(-R));
  const auto last = static_cast<std::int64_t>(std::floor(R));
  std::vector<char> marked(static_cast<std::size_t>(last - first + 1), 0);
  for (std::size_t j = 0; j < samples; ++j) {
    const double theta = -R + 0.25 * static_cast<double>(j);
    if (theta >= R) break;
    if (abs_at(j, theta) >= threshold) marked[static_cast<std::size_t>(static_cast<std::int64_t>(std::floor(theta)) - first)] = 1;
  }
  for (char c : marked) out.count += c ? 1 : 0;
  return out;
}

}  // namespace

SuperlevelScan superlevel_cover_count(SelfSimilarTransform& transform, double R, double delta, double tol) {
  check_scan_args(R, delta);
  const double threshold = std::pow(R, -delta);
  const double eval_tol = std::min({tol, threshold / 10.0, 0.1});

  // |mu^| is even, so evaluate once per |theta| when R is on the quarter grid.
  const bool symmetric = std::floor(4.0 * R) == 4.0 * R;
  std::vector<double> values;
  if (symmetric) values = transform.abs_on_grid(0.25, static_cast<std::size_t>(4.0 * R) + 1, eval_tol);
  return scan_quarter_grid(R, threshold, [&](std::size_t, double theta) {
    if (symmetric) return values[static_cast<std::size_t>(std::llround(std::fabs(4.0 * theta)))];
    return std::abs(transform(theta, eval_tol));
  });
}

SuperlevelScan superlevel_cover_count(const WeightedIFS& ifs, double R, double delta, double tol) {
  SelfSimilarTransform transform(ifs);
  return superlevel_cover_count(transform, R, delta, tol);
}

SuperlevelScan superlevel_cover_count(const DiscreteMeasure& m, double R, double delta) {
  check_scan_args(R, delta);
  if (m.dim() != 1) throw Error(ErrorCode::kDimMismatch, "superlevel scans need a measure on the line");
  return scan_quarter_grid(R, std::pow(R, -delta),
                           [&](std::size_t, double theta) { return std::abs(ft_discrete(m, theta)); });
}

DecayFit pointwise_decay_fit(const DiscreteMeasure& m, const std::vector<std::vector<double>>& rays, double R) {
  if (m.dim() < 2) throw Error(ErrorCode::kDimMismatch, "pointwise decay fit needs d >= 2");
  if (!(R > 1.0)) throw Error(ErrorCode::kInvalidArgument, "R must exceed 1");
  if (rays.empty()) throw Error(ErrorCode::kInvalidArgument, "no rays given");
  const auto steps = static_cast<std::size_t>(std::floor(4.0 * std::log2(R)));
  if (steps < 2) throw Error(ErrorCode::kInsufficientScales, "R too small for a decay fit");

  DecayFit fit;
  fit.gamma = std::numeric_limits<double>::infinity();
  for (const auto& ray : rays) {
    if (ray.size() != m.dim() - 1) throw Error(ErrorCode::kDimMismatch, "ray dimension must be d - 1");
    const double norm = max_norm(ray);
    if (!(norm > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ray direction must be nonzero");
    for (double theta : {0.0, 1.0}) {
      std::vector<double> logs, values;
      for (std::size_t j = 0; j <= steps; ++j) {
        const double s = std::exp2(0.25 * static_cast<double>(j));
        Frequency xi{theta, {}};
        for (double u : ray) xi.zeta.push_back(s * u / norm);
        logs.push_back(std::log(s));
        values.push_back(std::abs(ft_discrete(m, xi)));
      }
      // Upper envelope: running max from the high-frequency end.
      for (std::size_t j = values.size() - 1; j-- > 0;) values[j] = std::max(values[j], values[j + 1]);
      for (double& v : values) v = std::log(std::max(v, 1e-300));
      const double gamma = -least_squares(logs, values).slope;
      fit.per_ray.push_back(gamma);
      fit.gamma = std::min(fit.gamma, gamma);
    }
  }
  return fit;
}

}  // namespace flatten
