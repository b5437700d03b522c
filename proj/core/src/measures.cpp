#include "flatten/measures.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "detail/cut_walk.hpp"
#include "detail/point_map.hpp"
#include "flatten/curves.hpp"
#include "flatten/error.hpp"
#include "flatten/numeric.hpp"
#include "flatten/parallel.hpp"

namespace flatten {

DiscreteMeasure::DiscreteMeasure(std::size_t dim, std::vector<double> coords, std::vector<double> weights)
    : dim_(dim), coords_(std::move(coords)), weights_(std::move(weights)) {
  if (dim_ == 0) throw Error(ErrorCode::kInvalidArgument, "measure dimension must be positive");
  if (coords_.size() != dim_ * weights_.size()) {
    throw Error(ErrorCode::kDimMismatch, "coordinate count does not match dim * atoms");
  }
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw Error(ErrorCode::kBadWeights, "atom weights must be positive");
  }
  for (double x : coords_) {
    if (!std::isfinite(x)) throw Error(ErrorCode::kInvalidArgument, "atom coordinates must be finite");
  }
}

DiscreteMeasure DiscreteMeasure::dirac(std::vector<double> point) {
  const std::size_t d = point.size();
  return DiscreteMeasure(d, std::move(point), {1.0});
}

double DiscreteMeasure::total_mass() const { return compensated_sum(weights_); }

std::vector<Interval> DiscreteMeasure::bounding_box() const {
  std::vector<Interval> box(dim_, Interval{0.0, 0.0});
  if (empty()) return box;
  for (std::size_t k = 0; k < dim_; ++k) box[k] = {coord(0, k), coord(0, k)};
  for (std::size_t i = 1; i < size(); ++i) {
    for (std::size_t k = 0; k < dim_; ++k) {
      box[k].lo = std::min(box[k].lo, coord(i, k));
      box[k].hi = std::max(box[k].hi, coord(i, k));
    }
  }
  return box;
}

DiscreteMeasure DiscreteMeasure::sorted() const {
  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    for (std::size_t k = 0; k < dim_; ++k) {
      if (coord(a, k) != coord(b, k)) return coord(a, k) < coord(b, k);
    }
    return weights_[a] < weights_[b];
  });
  std::vector<double> coords;
  std::vector<double> weights;
  coords.reserve(coords_.size());
  weights.reserve(size());
  for (std::size_t i : order) {
    auto p = point(i);
    coords.insert(coords.end(), p.begin(), p.end());
    weights.push_back(weights_[i]);
  }
  return DiscreteMeasure(dim_, std::move(coords), std::move(weights));
}

Hyperplane Hyperplane::make(std::vector<double> normal, double offset) {
  double norm = 0.0;
  for (double v : normal) norm += v * v;
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) throw Error(ErrorCode::kInvalidArgument, "hyperplane normal must be nonzero");
  for (double& v : normal) v /= norm;
  return {std::move(normal), offset / norm};
}

double Hyperplane::signed_distance(std::span<const double> x) const noexcept {
  double s = -offset;
  for (std::size_t k = 0; k < normal.size(); ++k) s += normal[k] * x[k];
  return s;
}

DiscreteMeasure discretize(const WeightedIFS& ifs, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorCode::kTauOutOfRange, "tau = " + format_double(tau));
  std::vector<double> coords;
  std::vector<double> weights;
  detail::walk_cut_set(ifs, tau, kDefaultCutSetCap, [&](const detail::WalkState& s, const Word&) {
    coords.push_back(s.translation);
    weights.push_back(s.weight);
  });
  return DiscreteMeasure(1, std::move(coords), std::move(weights));
}

DiscreteMeasure discretize_depth(const WeightedIFS& ifs, std::size_t depth) {
  const auto words = words_of_length(ifs, depth);
  std::vector<double> coords;
  std::vector<double> weights;
  coords.reserve(words.size());
  weights.reserve(words.size());
  for (const auto& w : words) {
    coords.push_back(w.translation);
    weights.push_back(w.weight);
  }
  return DiscreteMeasure(1, std::move(coords), std::move(weights));
}

DiscreteMeasure pushforward(const DiscreteMeasure& mu, const CurveSpec& curve) {
  if (mu.dim() != 1) throw Error(ErrorCode::kDimMismatch, "pushforward needs a measure on the line");
  const std::size_t d = curve.ambient_dim();
  std::vector<double> coords(mu.size() * d);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double x = mu.coord(i, 0);
    if (!curve.domain().contains(x)) {
      throw Error(ErrorCode::kDomainViolation, "atom " + std::to_string(i) + " at x = " + format_double(x) +
                                                   " lies outside [" + format_double(curve.domain().lo) + ", " +
                                                   format_double(curve.domain().hi) + "]");
    }
    evaluate_into(curve, x, std::span<double>(coords.data() + i * d, d));
  }
  return DiscreteMeasure(d, std::move(coords), mu.weights());
}

namespace {

DiscreteMeasure from_accumulator(const detail::PointAccumulator& acc) {
  const std::size_t d = acc.dim();
  std::vector<double> coords;
  std::vector<double> weights;
  coords.reserve(acc.size() * d);
  weights.reserve(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    auto p = acc.point(i);
    coords.insert(coords.end(), p.begin(), p.end());
    weights.push_back(acc.weight(i));
  }
  return DiscreteMeasure(d, std::move(coords), std::move(weights)).sorted();
}

}  // namespace

DiscreteMeasure convolve(const DiscreteMeasure& a, const DiscreteMeasure& b, const ConvolveOptions& options) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimMismatch,
                "cannot convolve dims " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
  }
  const std::size_t d = a.dim();
  const double pairs = static_cast<double>(a.size()) * static_cast<double>(b.size());
  const bool coalesce = options.coalesce_width > 0.0;
  if (!coalesce && pairs > static_cast<double>(options.atom_budget)) {
    // Exact sums of generic atoms are almost all distinct.
    throw Error(ErrorCode::kAtomBudgetExceeded, format_double(pairs) + " pair sums exceed the atom budget of " +
                                                    std::to_string(options.atom_budget));
  }
  if (coalesce && pairs > 100.0 * static_cast<double>(options.atom_budget)) {
    throw Error(ErrorCode::kAtomBudgetExceeded, format_double(pairs) + " pair sums exceed 100x the atom budget");
  }

  detail::PointAccumulator acc(d, static_cast<std::size_t>(std::min(pairs, 1e6)));
  std::vector<std::uint64_t> key(d);
  std::vector<double> sum(d);
  const double width = options.coalesce_width;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto x = a.point(i);
    for (std::size_t j = 0; j < b.size(); ++j) {
      auto y = b.point(j);
      for (std::size_t k = 0; k < d; ++k) {
        sum[k] = x[k] + y[k];
        if (coalesce) {
          const double cell = std::floor(sum[k] / width);
          key[k] = static_cast<std::uint64_t>(static_cast<std::int64_t>(cell));
          sum[k] = (cell + 0.5) * width;
        } else {
          key[k] = detail::double_key(sum[k]);
        }
      }
      acc.add(key, sum, a.weight(i) * b.weight(j));
      if (acc.size() > options.atom_budget) {
        throw Error(ErrorCode::kAtomBudgetExceeded,
                    "convolution exceeds the atom budget of " + std::to_string(options.atom_budget));
      }
    }
  }
  return from_accumulator(acc);
}

DiscreteMeasure convolution_power(const DiscreteMeasure& a, unsigned p, const ConvolveOptions& options) {
  if (p == 0) throw Error(ErrorCode::kInvalidArgument, "convolution power must be at least 1");
  DiscreteMeasure out = a;
  for (unsigned k = 1; k < p; ++k) out = convolve(out, a, options);
  return out;
}

double ball_mass(const DiscreteMeasure& m, std::span<const double> center, double r) {
  if (center.size() != m.dim()) throw Error(ErrorCode::kDimMismatch, "ball center has the wrong dimension");
  CompensatedSum mass;
  for (std::size_t i = 0; i < m.size(); ++i) {
    auto x = m.point(i);
    bool inside = true;
    for (std::size_t k = 0; k < m.dim() && inside; ++k) inside = std::fabs(x[k] - center[k]) <= r;
    if (inside) mass.add(m.weight(i));
  }
  return mass.value();
}

namespace {

double max_ball_mass_line(const DiscreteMeasure& m, double r) {
  const DiscreteMeasure s = m.sorted();
  const std::size_t n = s.size();
  std::vector<double> prefix(n + 1, 0.0);
  CompensatedSum run;
  for (std::size_t i = 0; i < n; ++i) {
    run.add(s.weight(i));
    prefix[i + 1] = run.value();
  }
  double best = 0.0;
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = s.coord(i, 0);
    while (x - s.coord(lo, 0) > r) ++lo;
    if (hi < i) hi = i;
    while (hi + 1 < n && s.coord(hi + 1, 0) - x <= r) ++hi;
    best = std::max(best, prefix[hi + 1] - prefix[lo]);
  }
  return best;
}

double max_ball_mass_grid(const DiscreteMeasure& m, double r) {
  const std::size_t d = m.dim();
  // Bucket atoms into cells of width r; a closed r-ball around an atom only
  // meets the 3^d neighbouring cells.
  std::vector<std::int64_t> cell_of(m.size() * d);
  std::map<std::vector<std::int64_t>, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      cell_of[i * d + k] = static_cast<std::int64_t>(std::floor(m.coord(i, k) / r));
    }
    buckets[std::vector<std::int64_t>(cell_of.begin() + static_cast<std::ptrdiff_t>(i * d),
                                      cell_of.begin() + static_cast<std::ptrdiff_t>((i + 1) * d))]
        .push_back(i);
  }

  double best = 0.0;
  std::vector<std::int64_t> probe(d);
  const std::size_t neighbours = static_cast<std::size_t>(std::pow(3.0, static_cast<double>(d)));
  for (std::size_t i = 0; i < m.size(); ++i) {
    auto x = m.point(i);
    CompensatedSum mass;
    for (std::size_t code = 0; code < neighbours; ++code) {
      std::size_t c = code;
      for (std::size_t k = 0; k < d; ++k) {
        probe[k] = cell_of[i * d + k] + static_cast<std::int64_t>(c % 3) - 1;
        c /= 3;
      }
      auto it = buckets.find(probe);
      if (it == buckets.end()) continue;
      for (std::size_t j : it->second) {
        auto y = m.point(j);
        bool inside = true;
        for (std::size_t k = 0; k < d && inside; ++k) inside = std::fabs(y[k] - x[k]) <= r;
        if (inside) mass.add(m.weight(j));
      }
    }
    best = std::max(best, mass.value());
  }
  return best;
}

}  // namespace

double max_ball_mass(const DiscreteMeasure& m, double r) {
  if (!(r > 0.0)) throw Error(ErrorCode::kInvalidArgument, "radius must be positive");
  if (m.empty()) return 0.0;
  return m.dim() == 1 ? max_ball_mass_line(m, r) : max_ball_mass_grid(m, r);
}

double frostman_scale_floor(double tau, double rho) { return std::pow(tau, rho); }

FrostmanFit frostman_fit(const DiscreteMeasure& m, std::span<const double> radii, double floor) {
  if (radii.size() < 3) throw Error(ErrorCode::kInsufficientScales, "frostman_fit needs at least 3 radii");
  FrostmanFit fit;
  std::vector<double> xs, ys;
  for (double r : radii) {
    if (floor > 0.0 && !(r > floor)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "radius " + format_double(r) + " is at or below the scale floor " + format_double(floor));
    }
    const double mass = max_ball_mass(m, r);
    fit.table.push_back({r, mass});
    xs.push_back(std::log(r));
    ys.push_back(std::log(mass));
  }
  fit.exponent = least_squares(xs, ys).slope;
  return fit;
}

double slab_mass(const DiscreteMeasure& m, const Hyperplane& w, double eps) {
  if (m.dim() < 2) throw Error(ErrorCode::kDimMismatch, "slab mass needs dim >= 2");
  if (w.normal.size() != m.dim()) throw Error(ErrorCode::kDimMismatch, "hyperplane dimension mismatch");
  CompensatedSum mass;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (std::fabs(w.signed_distance(m.point(i))) < eps) mass.add(m.weight(i));
  }
  return mass.value();
}

namespace {

std::optional<Hyperplane> hyperplane_through(const DiscreteMeasure& m, std::span<const std::size_t> atoms) {
  const std::size_t d = m.dim();
  auto x0 = m.point(atoms[0]);
  if (d == 2) {
    auto x1 = m.point(atoms[1]);
    const double vx = x1[0] - x0[0];
    const double vy = x1[1] - x0[1];
    if (vx == 0.0 && vy == 0.0) return std::nullopt;
    std::vector<double> normal{-vy, vx};
    return Hyperplane::make(normal, -vy * x0[0] + vx * x0[1]);
  }
  Eigen::MatrixXd span_vectors(d - 1, d);
  for (std::size_t r = 1; r < d; ++r) {
    auto x = m.point(atoms[r]);
    for (std::size_t k = 0; k < d; ++k) span_vectors(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(k)) = x[k] - x0[k];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(span_vectors, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(sv.size() - 1) <= 1e-14 * std::max(1.0, sv(0))) return std::nullopt;
  Eigen::VectorXd normal = svd.matrixV().col(static_cast<Eigen::Index>(d - 1));
  std::vector<double> nv(normal.data(), normal.data() + d);
  double offset = 0.0;
  for (std::size_t k = 0; k < d; ++k) offset += nv[k] * x0[k];
  return Hyperplane::make(nv, offset);
}

}  // namespace

NonconcentrationResult nonconcentration_sweep(const DiscreteMeasure& m, std::span<const double> eps_list,
                                              const NonconcentrationOptions& options) {
  if (m.dim() < 2) throw Error(ErrorCode::kDimMismatch, "non-concentration sweep needs dim >= 2");
  if (eps_list.empty()) throw Error(ErrorCode::kInvalidArgument, "empty eps list");
  const std::size_t d = m.dim();
  const std::size_t n = m.size();

  std::vector<Hyperplane> candidates;
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t t = 0; t < options.random_trials; ++t) {
    std::vector<double> normal(d);
    for (double& v : normal) v = gauss(rng);
    auto anchor = m.point(pick(rng));
    double offset = 0.0;
    for (std::size_t k = 0; k < d; ++k) offset += normal[k] * anchor[k];
    if (std::all_of(normal.begin(), normal.end(), [](double v) { return v == 0.0; })) continue;
    candidates.push_back(Hyperplane::make(normal, offset));
  }
  // Coordinate hyperplanes through every atom.
  for (std::size_t i = 0; i < n && candidates.size() < options.anchored_cap + options.random_trials; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      std::vector<double> normal(d, 0.0);
      normal[k] = 1.0;
      candidates.push_back(Hyperplane{normal, m.coord(i, k)});
    }
  }
  const double all_pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  std::vector<std::size_t> tuple(d);
  if (d == 2 && all_pairs <= static_cast<double>(options.anchored_cap)) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        tuple[0] = i;
        tuple[1] = j;
        if (auto h = hyperplane_through(m, tuple)) candidates.push_back(std::move(*h));
      }
    }
  } else if (n >= d) {
    const std::size_t samples = d == 2 ? options.anchored_cap : std::min<std::size_t>(options.anchored_cap, 4096);
    for (std::size_t s = 0; s < samples; ++s) {
      for (auto& a : tuple) a = pick(rng);
      if (auto h = hyperplane_through(m, tuple)) candidates.push_back(std::move(*h));
    }
  }

  const std::size_t levels = eps_list.size();
  constexpr std::size_t kChunks = 64;
  std::vector<std::vector<double>> chunk_best(kChunks, std::vector<double>(levels, 0.0));
  parallel_for_chunks(kChunks, [&](std::size_t c) {
    const ChunkRange range = chunk_range(candidates.size(), kChunks, c);
    std::vector<double> mass(levels);
    for (std::size_t h = range.begin; h < range.end; ++h) {
      std::fill(mass.begin(), mass.end(), 0.0);
      const Hyperplane& w = candidates[h];
      for (std::size_t i = 0; i < n; ++i) {
        const double dist = std::fabs(w.signed_distance(m.point(i)));
        const double wt = m.weight(i);
        for (std::size_t e = 0; e < levels; ++e) mass[e] += dist < eps_list[e] ? wt : 0.0;
      }
      for (std::size_t e = 0; e < levels; ++e) chunk_best[c][e] = std::max(chunk_best[c][e], mass[e]);
    }
  });

  NonconcentrationResult result;
  result.hyperplanes_tested = candidates.size();
  std::vector<double> xs, ys;
  for (std::size_t e = 0; e < levels; ++e) {
    double worst = 0.0;
    for (const auto& best : chunk_best) worst = std::max(worst, best[e]);
    result.table.push_back({eps_list[e], worst});
    xs.push_back(std::log(eps_list[e]));
    ys.push_back(std::log(worst));
  }
  if (levels >= 2) result.beta = least_squares(xs, ys).slope;
  return result;
}

void write_measure_csv(std::ostream& os, const DiscreteMeasure& m) {
  os << m.dim() << ',' << m.size() << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t k = 0; k < m.dim(); ++k) os << format_double(m.coord(i, k)) << ',';
    os << format_double(m.weight(i)) << '\n';
  }
}

DiscreteMeasure read_measure_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::kParseError, "measure CSV is empty");
  std::size_t dim = 0, count = 0;
  {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream head(line);
    if (!(head >> dim >> count) || dim == 0) {
      throw Error(ErrorCode::kParseError, "measure CSV header must be 'dim,n_atoms'");
    }
  }
  std::vector<double> coords;
  std::vector<double> weights;
  coords.reserve(dim * count);
  weights.reserve(count);
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    std::vector<double> values;
    double v;
    while (row >> v) values.push_back(v);
    if (values.size() != dim + 1) {
      throw Error(ErrorCode::kParseError, "measure CSV line " + std::to_string(lineno) + ": expected " +
                                              std::to_string(dim + 1) + " fields");
    }
    coords.insert(coords.end(), values.begin(), values.end() - 1);
    weights.push_back(values.back());
  }
  if (weights.size() != count) {
    throw Error(ErrorCode::kParseError, "measure CSV declares " + std::to_string(count) + " atoms but has " +
                                            std::to_string(weights.size()));
  }
  DiscreteMeasure m(dim, std::move(coords), std::move(weights));
  if (std::fabs(m.total_mass() - 1.0) > kMassTolerance) {
    throw Error(ErrorCode::kBadWeights, "measure CSV total mass is " + format_double(m.total_mass()));
  }
  return m;
}

double atom_set_distance(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (a.dim() != b.dim() || a.size() != b.size()) return std::numeric_limits<double>::infinity();
  const DiscreteMeasure sa = a.sorted();
  const DiscreteMeasure sb = b.sorted();
  double dist = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    for (std::size_t k = 0; k < sa.dim(); ++k) dist = std::max(dist, std::fabs(sa.coord(i, k) - sb.coord(i, k)));
    dist = std::max(dist, std::fabs(sa.weight(i) - sb.weight(i)));
  }
  return dist;
}

}  // namespace flatten
