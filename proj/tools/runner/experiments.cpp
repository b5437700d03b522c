#include "runner/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "flatten/affine_lift.hpp"
#include "flatten/curves.hpp"
#include "flatten/ifs.hpp"
#include "flatten/measures.hpp"
#include "flatten/moments.hpp"
#include "flatten/numeric.hpp"
#include "flatten/parallel.hpp"
#include "flatten/spectral.hpp"

namespace flatten::runner {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct KeyDoc {
  const char* key;
  const char* fallback;
  const char* used_by;
  const char* text;
};

// Single source for --help and the README table.
constexpr KeyDoc kKeys[] = {
    {"schema", "(required)", "all", "config format version; must be 1"},
    {"seed", "1", "all", "seed for every randomized sampler; --seed overrides"},
    {"ifs.lambda", "(required)", "all", "contraction ratios, comma-separated; decimals or a/b"},
    {"ifs.t", "(required)", "all", "translations, one per map"},
    {"ifs.weights", "(required)", "all", "probability vector, positive, summing to 1"},
    {"curve.kind", "none", "all but tsujii-scan, lift-verify", "none | moment | graph"},
    {"curve.dim", "2", "curve.kind = moment", "ambient dimension d of x -> (x, x^2, ..., x^d)"},
    {"curve.components", "(required for graph)", "curve.kind = graph",
     "ascending coefficients of g_1..g_{d-1}; ',' between coefficients, ';' between components"},
    {"curve.domain", "attractor hull + 5%", "curve.kind != none", "lo,hi"},
    {"measure.tau", "per experiment", "all but lift-verify", "cut-set scale of the discretization mu_tau"},
    {"budget.atoms", "10000000", "all", "atom budget for convolutions and discretizations"},
    {"budget.grid", "1000000000", "fourier-scan, consistency-check", "budget on frequency cells x atoms"},
    {"output.timings", "false", "fourier-scan", "fill the wall_seconds CSV column (breaks byte-identical reruns)"},
    {"scan.R", "64 | 256,1024,4096,16384", "fourier-scan | tsujii-scan", "frequency radii"},
    {"scan.p", "2", "fourier-scan", "exponents p of the L^p integrals"},
    {"scan.epsilon", "0.5", "fourier-scan", "epsilon of the C/E regions"},
    {"scan.h", "0", "fourier-scan", "quadrature step; 0 picks the default for each p"},
    {"scan.regions", "ball | ball,C,E", "fourier-scan", "regions for d = 1 | d >= 2"},
    {"scan.delta", "0.02", "tsujii-scan", "superlevel threshold R^-delta"},
    {"scan.tol", "0.05", "tsujii-scan", "accuracy of each transform evaluation (capped at threshold/10)"},
    {"flatten.p", "1,2,3,4", "flattening-report", "convolution powers, each in [1, 6]"},
    {"flatten.m_min", "4", "flattening-report", "coarsest dyadic level"},
    {"flatten.m_max", "8", "flattening-report", "finest dyadic level"},
    {"flatten.epsilon", "0.1", "flattening-report", "epsilon in the normalization 2^{m(d - epsilon)}"},
    {"frostman.radii", "2^-2 .. 2^-8", "frostman-scan", "ball radii (at least 3)"},
    {"frostman.floor", "0", "frostman-scan", "reject radii at or below this scale when positive"},
    {"sweep.eps", "2^-1 .. 2^-6", "nonconcentration-sweep", "slab half-widths"},
    {"sweep.trials", "256", "nonconcentration-sweep", "random hyperplanes per eps"},
    {"sweep.anchored_cap", "1048576", "nonconcentration-sweep", "cap on atom-anchored hyperplanes"},
    {"lift.ell", "3", "lift-verify", "moment curve dimension"},
    {"lift.samples", "-1,-1/2,0,1/3,1/2,1", "lift-verify", "points x where F_i(V(x)) = V(f_i(x)) is checked"},
    {"lift.depth", "6", "lift-verify", "word length for the lift/pushforward coherence check"},
    {"consistency.levels", "4,5,6,7,8", "consistency-check", "dyadic levels (each <= 12)"},
    {"consistency.h", "0", "consistency-check", "quadrature step; 0 picks the default"},
};

std::string cell(double x) { return format_double(x); }
std::string cell(std::size_t x) { return std::to_string(x); }

double log2_or_nan(double x) { return x > 0.0 ? std::log2(x) : std::nan(""); }

WeightedIFS ifs_from(const Config& c) {
  const auto lambda = c.numbers("ifs.lambda");
  const auto t = c.numbers("ifs.t");
  const auto w = c.numbers("ifs.weights");
  if (t.size() != lambda.size()) {
    config_error("ifs.t", "expected " + std::to_string(lambda.size()) + " entries, got " + std::to_string(t.size()));
  }
  std::vector<AffineMap1D> maps;
  for (std::size_t i = 0; i < lambda.size(); ++i) maps.push_back({lambda[i], t[i]});
  try {
    return make_ifs(std::move(maps), w);
  } catch (const Error& e) {
    config_error(e.code() == ErrorCode::kBadWeights ? "ifs.weights" : "ifs.lambda", e.what());
  }
}

std::vector<Polynomial> components_from(const std::string& text) {
  std::vector<Polynomial> out;
  for (const auto& part : split_list(text, ';')) {
    std::vector<double> coeffs;
    for (const auto& item : split_list(part)) coeffs.push_back(parse_number(item));
    out.emplace_back(std::move(coeffs));
  }
  return out;
}

std::optional<CurveSpec> curve_from(const Config& c, const WeightedIFS& ifs) {
  const std::string kind = c.text("curve.kind", "none");
  if (kind == "none") return std::nullopt;
  Interval domain = default_curve_domain(ifs);
  if (c.has("curve.domain")) {
    const auto d = c.numbers("curve.domain");
    if (d.size() != 2 || !(d[0] < d[1])) config_error("curve.domain", "expected lo,hi with lo < hi");
    domain = {d[0], d[1]};
  } else {
    c.numbers("curve.domain", {domain.lo, domain.hi});
  }
  if (kind == "moment") {
    const auto d = c.integer("curve.dim", 2);
    if (d < 2 || d > 12) config_error("curve.dim", "must lie in [2, 12]");
    return CurveSpec::moment(static_cast<std::size_t>(d), domain);
  }
  if (kind == "graph") {
    std::vector<Polynomial> comps;
    try {
      comps = components_from(c.text("curve.components"));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kConfigError) throw;
      config_error("curve.components", e.what());
    }
    if (comps.empty()) config_error("curve.components", "no components");
    return CurveSpec::graph(std::move(comps), domain);
  }
  config_error("curve.kind", "expected none, moment or graph, got '" + kind + "'");
}

double measure_tau(const Config& c, double fallback) {
  const double tau = c.number("measure.tau", fallback);
  if (!(tau > 0.0 && tau < 1.0)) config_error("measure.tau", "must lie in (0, 1)");
  return tau;
}

std::size_t atom_budget(const Config& c) {
  const auto b = c.integer("budget.atoms", 10'000'000);
  if (b <= 0) config_error("budget.atoms", "must be positive");
  return static_cast<std::size_t>(b);
}

struct Setup {
  WeightedIFS ifs;
  std::optional<CurveSpec> curve;
};

Setup setup_from(const Config& c, bool allow_curve = true) {
  Setup s{ifs_from(c), std::nullopt};
  if (allow_curve) s.curve = curve_from(c, s.ifs);
  return s;
}

DiscreteMeasure base_measure(const Setup& s, double tau) {
  DiscreteMeasure mu = discretize(s.ifs, tau);
  return s.curve ? pushforward(mu, *s.curve) : mu;
}

double fitted_slope(const std::vector<std::pair<double, double>>& pts) {
  std::vector<double> xs, ys;
  for (const auto& [x, y] : pts) {
    if (std::isfinite(x) && std::isfinite(y)) {
      xs.push_back(x);
      ys.push_back(y);
    }
  }
  if (xs.size() < 2) return std::nan("");
  return least_squares(xs, ys).slope;
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

FrequencyRegion region_from(const std::string& name, double R, double eps) {
  if (name == "ball") return region::Ball{R};
  if (name == "C") return region::C{R, eps};
  if (name == "E") return region::E{R, eps};
  config_error("scan.regions", "unknown region '" + name + "' (ball, C, E)");
}

Report fourier_scan(const Config& c) {
  const Setup s = setup_from(c);
  const DiscreteMeasure nu = base_measure(s, measure_tau(c, 1.0 / 1024));
  const auto Rs = c.numbers("scan.R", {64.0});
  const auto ps = c.numbers("scan.p", {2.0});
  const double eps = c.number("scan.epsilon", 0.5);
  const double h_cfg = c.number("scan.h", 0.0);
  const auto regions = c.words("scan.regions", nu.dim() == 1 ? std::vector<std::string>{"ball"}
                                                             : std::vector<std::string>{"ball", "C", "E"});
  const auto grid = c.integer("budget.grid", static_cast<std::int64_t>(kDefaultGridBudget));
  const bool timings = c.flag("output.timings", false);

  Report r;
  r.budget.atoms_peak = nu.size();
  CsvTable table{"fourier_scan", {"region", "R", "epsilon", "p", "h", "integral_estimate", "cell_count", "wall_seconds"}, {}};
  for (const auto& name : regions) {
    for (double p : ps) {
      PlotSeries series{"region_" + name + "_p" + format_double(p), "log2_R", "log2_integral", {}};
      const double h = h_cfg > 0.0 ? h_cfg : default_grid_step(nu, p);
      for (double R : Rs) {
        const auto start = std::chrono::steady_clock::now();
        const LpIntegral I = lp_region_integral(nu, region_from(name, R, eps), p, h, static_cast<std::size_t>(grid));
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        r.budget.grid_cells += static_cast<double>(I.cells);
        table.rows.push_back({name, cell(R), cell(eps), cell(p), cell(h), cell(I.estimate), cell(I.cells),
                              timings ? cell(secs) : std::string()});
        series.points.emplace_back(std::log2(R), log2_or_nan(I.estimate));
      }
      r.results["growth_exponent"][series.name] = number_or_null(fitted_slope(series.points));
      r.series.push_back(std::move(series));
    }
  }
  r.results["atoms"] = nu.size();
  r.tables.push_back(std::move(table));
  return r;
}

Report tsujii_scan(const Config& c) {
  const Setup s = setup_from(c, false);
  const auto Rs = c.numbers("scan.R", {256.0, 1024.0, 4096.0, 16384.0});
  const double delta = c.number("scan.delta", 0.02);
  const double tol = c.number("scan.tol", 0.05);
  if (!(tol > 0.0 && tol <= 0.1)) config_error("scan.tol", "must lie in (0, 0.1]");
  SelfSimilarTransform transform(s.ifs, atom_budget(c));

  Report r;
  CsvTable table{"tsujii_scan", {"R", "delta", "cover_count"}, {}};
  PlotSeries series{"cover_count", "log2_R", "log2_count", {}};
  for (double R : Rs) {
    const SuperlevelScan scan = superlevel_cover_count(transform, R, delta, tol);
    table.rows.push_back({cell(R), cell(delta), cell(scan.count)});
    series.points.emplace_back(std::log2(R), log2_or_nan(static_cast<double>(scan.count)));
  }
  r.budget.atoms_peak = transform.peak_atoms();
  r.results["exponent"] = number_or_null(fitted_slope(series.points));
  r.tables.push_back(std::move(table));
  r.series.push_back(std::move(series));
  return r;
}

Report flattening(const Config& c) {
  const Setup s = setup_from(c);
  auto ps = c.numbers("flatten.p", {1, 2, 3, 4});
  LevelRange range{static_cast<int>(c.integer("flatten.m_min", 4)), static_cast<int>(c.integer("flatten.m_max", 8))};
  if (range.count() < 4) config_error("flatten.m_max", "the level range needs at least 4 levels");
  const double eps = c.number("flatten.epsilon", 0.1);
  const double tau = measure_tau(c, default_tau(range));
  unsigned p_max = 0;
  for (double p : ps) {
    if (p != std::floor(p) || p < 1 || p > 6) config_error("flatten.p", "powers must be integers in [1, 6]");
    p_max = std::max(p_max, static_cast<unsigned>(p));
  }
  ConvolveOptions opts;
  opts.atom_budget = atom_budget(c);
  const FlatteningReport rep = flattening_report(s.ifs, s.curve, p_max, range, eps, opts, tau);

  Report r;
  CsvTable table{"flattening_report", {"p", "m", "s_m", "normalized", "dim2_fit"}, {}};
  json dims = json::object(), slopes = json::object(), widths = json::object();
  for (double pd : ps) {
    const auto p = static_cast<unsigned>(pd);
    PlotSeries series{"p" + std::to_string(p), "m", "log2_s_m", {}};
    for (const auto& row : rep.rows) {
      if (row.p != p) continue;
      table.rows.push_back({cell(static_cast<std::size_t>(p)), std::to_string(row.m), cell(row.s_m),
                            cell(row.normalized), cell(row.dim2_fit)});
      series.points.emplace_back(row.m, std::log2(row.s_m));
    }
    dims[std::to_string(p)] = rep.dim2[p - 1];
    slopes[std::to_string(p)] = rep.normalized_slope[p - 1];
    widths[std::to_string(p)] = rep.coalesce_width[p - 1];
    r.series.push_back(std::move(series));
  }
  r.results["dim2"] = dims;
  r.results["normalized_slope"] = slopes;
  r.results["coalesce_width"] = widths;
  r.budget.pairs_streamed = static_cast<double>(rep.pairs_streamed);
  r.budget.atoms_peak = discretize(s.ifs, tau).size();
  r.tables.push_back(std::move(table));
  return r;
}

Report frostman(const Config& c) {
  const Setup s = setup_from(c);
  const DiscreteMeasure nu = base_measure(s, measure_tau(c, std::ldexp(1.0, -16)));
  const auto radii = c.numbers("frostman.radii", geometric_sequence(0.25, 0.5, 7));
  const double floor = c.number("frostman.floor", 0.0);
  const FrostmanFit fit = frostman_fit(nu, radii, floor);

  Report r;
  r.budget.atoms_peak = nu.size();
  CsvTable table{"frostman_scan", {"r", "max_ball_mass"}, {}};
  PlotSeries series{"max_ball_mass", "log2_r", "log2_mass", {}};
  for (const auto& row : fit.table) {
    table.rows.push_back({cell(row.scale), cell(row.value)});
    series.points.emplace_back(std::log2(row.scale), std::log2(row.value));
  }
  r.results["exponent"] = fit.exponent;
  r.tables.push_back(std::move(table));
  r.series.push_back(std::move(series));
  return r;
}

Report nonconcentration(const Config& c) {
  const Setup s = setup_from(c);
  if (!s.curve) config_error("curve.kind", "a non-concentration sweep needs a curve (d >= 2)");
  const DiscreteMeasure nu = base_measure(s, measure_tau(c, std::ldexp(1.0, -10)));
  const auto eps = c.numbers("sweep.eps", geometric_sequence(0.5, 0.5, 6));
  NonconcentrationOptions opts;
  opts.random_trials = static_cast<std::size_t>(c.integer("sweep.trials", 256));
  opts.anchored_cap = static_cast<std::size_t>(c.integer("sweep.anchored_cap", 1 << 20));
  opts.seed = static_cast<std::uint64_t>(c.integer("seed", 1));
  const NonconcentrationResult res = nonconcentration_sweep(nu, eps, opts);

  Report r;
  r.budget.atoms_peak = nu.size();
  CsvTable table{"nonconcentration_sweep", {"eps", "worst_mass"}, {}};
  PlotSeries series{"worst_mass", "log2_eps", "log2_mass", {}};
  for (const auto& row : res.table) {
    table.rows.push_back({cell(row.eps), cell(row.worst_mass)});
    series.points.emplace_back(std::log2(row.eps), log2_or_nan(row.worst_mass));
  }
  r.results["beta"] = res.beta;
  r.results["hyperplanes_tested"] = res.hyperplanes_tested;
  r.tables.push_back(std::move(table));
  r.series.push_back(std::move(series));
  return r;
}

std::string rational_text(const Rational& q) {
  std::ostringstream os;
  os << q;
  return os.str();
}

Report lift_verify(const Config& c) {
  const Setup s = setup_from(c, false);
  const auto ell_i = c.integer("lift.ell", 3);
  if (ell_i < 1 || ell_i > 12) config_error("lift.ell", "must lie in [1, 12]");
  const auto ell = static_cast<std::size_t>(ell_i);
  const auto depth_i = c.integer("lift.depth", 6);
  if (depth_i < 1 || depth_i > 20) config_error("lift.depth", "must lie in [1, 20]");
  const auto depth = static_cast<std::size_t>(depth_i);
  std::vector<Rational> xs_exact;
  if (c.has("lift.samples")) {
    xs_exact = c.rationals("lift.samples");
  } else {
    c.words("lift.samples", {"-1", "-1/2", "0", "1/3", "1/2", "1"});
    xs_exact = {Rational(-1), Rational(-1, 2), Rational(0), Rational(1, 3), Rational(1, 2), Rational(1)};
  }
  std::vector<double> xs;
  for (const auto& q : xs_exact) xs.push_back(to_double(q));
  const auto lambdas = c.rationals("ifs.lambda");
  const auto ts = c.rationals("ifs.t");

  const AffineIFS lifted = lift(s.ifs, ell);
  Report r;
  CsvTable table{"lift_verify", {"map", "lambda", "t", "ell", "float_defect", "exact_defect", "spectral_norm"}, {}};
  Rational worst_exact = 0;
  double worst_float = 0.0;
  for (std::size_t i = 0; i < s.ifs.size(); ++i) {
    const RationalMap rm{lambdas[i], ts[i]};
    const Rational exact = verify_conjugacy_exact(std::span<const RationalMap>(&rm, 1), ell, xs_exact);
    WeightedIFS single = s.ifs;
    AffineIFS one = lifted;
    single.maps = {s.ifs.maps[i]};
    one.maps = {lifted.maps[i]};
    const double fl = verify_conjugacy(single, one, xs);
    worst_exact = std::max(worst_exact, exact);
    worst_float = std::max(worst_float, fl);
    table.rows.push_back({std::to_string(i), cell(s.ifs.maps[i].lambda), cell(s.ifs.maps[i].t), std::to_string(ell),
                          cell(fl), rational_text(exact), cell(spectral_norm(lifted.maps[i].A))});
  }

  // Coherence: the lifted system's depth-n atoms against the pushed-forward
  // depth-n atoms of the line system, both started at 0.
  const DiscreteMeasure line = discretize_depth(s.ifs, depth);
  Interval hull = attractor_interval(s.ifs);
  for (std::size_t i = 0; i < line.size(); ++i) {
    hull.lo = std::min(hull.lo, line.coord(i, 0));
    hull.hi = std::max(hull.hi, line.coord(i, 0));
  }
  double coherence = std::nan("");
  if (ell >= 2) {
    const double pad = 0.05 * std::max(hull.length(), 1.0);
    const DiscreteMeasure pushed = pushforward(line, CurveSpec::moment(ell, {hull.lo - pad, hull.hi + pad}));
    const DiscreteMeasure affine =
        discretize_affine(lifted, depth, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ell)), atom_budget(c));
    coherence = atom_set_distance(affine, pushed);
    r.budget.atoms_peak = affine.size();
  }
  const ContractingLift contracting = ensure_contracting(s.ifs, ell);

  r.results["defect"] = rational_text(worst_exact);
  r.results["float_defect"] = worst_float;
  r.results["coherence_distance"] = number_or_null(coherence);
  r.results["contracting_iterate"] = contracting.m;
  r.results["contracting_max_spectral_norm"] = contracting.max_spectral_norm;
  r.tables.push_back(std::move(table));
  return r;
}

Report consistency(const Config& c) {
  const Setup s = setup_from(c);
  const DiscreteMeasure nu = base_measure(s, measure_tau(c, std::ldexp(1.0, -12)));
  const auto levels = c.numbers("consistency.levels", {4, 5, 6, 7, 8});
  const double h = c.number("consistency.h", 0.0);
  Report r;
  r.budget.atoms_peak = nu.size();
  CsvTable table{"consistency_check", {"level", "s_m", "integral", "cell_count", "ratio"}, {}};
  PlotSeries series{"ratio", "level", "log2_ratio", {}};
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double L : levels) {
    if (L != std::floor(L) || L < 0 || L > 12) config_error("consistency.levels", "levels must be integers in [0, 12]");
    const ConsistencyResult res = fourier_moment_consistency(nu, static_cast<int>(L), h);
    r.budget.grid_cells += static_cast<double>(res.cells);
    table.rows.push_back({std::to_string(res.level), cell(res.s_m), cell(res.integral), cell(res.cells), cell(res.ratio)});
    series.points.emplace_back(L, std::log2(res.ratio));
    lo = std::min(lo, res.ratio);
    hi = std::max(hi, res.ratio);
  }
  r.results["ratio_min"] = lo;
  r.results["ratio_max"] = hi;
  r.tables.push_back(std::move(table));
  r.series.push_back(std::move(series));
  return r;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

}  // namespace

const std::vector<Experiment>& all_experiments() {
  static const std::vector<Experiment> all = {
      Experiment::kFourierScan,  Experiment::kTsujiiScan,            Experiment::kFlatteningReport,
      Experiment::kFrostmanScan, Experiment::kNonconcentrationSweep, Experiment::kLiftVerify,
      Experiment::kConsistencyCheck};
  return all;
}

std::string experiment_name(Experiment e) {
  switch (e) {
    case Experiment::kFourierScan: return "fourier-scan";
    case Experiment::kTsujiiScan: return "tsujii-scan";
    case Experiment::kFlatteningReport: return "flattening-report";
    case Experiment::kFrostmanScan: return "frostman-scan";
    case Experiment::kNonconcentrationSweep: return "nonconcentration-sweep";
    case Experiment::kLiftVerify: return "lift-verify";
    case Experiment::kConsistencyCheck: return "consistency-check";
  }
  return "unknown";
}

std::string experiment_summary(Experiment e) {
  switch (e) {
    case Experiment::kFourierScan: return "L^p integrals of the Fourier transform over ball / C / E regions";
    case Experiment::kTsujiiScan: return "superlevel cover counts of a self-similar transform on the line";
    case Experiment::kFlatteningReport: return "moment sums and L^2 dimensions of convolution powers";
    case Experiment::kFrostmanScan: return "maximal ball masses and the fitted Frostman exponent";
    case Experiment::kNonconcentrationSweep: return "worst slab masses near hyperplanes";
    case Experiment::kLiftVerify: return "exact and float conjugacy of the moment-curve lift";
    case Experiment::kConsistencyCheck: return "moment sums against L^2 norms of the transform over balls";
  }
  return {};
}

std::optional<Experiment> experiment_from_name(const std::string& name) {
  for (Experiment e : all_experiments()) {
    if (experiment_name(e) == name) return e;
  }
  return std::nullopt;
}

Report compute_report(Experiment kind, const Config& config) {
  Report r;
  switch (kind) {
    case Experiment::kFourierScan: r = fourier_scan(config); break;
    case Experiment::kTsujiiScan: r = tsujii_scan(config); break;
    case Experiment::kFlatteningReport: r = flattening(config); break;
    case Experiment::kFrostmanScan: r = frostman(config); break;
    case Experiment::kNonconcentrationSweep: r = nonconcentration(config); break;
    case Experiment::kLiftVerify: r = lift_verify(config); break;
    case Experiment::kConsistencyCheck: r = consistency(config); break;
  }
  r.kind = kind;
  config.integer("seed", 1);
  config.reject_unused();
  return r;
}

std::string csv_text(const CsvTable& table) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    out += '\n';
  };
  line(table.header);
  for (const auto& row : table.rows) line(row);
  return out;
}

std::vector<fs::path> emit_plotdata(const Report& report, const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& s : report.series) {
    if (s.points.empty()) continue;
    const fs::path path = dir / (experiment_name(report.kind) + "__" + s.name + ".dat");
    std::string text = "# " + s.x_label + " " + s.y_label + "\n";
    for (const auto& [x, y] : s.points) text += format_double(x) + " " + format_double(y) + "\n";
    write_text(path, text);
    files.push_back(path);
  }
  return files;
}

RunSummary run_experiment(Experiment kind, Config config, const RunOptions& options) {
  if (options.seed) config.set("seed", std::to_string(*options.seed));
  set_thread_count(options.threads);
  const std::string started = utc_now();
  const auto start = std::chrono::steady_clock::now();

  RunSummary out;
  out.report = compute_report(kind, config);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::error_code ec;
  fs::create_directories(options.out_dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + options.out_dir.string() + ": " + ec.message());
  for (const auto& t : out.report.tables) {
    const fs::path path = options.out_dir / (t.name + ".csv");
    write_text(path, csv_text(t));
    out.files.push_back(path);
  }
  for (auto& p : emit_plotdata(out.report, options.out_dir)) out.files.push_back(p);

  json& m = out.manifest;
  m["schema"] = kSchemaVersion;
  m["experiment"] = experiment_name(kind);
  m["version"] = kVersion;
  m["started_utc"] = started;
  m["wall_seconds"] = wall;
  m["threads"] = thread_count();
  m["seed"] = config.resolved().at("seed");
  m["config"] = config.resolved();
  m["budget"] = {{"atoms_peak", out.report.budget.atoms_peak},
                 {"grid_cells", out.report.budget.grid_cells},
                 {"pairs_streamed", out.report.budget.pairs_streamed}};
  m["results"] = out.report.results;
  json files = json::array();
  for (const auto& f : out.files) files.push_back(f.filename().string());
  m["files"] = files;
  const fs::path manifest = options.out_dir / "manifest.json";
  write_text(manifest, m.dump(2) + "\n");
  out.files.push_back(manifest);
  return out;
}

int exit_code_for(const Error& e) {
  if (is_budget_error(e.code())) return 3;
  switch (e.code()) {
    case ErrorCode::kIdenticallyZero:
    case ErrorCode::kInsufficientScales:
    case ErrorCode::kNonContraction:
      return 4;
    case ErrorCode::kIoError:
      return 1;
    default:
      return 2;
  }
}

std::string config_reference() {
  std::ostringstream os;
  os << "Config file: one 'key = value' per line, '#' starts a comment.\n"
        "Lists are comma-separated; numbers may be written as a/b.\n\n";
  for (const auto& k : kKeys) {
    os << "  " << std::left << std::setw(22) << k.key << " default " << k.fallback << "\n"
       << "  " << std::setw(22) << "" << " " << k.text << " [" << k.used_by << "]\n";
  }
  os << "\nOutputs land in --out: one CSV per table, manifest.json, and plot data\n"
        "files named <experiment>__<series>.dat (two whitespace-separated columns).\n"
        "Exit codes: 0 ok, 2 config error, 3 budget exceeded, 4 numeric failure.\n";
  return os.str();
}

}  // namespace flatten::runner
