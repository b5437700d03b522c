// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "flatten/affine_lift.hpp"
#include "flatten/curves.hpp"
#include "flatten/error.hpp"
#include "flatten/ifs.hpp"
#include "flatten/measures.hpp"
#include "flatten/moments.hpp"
#include "flatten/spectral.hpp"
#include "runner/config.hpp"
#include "runner/experiments.hpp"
#include "support.hpp"

using namespace flatten;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + ("failed: " + what);
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Rational random_rational(std::mt19937_64& rng, int lo_num, int hi_num, int den_max) {
  std::uniform_int_distribution<int> den(2, den_max);
  const int d = den(rng);
  std::uniform_int_distribution<int> num(lo_num * d, hi_num * d);
  return Rational(num(rng), d);
}

// 1. Exact and floating-point conjugacy of the moment-curve lift.
Outcome lift_identity() {
  Outcome o;
  std::mt19937_64 rng(101);
  Rational worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 3;
    const std::size_t ell = 1 + trial % 4;
    std::vector<RationalMap> maps;
    for (std::size_t i = 0; i < n; ++i) {
      Rational lambda = random_rational(rng, 1, 1, 9) / 2;  // in (0, 1/2]
      if (rng() & 1) lambda = -lambda;
      maps.push_back({lambda, random_rational(rng, -1, 1, 9)});
    }
    std::vector<Rational> xs;
    for (int k = 0; k < 5; ++k) xs.push_back(random_rational(rng, -2, 2, 11));
    const Rational d = verify_conjugacy_exact(maps, ell, xs);
    if (d > worst) worst = d;
  }
  o.require(worst == 0, "exact defect " + worst.str());

  double worst_float = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto ifs = fixtures::random_ifs(rng, 2 + trial % 3, 0.05, 0.9);
    const std::size_t ell = 1 + trial % 4;
    std::vector<double> xs;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 8; ++k) xs.push_back(u(rng));
    worst_float = std::max(worst_float, verify_conjugacy(ifs, lift(ifs, ell), xs));
  }
  o.require(worst_float >= 0.0 && worst_float < 1e-12, "float defect " + fmt(worst_float));
  o.note("exact defect 0 on 100 systems, max float defect " + fmt(worst_float));
  return o;
}

// 2. Lifted IFS discretization equals the pushed-forward cut at depth 6.
Outcome lift_coherence() {
  Outcome o;
  std::mt19937_64 rng(202);
  std::vector<WeightedIFS> systems_list = {systems::middle_thirds(), systems::dyadic(), fixtures::two_ratio_ifs()};
  for (int k = 0; k < 3; ++k) systems_list.push_back(fixtures::random_ifs(rng, 3));
  double worst = 0.0;
  for (const auto& ifs : systems_list) {
    for (std::size_t ell : {2u, 3u}) {
      const auto affine = discretize_affine(lift(ifs, ell), 6, Eigen::VectorXd::Zero(static_cast<int>(ell)));
      const auto line = discretize_depth(ifs, 6);
      const auto pushed = pushforward(line, CurveSpec::moment(ell, default_curve_domain(ifs)));
      worst = std::max(worst, atom_set_distance(affine, pushed));
    }
  }
  o.require(worst < 1e-10, "atom-set distance " + fmt(worst));
  o.note("max atom-set distance " + fmt(worst) + " over " + std::to_string(systems_list.size() * 2) + " cases");
  return o;
}

// 3. Cut-sets against brute force; weight sums; growth of the ratio set.
Outcome cut_sets() {
  Outcome o;
  std::mt19937_64 rng(303);
  std::size_t mismatches = 0;
  double worst_sum = 0.0, worst_excess = -1e9;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + trial % 3;
    const auto ifs = fixtures::random_ifs(rng, n);
    for (double tau : {0.3, 0.1, 0.03}) {
      const auto words = cut_set(ifs, tau);
      double total = 0.0;
      std::vector<Word> got;
      for (const auto& w : words) {
        total += w.weight;
        got.push_back(w.word);
      }
      worst_sum = std::max(worst_sum, std::fabs(total - 1.0));
      const auto depth = static_cast<std::size_t>(std::ceil(std::log(tau) / std::log(ifs.max_abs_ratio()))) + 1;
      if (got != fixtures::brute_force_cut(ifs, tau, depth)) ++mismatches;
    }
    std::vector<double> lk, lc;
    for (int k = 4; k <= 20; ++k) {
      lk.push_back(std::log(static_cast<double>(k)));
      lc.push_back(std::log(static_cast<double>(contraction_ratio_count(ifs, std::ldexp(1.0, -k)))));
    }
    worst_excess = std::max(worst_excess, slope(lk, lc) - static_cast<double>(n + 2));
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " cut-set mismatches");
  o.require(worst_sum <= 1e-10, "weight sum off by " + fmt(worst_sum));
  o.require(worst_excess <= 0.0, "growth slope exceeds n+2 by " + fmt(worst_excess));
  o.note("150 cut-sets match, max |sum-1| " + fmt(worst_sum) + ", max slope-(n+2) " + fmt(worst_excess));
  return o;
}

// 4. Moment sums against L2 norms of the Fourier transform over balls.
Outcome fourier_moment() {
  Outcome o;
  struct Case {
    std::string name;
    DiscreteMeasure m;
  };
  const std::vector<Case> cases = {
      {"lebesgue", discretize(systems::dyadic(), std::ldexp(1.0, -13))},
      {"cantor", discretize(systems::middle_thirds(), std::ldexp(1.0, -14))},
      {"cantor-V2", pushforward(discretize(systems::middle_thirds(), std::ldexp(1.0, -14)),
                                CurveSpec::moment(2, default_curve_domain(systems::middle_thirds())))},
  };
  for (const auto& c : cases) {
    double lo = 1e300, hi = 0.0;
    for (int level = 4; level <= 10; ++level) {
      const double r = fourier_moment_consistency(c.m, level).ratio;
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    o.require(lo >= 1.0 / 64 && hi <= 64.0, c.name + " ratio outside [1/64, 64]");
    o.note(c.name + " ratio in [" + fmt(lo) + ", " + fmt(hi) + "]");
  }
  double lo = 1e300, hi = 0.0;
  for (int level = 4; level <= 10; ++level) {
    const double r = fourier_moment_consistency(DiscreteMeasure::dirac({0.0}), level).ratio;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  o.require(lo >= 0.45 && hi <= 0.55, "dirac ratio not 1/2 within 10%");
  o.note("dirac ratio in [" + fmt(lo) + ", " + fmt(hi) + "]");
  return o;
}

// 5. Frostman exponents of Cantor, Lebesgue and a point mass.
Outcome frostman() {
  Outcome o;
  std::vector<double> triadic, dyadic_radii;
  for (int k = 2; k <= 7; ++k) triadic.push_back(std::pow(3.0, -k));
  for (int k = 2; k <= 10; ++k) dyadic_radii.push_back(std::ldexp(1.0, -k));
  const double cantor = frostman_fit(discretize(systems::middle_thirds(), std::pow(3.0, -10)), triadic).exponent;
  const double leb = frostman_fit(discretize(systems::dyadic(), std::ldexp(1.0, -16)), dyadic_radii).exponent;
  const double dirac = frostman_fit(DiscreteMeasure::dirac({0.0}), dyadic_radii).exponent;
  o.require(std::fabs(cantor - std::log(2.0) / std::log(3.0)) <= 0.05, "cantor " + fmt(cantor));
  o.require(std::fabs(leb - 1.0) <= 0.1, "lebesgue " + fmt(leb));
  o.require(std::fabs(dirac) <= 0.02, "dirac " + fmt(dirac));
  o.note("cantor " + fmt(cantor) + ", lebesgue " + fmt(leb) + ", dirac " + fmt(dirac));
  return o;
}

// 6. Superlevel covers of the Cantor transform grow slowly in R.
Outcome tsujii() {
  Outcome o;
  SelfSimilarTransform transform(systems::middle_thirds());
  std::vector<double> lr, lc, la;
  std::string counts;
  for (int k : {8, 10, 12, 14}) {
    const double R = std::ldexp(1.0, k);
    const auto scan = superlevel_cover_count(transform, R, 0.02, 0.05);
    if (k == 10) o.require(static_cast<double>(scan.count) < R / 4, "count at R=2^10 not below R/4");
    const auto atom = superlevel_cover_count(DiscreteMeasure::dirac({0.3}), R, 0.02);
    lr.push_back(std::log(R));
    lc.push_back(std::log(static_cast<double>(std::max<std::size_t>(scan.count, 1))));
    la.push_back(std::log(static_cast<double>(atom.count)));
    counts += (counts.empty() ? "" : ",") + std::to_string(scan.count);
  }
  const double cantor = slope(lr, lc), atom = slope(lr, la);
  o.require(cantor <= 0.6, "cantor slope " + fmt(cantor));
  o.require(std::fabs(atom - 1.0) <= 0.02, "single-atom slope " + fmt(atom));
  o.note("cantor counts " + counts + " slope " + fmt(cantor) + ", single-atom slope " + fmt(atom));
  return o;
}

// 7. L2 dimensions of convolution powers of Cantor on the parabola.
Outcome flattening() {
  Outcome o;
  const LevelRange range{4, 10};
  const auto ifs = systems::middle_thirds();
  const auto rep = flattening_report(ifs, CurveSpec::moment(2, default_curve_domain(ifs)), 4, range, 0.1, {},
                                     std::ldexp(1.0, -12));
  std::string dims;
  for (std::size_t i = 0; i < rep.dim2.size(); ++i) {
    dims += (dims.empty() ? "" : ",") + fmt(rep.dim2[i]);
    if (i > 0) o.require(rep.dim2[i] >= rep.dim2[i - 1] - 0.05, "dim2 drops at p=" + std::to_string(i + 1));
  }
  o.require(rep.dim2[3] > rep.dim2[0], "dim2(p=4) not above dim2(p=1)");

  const auto line = CurveSpec::graph({Polynomial(std::vector<double>{0.0})}, default_curve_domain(systems::dyadic()));
  const auto control = flattening_report(systems::dyadic(), line, 4, range, 0.1, {}, std::ldexp(1.0, -12));
  double worst = 0.0;
  for (double d : control.dim2) worst = std::max(worst, d);
  o.require(worst <= 1.1, "line control dim2 " + fmt(worst));
  o.note("cantor-parabola dim2 by p " + dims + ", line control max " + fmt(worst));
  return o;
}

// 8. A measure on a line does not decay along the normal direction.
Outcome degenerate_direction() {
  Outcome o;
  const auto line = pushforward(discretize(systems::dyadic(), std::ldexp(1.0, -10)),
                                CurveSpec::graph({Polynomial(std::vector<double>{0.0})}, {-0.1, 1.1}));
  const double gamma = pointwise_decay_fit(line, {{1.0}}, 4096.0).gamma;
  o.require(gamma <= 0.02, "gamma " + fmt(gamma));
  int exact = 0;
  for (int k = 0; k < 20; ++k) {
    const Complex v = ft_discrete(line, Frequency{0.0, {std::pow(1.7, k) + 0.3 * k}});
    if (v == Complex(1.0, 0.0)) ++exact;
  }
  o.require(exact == 20, std::to_string(20 - exact) + " transforms differ from 1");
  o.note("gamma " + fmt(gamma) + ", transform exactly 1 at 20/20 frequencies");
  return o;
}

// 9. Ball = C + E for the L2 integral at R = 64.
Outcome regions() {
  Outcome o;
  const std::vector<std::pair<std::string, DiscreteMeasure>> cases = {
      {"cantor-V2", pushforward(discretize(systems::middle_thirds(), std::ldexp(1.0, -10)),
                                CurveSpec::moment(2, {-0.1, 1.1}))},
      {"dyadic-V2",
       pushforward(discretize(systems::dyadic(), std::ldexp(1.0, -8)), CurveSpec::moment(2, {-0.1, 1.1}))},
  };
  for (const auto& [name, m] : cases) {
    const double ball = lp_region_integral(m, region::Ball{64.0}, 2.0, 0.25).estimate;
    const double c = lp_region_integral(m, region::C{64.0, 0.5}, 2.0, 0.25).estimate;
    const double e = lp_region_integral(m, region::E{64.0, 0.5}, 2.0, 0.25).estimate;
    const double rel = std::fabs(ball - (c + e)) / ball;
    o.require(rel <= 0.02, name + " relative gap " + fmt(rel));
    o.note(name + " ball " + fmt(ball) + " vs C+E " + fmt(c + e) + " (gap " + fmt(rel) + ")");
  }
  return o;
}

// 10. Slab masses on the parabola decay; on a line they do not.
Outcome nonconcentration() {
  Outcome o;
  std::vector<double> eps;
  for (int k = 1; k <= 6; ++k) eps.push_back(std::ldexp(1.0, -k));
  const auto curved = pushforward(discretize(systems::dyadic(), std::ldexp(1.0, -10)), CurveSpec::moment(2, {-0.1, 1.1}));
  const auto flat = pushforward(discretize(systems::dyadic(), std::ldexp(1.0, -10)),
                                CurveSpec::graph({Polynomial(std::vector<double>{0.0})}, {-0.1, 1.1}));
  const double beta = nonconcentration_sweep(curved, eps).beta;
  const double control = nonconcentration_sweep(flat, eps).beta;
  o.require(beta > 0.3, "parabola beta " + fmt(beta));
  o.require(control <= 0.02, "line beta " + fmt(control));
  o.note("parabola beta " + fmt(beta) + ", line beta " + fmt(control));
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

// 11. Repeated CLI runs with the same seed write identical CSVs.
Outcome determinism() {
  Outcome o;
  const std::string base =
      "schema = 1\nifs.lambda = 1/3, 1/3\nifs.t = 0, 2/3\nifs.weights = 1/2, 1/2\n";
  const std::vector<std::pair<runner::Experiment, std::string>> runs = {
      {runner::Experiment::kFourierScan, "curve.kind = moment\nscan.R = 16\n"},
      {runner::Experiment::kTsujiiScan, "scan.R = 256, 1024\n"},
      {runner::Experiment::kFlatteningReport, "curve.kind = moment\nflatten.m_min = 3\nflatten.m_max = 7\n"},
      {runner::Experiment::kNonconcentrationSweep,
       "curve.kind = moment\nsweep.anchored_cap = 2000\nsweep.trials = 500\n"},
      {runner::Experiment::kConsistencyCheck, "curve.kind = moment\nconsistency.levels = 3, 4, 5\n"},
  };
  const fs::path root = fs::temp_directory_path() / "flatten_acceptance_determinism";
  std::size_t compared = 0;
  for (const auto& [kind, extra] : runs) {
    const std::string text = base + extra;
    std::vector<fs::path> dirs;
    for (unsigned threads : {1u, 4u, 1u}) {
      const fs::path dir = root / (runner::experiment_name(kind) + "_" + std::to_string(dirs.size()));
      fs::remove_all(dir);
      std::istringstream is(text);
      runner::run_experiment(kind, runner::Config::parse(is), {dir, threads, 7});
      dirs.push_back(dir);
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      if (entry.path().extension() != ".csv") continue;
      for (std::size_t k = 1; k < dirs.size(); ++k) {
        const bool same = slurp(entry.path()) == slurp(dirs[k] / entry.path().filename());
        o.require(same, entry.path().filename().string() + " differs");
        ++compared;
      }
    }
  }
  fs::remove_all(root);
  o.require(compared > 0, "nothing compared");
  o.note(std::to_string(compared) + " CSV reruns byte-identical across 1 and 4 threads");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"lift identity", lift_identity},
      {"lift/pushforward coherence", lift_coherence},
      {"cut-set oracle", cut_sets},
      {"fourier/moment equivalence", fourier_moment},
      {"frostman exponents", frostman},
      {"superlevel trend", tsujii},
      {"flattening trend", flattening},
      {"degenerate direction", degenerate_direction},
      {"region decomposition", regions},
      {"non-concentration", nonconcentration},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!out.pass) ++failures;
    std::printf("%s [%zu] %s: %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
