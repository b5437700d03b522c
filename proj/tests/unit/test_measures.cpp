#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "flatten/curves.hpp"
#include "flatten/error.hpp"
#include "flatten/measures.hpp"
#include "support.hpp"

using namespace flatten;

namespace {

DiscreteMeasure quarter_points() { return fixtures::uniform_line({0.0, 0.25, 0.5, 0.75}); }

DiscreteMeasure dyadic_on_parabola() {
  return pushforward(discretize(systems::dyadic(), 0.3), CurveSpec::moment(2, {-0.05, 1.05}));
}

void expect_same_atoms(const DiscreteMeasure& a, const DiscreteMeasure& b, double tol) {
  EXPECT_LE(atom_set_distance(a, b), tol);
}

}  // namespace

TEST(Discretize, DyadicAtPointThree) {
  const auto m = discretize(systems::dyadic(), 0.3);
  ASSERT_EQ(m.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(m.coord(i, 0), 0.25 * static_cast<double>(i));
    EXPECT_DOUBLE_EQ(m.weight(i), 0.25);
  }
}

TEST(Discretize, LargeTauGivesTranslations) {
  const auto ifs = fixtures::two_ratio_ifs();
  const auto m = discretize(ifs, 0.9);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.coord(1, 0), ifs.maps[1].t);
  EXPECT_EQ(m.weight(1), ifs.weights[1]);
}

TEST(Discretize, MiddleThirds) {
  const auto m = discretize(systems::middle_thirds(), 0.2);
  ASSERT_EQ(m.size(), 4u);
  const double expected[] = {0.0, 2.0 / 9.0, 2.0 / 3.0, 8.0 / 9.0};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(m.coord(i, 0), expected[i], 1e-15);
    EXPECT_DOUBLE_EQ(m.weight(i), 0.25);
  }
}

TEST(Discretize, KeepsCoincidentAtoms) {
  // t_i + t_j / 2 hits 1/4 and 1/2 twice each.
  const auto ifs = make_uniform_ifs({{0.5, 0.0}, {0.5, 0.25}, {0.5, 0.5}});
  const auto m = discretize_depth(ifs, 2);
  EXPECT_EQ(m.size(), 9u);
  EXPECT_NEAR(m.total_mass(), 1.0, 1e-12);
}

TEST(Pushforward, Examples) {
  const auto m = pushforward(fixtures::uniform_line({0.0, 0.5}), CurveSpec::moment(2, {-1, 1}));
  ASSERT_EQ(m.dim(), 2u);
  EXPECT_EQ(m.coord(1, 0), 0.5);
  EXPECT_EQ(m.coord(1, 1), 0.25);
  const auto d = pushforward(DiscreteMeasure::dirac({0.0}), CurveSpec::moment(3, {-1, 1}));
  EXPECT_EQ(d.size(), 1u);
  EXPECT_EQ(d.coord(0, 2), 0.0);
  const auto p = dyadic_on_parabola();
  const double y[] = {0.0, 1.0 / 16, 0.25, 9.0 / 16};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(p.coord(i, 1), y[i]);
}

TEST(Pushforward, DomainViolationNamesAtom) {
  try {
    pushforward(fixtures::uniform_line({0.0, 2.0}), CurveSpec::moment(2, {-1, 1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDomainViolation);
    EXPECT_NE(std::string(e.what()).find("atom 1"), std::string::npos);
  }
}

TEST(Pushforward, ProjectionRecoversLineMeasure) {
  const auto mu = discretize(systems::middle_thirds(), 1e-3);
  const auto nu = pushforward(mu, CurveSpec::moment(3, default_curve_domain(systems::middle_thirds())));
  ASSERT_EQ(nu.size(), mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    EXPECT_EQ(nu.coord(i, 0), mu.coord(i, 0));
    EXPECT_EQ(nu.weight(i), mu.weight(i));
  }
}

TEST(Convolve, Examples) {
  const auto dd = convolve(DiscreteMeasure::dirac({0.25}), DiscreteMeasure::dirac({0.5}));
  ASSERT_EQ(dd.size(), 1u);
  EXPECT_EQ(dd.coord(0, 0), 0.75);
  EXPECT_EQ(dd.weight(0), 1.0);

  const auto half = convolve(fixtures::uniform_line({0.0, 0.5}), fixtures::uniform_line({0.0, 0.5}));
  ASSERT_EQ(half.size(), 3u);
  EXPECT_EQ(half.weight(0), 0.25);
  EXPECT_EQ(half.weight(1), 0.5);
  EXPECT_EQ(half.weight(2), 0.25);

  const auto q = convolve(quarter_points(), quarter_points());
  ASSERT_EQ(q.size(), 7u);
  const double w[] = {1, 2, 3, 4, 3, 2, 1};
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_EQ(q.coord(i, 0), 0.25 * static_cast<double>(i));
    EXPECT_DOUBLE_EQ(q.weight(i), w[i] / 16.0);
  }
}

TEST(Convolve, DimMismatchAndBudget) {
  EXPECT_THROW(convolve(DiscreteMeasure::dirac({0.0}), DiscreteMeasure::dirac({0.0, 0.0})), Error);
  ConvolveOptions tight;
  tight.atom_budget = 10;
  try {
    convolve(quarter_points(), quarter_points(), tight);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAtomBudgetExceeded);
  }
  tight.coalesce_width = 0.5;
  const auto coarse = convolve(quarter_points(), quarter_points(), tight);
  EXPECT_LE(coarse.size(), 10u);
  EXPECT_NEAR(coarse.total_mass(), 1.0, 1e-12);
}

TEST(Convolve, CommutativeAndAssociative) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto random_measure = [&](std::size_t n) {
    std::vector<double> c, w;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      c.push_back(u(rng));
      c.push_back(u(rng));
      w.push_back(0.1 + u(rng));
      total += w.back();
    }
    for (double& x : w) x /= total;
    return DiscreteMeasure(2, c, w);
  };
  for (int t = 0; t < 5; ++t) {
    const auto a = random_measure(7), b = random_measure(5), c = random_measure(4);
    expect_same_atoms(convolve(a, b), convolve(b, a), 1e-12);
    expect_same_atoms(convolve(convolve(a, b), c), convolve(a, convolve(b, c)), 1e-12);
    EXPECT_NEAR(convolve(a, b).total_mass(), 1.0, 1e-9);
  }
}

TEST(ConvolutionPower, Examples) {
  const auto q = quarter_points();
  expect_same_atoms(convolution_power(q, 1), q, 0.0);
  const auto d3 = convolution_power(DiscreteMeasure::dirac({0.25, -1.0}), 3);
  ASSERT_EQ(d3.size(), 1u);
  EXPECT_EQ(d3.coord(0, 0), 0.75);
  EXPECT_EQ(d3.coord(0, 1), -3.0);
  const auto h = fixtures::uniform_line({0.0, 0.5});
  expect_same_atoms(convolution_power(h, 2), convolve(h, h), 0.0);
}

TEST(BallMass, Examples) {
  const std::vector<double> origin = {0.0};
  EXPECT_EQ(ball_mass(DiscreteMeasure::dirac({0.0}), origin, 1e-9), 1.0);
  EXPECT_DOUBLE_EQ(ball_mass(quarter_points(), origin, 0.3), 0.5);
  const std::vector<double> half = {0.5};
  EXPECT_DOUBLE_EQ(ball_mass(quarter_points(), half, 0.05), 0.25);
  EXPECT_DOUBLE_EQ(ball_mass(quarter_points(), half, 0.25), 0.75);  // closed ball
}

TEST(BallMass, MaxOverAtomsMatchesBruteForce) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t dim : {1u, 2u, 3u}) {
    std::vector<double> c, w;
    for (int i = 0; i < 300; ++i) {
      for (std::size_t k = 0; k < dim; ++k) c.push_back(u(rng));
      w.push_back(1.0 / 300);
    }
    const DiscreteMeasure m(dim, c, w);
    double last = 0.0;
    for (double r : {0.01, 0.03, 0.1, 0.3}) {
      double brute = 0.0;
      for (std::size_t i = 0; i < m.size(); ++i) brute = std::max(brute, ball_mass(m, m.point(i), r));
      EXPECT_NEAR(max_ball_mass(m, r), brute, 1e-12);
      EXPECT_GE(brute, last);
      last = brute;
    }
  }
}

TEST(Frostman, CantorExponent) {
  const auto m = discretize(systems::middle_thirds(), std::pow(3.0, -8));
  std::vector<double> radii;
  for (int k = 2; k <= 6; ++k) radii.push_back(std::pow(3.0, -k));
  const auto fit = frostman_fit(m, radii);
  EXPECT_NEAR(fit.exponent, std::log(2.0) / std::log(3.0), 0.05);
  for (std::size_t i = 0; i < fit.table.size(); ++i) {
    EXPECT_NEAR(fit.table[i].value, std::pow(2.0, -static_cast<double>(i + 2)), 1e-12);
  }
}

TEST(Frostman, LebesgueAndDirac) {
  const auto leb = discretize(systems::dyadic(), std::ldexp(1.0, -16));
  std::vector<double> radii;
  for (int k = 2; k <= 8; ++k) radii.push_back(std::ldexp(1.0, -k));
  EXPECT_NEAR(frostman_fit(leb, radii).exponent, 1.0, 0.1);
  EXPECT_NEAR(frostman_fit(DiscreteMeasure::dirac({0.0}), radii).exponent, 0.0, 0.02);
}

TEST(Frostman, NeedsThreeRadiiAndRespectsFloor) {
  const std::vector<double> two = {0.5, 0.25};
  try {
    frostman_fit(quarter_points(), two);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientScales);
  }
  const std::vector<double> radii = {0.5, 0.25, 0.125};
  EXPECT_THROW(frostman_fit(quarter_points(), radii, 0.2), Error);
  EXPECT_DOUBLE_EQ(frostman_scale_floor(1e-4), 1e-2);
}

TEST(SlabMass, Examples) {
  const auto origin = DiscreteMeasure::dirac({0.0, 0.0});
  EXPECT_EQ(slab_mass(origin, Hyperplane::make({1.0, 0.0}, 0.0), 1e-6), 1.0);
  const auto p = dyadic_on_parabola();
  EXPECT_DOUBLE_EQ(slab_mass(p, Hyperplane::make({0.0, 1.0}, 0.0), 0.01), 0.25);
  EXPECT_EQ(slab_mass(p, Hyperplane::make({1.0, 0.0}, 0.37), 0.01), 0.0);
  EXPECT_THROW(slab_mass(quarter_points(), Hyperplane::make({1.0}, 0.0), 0.1), Error);
}

TEST(SlabMass, MonotoneInEps) {
  const auto p = pushforward(discretize(systems::middle_thirds(), 1e-3), CurveSpec::moment(2, {-0.1, 1.1}));
  const auto w = Hyperplane::make({0.3, -1.0}, 0.1);
  double last = 0.0;
  for (double eps : {0.001, 0.01, 0.05, 0.2, 1.0}) {
    const double s = slab_mass(p, w, eps);
    EXPECT_GE(s, last);
    last = s;
  }
}

TEST(Hyperplane, NormalIsUnit) {
  const auto w = Hyperplane::make({3.0, 4.0}, 10.0);
  EXPECT_NEAR(std::hypot(w.normal[0], w.normal[1]), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(w.offset, 2.0);
}

TEST(Nonconcentration, LineAndDirac) {
  const std::vector<double> eps = {0.5, 0.25, 0.125, 0.0625};
  const auto line = pushforward(discretize(systems::dyadic(), 1.0 / 64),
                                CurveSpec::graph({Polynomial{0.2, 0.5}}, {-0.1, 1.1}));
  const auto res = nonconcentration_sweep(line, eps);
  for (const auto& row : res.table) EXPECT_NEAR(row.worst_mass, 1.0, 1e-12);
  EXPECT_NEAR(res.beta, 0.0, 0.02);
  const auto dirac = nonconcentration_sweep(DiscreteMeasure::dirac({0.0, 0.0}), eps);
  for (const auto& row : dirac.table) EXPECT_EQ(row.worst_mass, 1.0);
}

TEST(Nonconcentration, SeedDeterminism) {
  const auto p = pushforward(discretize(systems::dyadic(), 1.0 / 256), CurveSpec::moment(2, {-0.1, 1.1}));
  const std::vector<double> eps = {0.5, 0.25, 0.125};
  const auto a = nonconcentration_sweep(p, eps);
  const auto b = nonconcentration_sweep(p, eps);
  ASSERT_EQ(a.table.size(), b.table.size());
  for (std::size_t i = 0; i < a.table.size(); ++i) EXPECT_EQ(a.table[i].worst_mass, b.table[i].worst_mass);
}

TEST(MeasureCsv, RoundTripIsExact) {
  const auto p = pushforward(discretize(systems::middle_thirds(), 0.01), CurveSpec::moment(2, {-0.1, 1.1}));
  std::stringstream ss;
  write_measure_csv(ss, p);
  std::string first;
  std::getline(std::stringstream(ss.str()), first);
  EXPECT_EQ(first, "2," + std::to_string(p.size()));
  const auto back = read_measure_csv(ss);
  EXPECT_EQ(atom_set_distance(back, p), 0.0);
}

TEST(MeasureCsv, RejectsBadInput) {
  std::stringstream bad("1,2\n0.5,0.5\n0.25,0.25\n");
  EXPECT_THROW(read_measure_csv(bad), Error);
  std::stringstream truncated("1,3\n0.5,0.5\n0.25,0.5\n");
  EXPECT_THROW(read_measure_csv(truncated), Error);
}
