#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "flatten/curves.hpp"
#include "flatten/error.hpp"
#include "flatten/moments.hpp"
#include "support.hpp"

using namespace flatten;

namespace {

DiscreteMeasure quarter_points() { return fixtures::uniform_line({0.0, 0.25, 0.5, 0.75}); }

DiscreteMeasure lebesgue(int k) { return discretize(systems::dyadic(), std::ldexp(1.0, -k)); }

// Level-m moment sum of the depth-`depth` Cantor discretization, built
// directly from ternary digit codes.
double cantor_s2_oracle(int m, int depth) {
  std::map<std::int64_t, double> cells;
  const double w = std::ldexp(1.0, -depth);
  for (std::uint64_t code = 0; code < (1ull << depth); ++code) {
    double x = 0.0, scale = 1.0;
    for (int j = depth - 1; j >= 0; --j) {
      scale /= 3.0;
      if ((code >> j) & 1) x += 2.0 * scale;
    }
    cells[static_cast<std::int64_t>(std::floor(std::ldexp(x, m)))] += w;
  }
  double s = 0.0;
  for (const auto& [k, v] : cells) s += v * v;
  return s;
}

}  // namespace

TEST(Bin, Examples) {
  const auto d = bin(DiscreteMeasure::dirac({0.3}), 1);
  ASSERT_EQ(d.cells().size(), 1u);
  EXPECT_EQ(d.cells()[0].index[0], 0);
  EXPECT_EQ(d.cells()[0].mass, 1.0);

  const auto q = bin(quarter_points(), 1);
  ASSERT_EQ(q.cells().size(), 2u);
  EXPECT_EQ(q.cells()[0].index[0], 0);
  EXPECT_EQ(q.cells()[1].index[0], 1);
  EXPECT_DOUBLE_EQ(q.cells()[0].mass, 0.5);

  const auto b = bin(DiscreteMeasure::dirac({0.5}), 1);
  EXPECT_EQ(b.cells()[0].index[0], 1);
  EXPECT_EQ(bin(DiscreteMeasure::dirac({-0.25}), 2).cells()[0].index[0], -1);
}

TEST(Bin, LevelRangeAndMassConservation) {
  EXPECT_THROW(bin(quarter_points(), -1), Error);
  try {
    bin(quarter_points(), 41);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLevelOutOfRange);
  }
  const auto m = pushforward(discretize(systems::middle_thirds(), 1e-4), CurveSpec::moment(2, {-0.1, 1.1}));
  for (int level : {0, 3, 9, 20, 40}) EXPECT_NEAR(bin(m, level).total_mass(), m.total_mass(), 1e-12);
}

TEST(Coarsen, MatchesDirectBinning) {
  const auto m = pushforward(discretize(fixtures::two_ratio_ifs(), 1e-4), CurveSpec::moment(2, {-0.1, 1.1}));
  const auto fine = bin(m, 12);
  for (int level : {0, 4, 7, 12}) {
    const auto a = coarsen(fine, level), b = bin(m, level);
    ASSERT_EQ(a.cells().size(), b.cells().size());
    for (std::size_t i = 0; i < a.cells().size(); ++i) {
      EXPECT_EQ(a.cells()[i].index, b.cells()[i].index);
      EXPECT_NEAR(a.cells()[i].mass, b.cells()[i].mass, 1e-14);
    }
  }
  EXPECT_THROW(coarsen(bin(m, 4), 5), Error);
}

TEST(MomentSum, Examples) {
  for (int m : {0, 3, 10}) {
    EXPECT_EQ(moment_sum(bin(DiscreteMeasure::dirac({0.1}), m), 2.0), 1.0);
    EXPECT_EQ(moment_sum(bin(DiscreteMeasure::dirac({0.1}), m), kInfiniteOrder), 1.0);
  }
  for (int m = 1; m <= 10; ++m) EXPECT_DOUBLE_EQ(moment_sum(bin(lebesgue(m), m), 2.0), std::ldexp(1.0, -m));
  EXPECT_DOUBLE_EQ(moment_sum(bin(quarter_points(), 1), 2.0), 0.5);
  EXPECT_THROW(moment_sum(bin(quarter_points(), 1), 1.0), Error);
}

TEST(MomentSum, RefinementBounds) {
  const auto m = pushforward(discretize(systems::middle_thirds(), 1e-4), CurveSpec::moment(2, {-0.1, 1.1}));
  double last_inf = 2.0;
  for (int level = 0; level <= 10; ++level) {
    const auto h = bin(m, level);
    const double inf = moment_sum(h, kInfiniteOrder);
    EXPECT_LE(inf, last_inf + 1e-15);
    last_inf = inf;
    for (int coarser = 0; coarser <= level; ++coarser) {
      EXPECT_LE(moment_sum(h, 2.0), moment_sum(bin(m, coarser), 2.0) * (1 + 1e-12));
      EXPECT_GE(moment_sum(h, 2.0) * (1 + 1e-12),
                moment_sum(bin(m, coarser), 2.0) * std::ldexp(1.0, -2 * (level - coarser)));
    }
  }
}

TEST(ConvolutionHistogram, MatchesMaterializedConvolution) {
  const auto a = pushforward(discretize(systems::middle_thirds(), 1e-2), CurveSpec::moment(2, {-0.1, 1.1}));
  const auto b = pushforward(discretize(fixtures::two_ratio_ifs(), 5e-2), CurveSpec::moment(2, {-0.1, 1.1}));
  for (int level : {2, 6, 9}) {
    const auto direct = bin(convolve(a, b), level);
    const auto streamed = convolution_histogram(a, b, level);
    ASSERT_EQ(direct.cells().size(), streamed.cells().size());
    for (std::size_t i = 0; i < direct.cells().size(); ++i) {
      EXPECT_EQ(direct.cells()[i].index, streamed.cells()[i].index);
      EXPECT_NEAR(direct.cells()[i].mass, streamed.cells()[i].mass, 1e-14);
    }
  }
}

TEST(ConvolutionHistogram, SparsePathAgrees) {
  // Two far-apart clusters force a bounding box too large for the dense grid.
  const DiscreteMeasure a(1, {0.0, 1e6}, {0.5, 0.5});
  const auto b = quarter_points();
  const auto h = convolution_histogram(a, b, 4);
  const auto direct = bin(convolve(a, b), 4);
  ASSERT_EQ(h.cells().size(), direct.cells().size());
  for (std::size_t i = 0; i < h.cells().size(); ++i) EXPECT_EQ(h.cells()[i].index, direct.cells()[i].index);
}

TEST(PowerHistogram, CoalesceFallbackIsReported) {
  std::vector<double> xs;
  for (int i = 0; i < 200; ++i) xs.push_back(std::fmod(i * 0.6180339887498949, 1.0));
  const auto nu = fixtures::uniform_line(xs);
  ConvolveOptions opts;
  opts.atom_budget = 10000;
  const auto exact = convolution_power_histogram(nu, 4, 4);
  EXPECT_EQ(exact.coalesce_width, 0.0);
  EXPECT_THROW(convolution_power_histogram(nu, 4, 4, opts), Error);
  const auto coarse = convolution_power_histogram(nu, 4, 4, opts, std::ldexp(1.0, -10));
  EXPECT_EQ(coarse.coalesce_width, std::ldexp(1.0, -10));
  EXPECT_NEAR(moment_sum(coarse.histogram, 2.0), moment_sum(exact.histogram, 2.0),
              0.05 * moment_sum(exact.histogram, 2.0));
}

TEST(LqDimension, LebesgueAndDirac) {
  const auto leb = lq_dimension(lebesgue(14), 2.0, {4, 10});
  EXPECT_NEAR(leb.dim_q, 1.0, 0.05);
  ASSERT_EQ(leb.rows.size(), 7u);
  EXPECT_EQ(leb.rows[0].increment, 0.0);
  EXPECT_NEAR(leb.rows[3].increment, 1.0, 1e-12);
  EXPECT_NEAR(lq_dimension(DiscreteMeasure::dirac({0.2}), 2.0, {4, 10}).dim_q, 0.0, 0.02);
  EXPECT_NEAR(lq_dimension(DiscreteMeasure::dirac({0.2}), kInfiniteOrder, {4, 10}).dim_q, 0.0, 0.02);
  EXPECT_THROW(lq_dimension(lebesgue(8), 2.0, {4, 6}), Error);
}

TEST(LqDimension, CantorMatchesOracle) {
  MeasureRecipe recipe{systems::middle_thirds(), std::nullopt, 1, 0.0, {}, true};
  const LevelRange range{4, 11};
  const auto fit = lq_dimension(recipe, 2.0, range);
  EXPECT_NEAR(fit.dim_q, std::log(2.0) / std::log(3.0), 0.05);
  // tau = 2^-15 stops the Cantor words at depth 10.
  for (const auto& row : fit.rows) EXPECT_NEAR(row.s_m, cantor_s2_oracle(row.m, 10), 1e-12);
}

TEST(LqDimension, RecipeDefaults) {
  EXPECT_EQ(default_tau({4, 10}), std::ldexp(1.0, -14));
  MeasureRecipe recipe{systems::dyadic(), CurveSpec::moment(2, {-0.1, 1.1}), 1, 0.0, {}, true};
  EXPECT_EQ(realize_base(recipe, {4, 8}).size(), 8192u);  // 2^-13 is the first ratio below 2^-12
  EXPECT_EQ(realize_base(recipe, {4, 8}).dim(), 2u);
}

TEST(Flattening, LebesgueIsSaturated) {
  const auto rep = flattening_report(systems::dyadic(), std::nullopt, 1, {4, 10}, 0.0);
  ASSERT_EQ(rep.dim2.size(), 1u);
  EXPECT_NEAR(rep.dim2[0], 1.0, 0.05);
  for (const auto& row : rep.rows) EXPECT_NEAR(row.normalized, 1.0, 1e-9);
  EXPECT_EQ(rep.tau, std::ldexp(1.0, -14));
}

TEST(Flattening, LineControlStaysOnTheLine) {
  const auto rep = flattening_report(systems::dyadic(), CurveSpec::graph({Polynomial(std::vector<double>{0.1, 0.5})}, {-0.1, 1.1}), 3,
                                     {4, 8}, 0.1);
  for (double d : rep.dim2) EXPECT_LE(d, 1.1);
}

TEST(Flattening, CantorParabolaGrows) {
  const auto rep = flattening_report(systems::middle_thirds(), CurveSpec::moment(2, {-0.05, 1.05}), 3, {3, 7}, 0.1);
  ASSERT_EQ(rep.dim2.size(), 3u);
  EXPECT_GT(rep.dim2[2], rep.dim2[0]);
  EXPECT_EQ(rep.rows.size(), 15u);
  EXPECT_GT(rep.pairs_streamed, 0u);
}

TEST(L2Improving, Examples) {
  const auto d = DiscreteMeasure::dirac({0.1, 0.1});
  const auto same = l2_improving_check(d, d, 6, 0.5);
  EXPECT_EQ(same.ratio, 1.0);
  EXPECT_LT(same.gate * std::ldexp(1.0, -6 * 2), 1.0 + 1e-12);

  const auto nu = pushforward(discretize(systems::middle_thirds(), 1e-3), CurveSpec::moment(2, {-0.1, 1.1}));
  for (int m : {2, 4, 6}) {
    std::vector<double> coords, w;
    for (int i = 0; i < (1 << m); ++i) {
      for (int j = 0; j < (1 << m); ++j) {
        coords.push_back(std::ldexp(i + 0.5, -m));
        coords.push_back(std::ldexp(j + 0.5, -m));
        w.push_back(std::ldexp(1.0, -2 * m));
      }
    }
    const DiscreteMeasure uniform(2, coords, w);
    EXPECT_LE(l2_improving_check(uniform, nu, m, 0.5).ratio, 4.0);
  }

  const auto line = pushforward(discretize(systems::dyadic(), std::ldexp(1.0, -12)),
                                CurveSpec::graph({Polynomial(std::vector<double>{0.0})}, {-0.1, 1.1}));
  EXPECT_LT(l2_improving_check(line, nu, 8, 0.5).ratio, 1.0);
  EXPECT_THROW(l2_improving_check(line, discretize(systems::dyadic(), 0.1), 4, 0.5), Error);
}

TEST(Consistency, DiracRatioIsOneHalf) {
  for (int level = 0; level <= 8; ++level) {
    EXPECT_NEAR(fourier_moment_consistency(DiscreteMeasure::dirac({0.0}), level).ratio, 0.5, 1e-12);
  }
  EXPECT_THROW(fourier_moment_consistency(DiscreteMeasure::dirac({0.0}), 13), Error);
}

TEST(Consistency, TwoPointsAtLevelOne) {
  const auto r = fourier_moment_consistency(fixtures::uniform_line({0.0, 0.5}), 1);
  EXPECT_DOUBLE_EQ(r.s_m, 0.5);
  EXPECT_NEAR(r.integral, 2.0, 1e-12);
  EXPECT_NEAR(r.ratio, 0.5, 1e-12);
}
