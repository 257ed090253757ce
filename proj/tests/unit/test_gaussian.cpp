#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <random>

#include "scoretalk/gaussian.hpp"

using namespace scoretalk;

namespace {

const GaussianModel kCorrelated(1.0, 1.0, 0.5);
const double kHalfSplit = -2.0 + 2.0 / std::numbers::pi;

GaussianModel random_gaussian(std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> v(0.2, 4.0), c(-0.95, 0.95);
  const double s1 = v(rng), s2 = v(rng);
  return GaussianModel(s1, s2, c(rng) * std::sqrt(s1 * s2));
}

} // namespace

TEST(GaussianModel, Validation) {
  EXPECT_THROW(GaussianModel(1.0, 1.0, 1.0), InvalidInput);
  EXPECT_THROW(GaussianModel(-1.0, 1.0, 0.0), InvalidInput);
  EXPECT_THROW(GaussianModel(1.0, 0.0, 0.0), InvalidInput);
  EXPECT_THROW(GaussianModel(1.0, std::nan(""), 0.0), InvalidInput);
  EXPECT_NO_THROW(GaussianModel(1.0, 1.0, 0.999));
}

TEST(LinearScore, Normalisation) {
  const LinearScore s(-3.0, 4.0);
  EXPECT_NEAR(s[0], 0.6, 1e-15);
  EXPECT_NEAR(s[1], -0.8, 1e-15);
  const LinearScore t(0.0, -2.0);
  EXPECT_EQ(t[0], 0.0);
  EXPECT_EQ(t[1], 1.0);
  EXPECT_THROW(LinearScore(0.0, 0.0), InvalidInput);
}

TEST(RayleighQuotient, Examples) {
  const PayoffWeights w(1.0);
  EXPECT_NEAR(rayleigh_quotient(Vec2{1, 1}, kCorrelated, w), 1.5, 1e-15);
  EXPECT_NEAR(rayleigh_quotient(Vec2{1, -1}, kCorrelated, w), 0.5, 1e-15);
  const GaussianModel g(2.5, 0.7, 0.0);
  EXPECT_NEAR(rayleigh_quotient(Vec2{1, 0}, g, PayoffWeights(1.0)), 2.5, 1e-15);
  EXPECT_THROW(rayleigh_quotient(Vec2{0, 0}, g, w), InvalidInput);
}

TEST(RayleighQuotient, PayoffExamples) {
  const PayoffWeights w(1.0);
  EXPECT_NEAR(exante_linear_payoff(Vec2{1, 1}, kCorrelated, w), -0.5, 1e-15);
  EXPECT_NEAR(exante_linear_payoff(Vec2{1, -1}, kCorrelated, w), -1.5, 1e-15);
}

TEST(RayleighQuotient, ScaleInvariance) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3, 3), k(0.01, 100);
  for (int i = 0; i < 200; ++i) {
    const auto g = random_gaussian(rng);
    const PayoffWeights w(k(rng));
    const Vec2 b{u(rng), u(rng)};
    const double c = (i % 2 ? -1.0 : 1.0) * k(rng);
    const double q = rayleigh_quotient(b, g, w);
    EXPECT_NEAR(rayleigh_quotient(Vec2{c * b[0], c * b[1]}, g, w), q, 1e-12 * std::abs(q));
  }
}

TEST(CredibleLinear, RatioExample) {
  // phi sigma_1^2 = sigma_2^2: ratios +-sqrt(phi), eigenvalues 2 +- sqrt(0.5).
  const GaussianModel g(1.0, 2.0, 0.5);
  const PayoffWeights w(2.0);
  const auto ratios = credible_ratios(g, w);
  EXPECT_NEAR(ratios[0], std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(ratios[1], -std::sqrt(2.0), 1e-14);
  const auto r = credible_linear_scores(g, w);
  EXPECT_NEAR(r.eigenvalues[r.best_index], 2.0 + std::sqrt(0.5), 1e-13);
  EXPECT_NEAR(r.eigenvalues[r.worst_index], 2.0 - std::sqrt(0.5), 1e-13);
  EXPECT_NEAR(r.best()[0] / r.best()[1], std::sqrt(2.0), 1e-13);
}

TEST(CredibleLinear, CorrelatedExample) {
  const auto r = credible_linear_scores(kCorrelated, PayoffWeights(1.0));
  EXPECT_NEAR(r.best()[0], std::numbers::sqrt2 / 2, 1e-15);
  EXPECT_NEAR(r.best()[1], std::numbers::sqrt2 / 2, 1e-15);
  EXPECT_NEAR(r.worst()[0], std::numbers::sqrt2 / 2, 1e-15);
  EXPECT_NEAR(r.worst()[1], -std::numbers::sqrt2 / 2, 1e-15);
  EXPECT_NEAR(r.eigenvalues[r.best_index], 1.5, 1e-15);
  EXPECT_NEAR(r.eigenvalues[r.worst_index], 0.5, 1e-15);
}

TEST(CredibleLinear, IndependentAxes) {
  const auto r = credible_linear_scores(GaussianModel(3.0, 1.0, 0.0), PayoffWeights(1.0));
  EXPECT_EQ(r.best()[0], 1.0);
  EXPECT_EQ(r.best()[1], 0.0);
  EXPECT_FALSE(r.degenerate_all_directions);
  EXPECT_TRUE(credible_linear_scores(GaussianModel(1.0, 2.0, 0.0), PayoffWeights(2.0)).degenerate_all_directions);
  EXPECT_THROW(credible_ratios(GaussianModel(1.0, 2.0, 0.0), PayoffWeights(1.0)), InvalidInput);
}

TEST(CredibleLinear, AgreesWithEigenSolver) {
  std::mt19937_64 rng(1000);
  std::uniform_real_distribution<double> phi(0.1, 10.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto g = random_gaussian(rng);
    const PayoffWeights w(phi(rng));
    Eigen::Matrix2d m;
    m << w.phi() * g.var1(), w.phi() * g.cov12(), g.cov12(), g.var2();
    Eigen::EigenSolver<Eigen::Matrix2d> es(m);
    const auto r = credible_linear_scores(g, w);
    for (std::size_t i = 0; i < 2; ++i) {
      // Each score is an eigenvector of Phi Sigma.
      const Eigen::Vector2d b(r.scores[i][0], r.scores[i][1]);
      const Eigen::Vector2d mb = m * b;
      const double lambda = mb.dot(b);
      EXPECT_LT((mb - lambda * b).norm(), 1e-10 * mb.norm()) << "trial " << trial;
      EXPECT_LT(fixed_point_residual(r.scores[i], g, w), 1e-10);
    }
    double lo = es.eigenvalues().real().minCoeff(), hi = es.eigenvalues().real().maxCoeff();
    EXPECT_NEAR(r.eigenvalues[r.best_index], hi, 1e-10 * hi);
    EXPECT_NEAR(r.eigenvalues[r.worst_index], lo, 1e-10 * hi);
    // Roots multiply to -phi.
    const auto ratios = credible_ratios(g, w);
    EXPECT_NEAR(ratios[0] * ratios[1], -w.phi(), 1e-10 * w.phi());
  }
}

TEST(CredibleLinear, StableSmallRoot) {
  const GaussianModel g(1.0, 1.0, 1e-9);
  const auto ratios = credible_ratios(g, PayoffWeights(4.0));
  EXPECT_NEAR(ratios[1] * ratios[0], -4.0, 1e-12);
  EXPECT_LT(std::abs(ratios[1]), 1e-7);
}

TEST(CredibleLinear, StationaryUnderFiniteDifferences) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = random_gaussian(rng);
    const PayoffWeights w(0.5 + trial * 0.02);
    for (const auto &s : credible_linear_scores(g, w).scores) {
      const double t = s.angle(), h = 1e-5;
      const auto q = [&](double a) { return rayleigh_quotient(Vec2{std::cos(a), std::sin(a)}, g, w); };
      const double deriv = (q(t + h) - q(t - h)) / (2 * h);
      EXPECT_NEAR(deriv, 0.0, 1e-6 * std::max(1.0, q(t)));
    }
  }
}

TEST(CredibleLinear, ExtremalOnAngleGrid) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = random_gaussian(rng);
    const PayoffWeights w(0.3 + trial * 0.05);
    const auto r = credible_linear_scores(g, w);
    const double hi = r.eigenvalues[r.best_index], lo = r.eigenvalues[r.worst_index];
    for (const auto &sample : rayleigh_curve(g, w, 720)) {
      EXPECT_LE(sample.q, hi * (1 + 1e-12));
      EXPECT_GE(sample.q, lo * (1 - 1e-12));
    }
  }
}

TEST(CredibleLinear, NonEigenDirectionsHavePositiveResidual) {
  const PayoffWeights w(1.0);
  EXPECT_GT(fixed_point_residual(Vec2{1, 0}, kCorrelated, w), 0.1);
  EXPECT_GT(fixed_point_residual(Vec2{1, 0.3}, kCorrelated, w), 0.01);
  EXPECT_LT(fixed_point_residual(Vec2{2, 2}, kCorrelated, w), 1e-15);
}

// Positive correlation puts the best score on the diagonal (both signs
// agree); negative correlation flips it.
TEST(CredibleLinear, SignFollowsCorrelation) {
  const auto pos = credible_linear_scores(GaussianModel(1.0, 2.0, 0.7), PayoffWeights(1.5));
  EXPECT_GT(pos.best()[0] * pos.best()[1], 0.0);
  const auto neg = credible_linear_scores(GaussianModel(1.0, 2.0, -0.7), PayoffWeights(1.5));
  EXPECT_LT(neg.best()[0] * neg.best()[1], 0.0);
}

TEST(ReceiverCoefficient, Example) {
  const Vec2 c = receiver_coefficient(Vec2{1, 1}, kCorrelated);
  EXPECT_NEAR(c[0], 0.5, 1e-15);
  EXPECT_NEAR(c[1], 0.5, 1e-15);
}

TEST(Normal, TruncatedMoments) {
  const auto half = truncated_standard_normal(0.0, INFINITY);
  EXPECT_NEAR(half.probability, 0.5, 1e-15);
  EXPECT_NEAR(half.mean, std::sqrt(2.0 / std::numbers::pi), 1e-15);
  const auto whole = truncated_standard_normal(-INFINITY, INFINITY);
  EXPECT_NEAR(whole.probability, 1.0, 1e-15);
  EXPECT_NEAR(whole.mean, 0.0, 1e-15);
  const auto tail = truncated_standard_normal(30.0, INFINITY);
  EXPECT_GT(tail.probability, 0.0);
  EXPECT_NEAR(tail.mean, 30.033, 1e-3);
}

TEST(CoarselyLinear, HalfSplitClosedForm) {
  const CoarselyLinearScore s(LinearScore(1, 0), {0.0});
  EXPECT_NEAR(coarsely_linear_payoff(s, GaussianModel(1, 1, 0), PayoffWeights(1.0)), kHalfSplit, 1e-14);
  EXPECT_NEAR(kHalfSplit, -1.363380, 1e-6);
}

TEST(CoarselyLinear, CellLookup) {
  const CoarselyLinearScore s(LinearScore(1, 1), {-1.0, 0.0, 2.0});
  EXPECT_EQ(s.cells(), 4U);
  EXPECT_EQ(s.cell({-5, 0}), 0U);
  EXPECT_EQ(s.cell({0, 0}), 1U);
  EXPECT_EQ(s.cell({0.5, 0.5}), 2U);
  EXPECT_EQ(s.cell({9, 9}), 3U);
  EXPECT_THROW(CoarselyLinearScore(LinearScore(1, 0), {1.0, 0.0}), InvalidInput);
}

TEST(CoarselyLinear, ApproachesLinearWithManyCells) {
  const PayoffWeights w(1.0);
  const LinearScore b(1, 1);
  const double linear = exante_linear_payoff(b, kCorrelated, w);
  const double coarse = coarsely_linear_payoff(CoarselyLinearScore(b, equiprobable_cuts(b, kCorrelated, 64)), kCorrelated, w);
  EXPECT_LT(coarse, linear);
  EXPECT_NEAR(coarse, linear, 0.01);
  double prev = -1e300;
  for (std::size_t n : {2, 4, 8, 16, 32}) {
    const double v = coarsely_linear_payoff(CoarselyLinearScore(b, equiprobable_cuts(b, kCorrelated, n)), kCorrelated, w);
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(CoarselyLinear, VoidCellRefused) {
  const CoarselyLinearScore s(LinearScore(1, 0), {40.0});
  EXPECT_THROW(coarsely_linear_payoff(s, GaussianModel(1, 1, 0), PayoffWeights(1.0)), Refusal);
}

TEST(MonteCarlo, MatchesClosedForm) {
  const GaussianModel g(1, 1, 0);
  const CoarselyLinearScore s(LinearScore(1, 0), {0.0});
  const auto est = mc_payoff([&](const Vec2 &t) { return s.cell(t); }, 2, g, PayoffWeights(1.0), 400000, 7);
  EXPECT_NEAR(est.estimate, kHalfSplit, 4 * est.standard_error + 1e-3);
  EXPECT_EQ(est.excluded, 0U);
  EXPECT_GT(est.standard_error, 0.0);
}

TEST(MonteCarlo, MatchesCoarselyLinearOnCorrelatedPrior) {
  const PayoffWeights w(2.0);
  const GaussianModel g(1.0, 2.0, 0.5);
  const auto best = credible_linear_scores(g, w).best();
  const CoarselyLinearScore s(best, equiprobable_cuts(best, g, 4));
  const auto est = mc_payoff([&](const Vec2 &t) { return s.cell(t); }, 4, g, w, 400000, 11);
  EXPECT_NEAR(est.estimate, coarsely_linear_payoff(s, g, w), 4 * est.standard_error + 2e-3);
}

TEST(MonteCarlo, DeterministicAcrossThreads) {
  const GaussianModel g(1, 1, 0.3);
  const CoarselyLinearScore s(LinearScore(1, 0), {-0.5, 0.5});
  const auto f = [&](const Vec2 &t) { return s.cell(t); };
  const auto a = mc_payoff(f, 3, g, PayoffWeights(1.0), 300000, 5, 1);
  const auto b = mc_payoff(f, 3, g, PayoffWeights(1.0), 300000, 5, 4);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.standard_error, b.standard_error);
  const auto c = mc_payoff(f, 3, g, PayoffWeights(1.0), 300000, 6, 1);
  EXPECT_NE(a.estimate, c.estimate);
}

TEST(MonteCarlo, Guards) {
  const GaussianModel g(1, 1, 0);
  const auto f = [](const Vec2 &) { return 0; };
  EXPECT_THROW(mc_payoff(f, 1, g, PayoffWeights(1.0), 999, 1), InvalidInput);
  EXPECT_THROW(mc_payoff([](const Vec2 &) { return 5; }, 2, g, PayoffWeights(1.0), 1000, 1), InvalidInput);
}
