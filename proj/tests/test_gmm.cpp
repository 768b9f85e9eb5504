#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "cwlab/gmm.hpp"
#include "support.hpp"

using namespace cwlab;
using namespace cwlab::testing;

TEST(Covariance, RejectsAsymmetricAndSingular) {
  MatrixXd a(2, 2);
  a << 1.0, 0.5, 0.2, 1.0;
  EXPECT_THROW(Covariance::full(a), std::invalid_argument);
  EXPECT_THROW(Covariance::isotropic(2, 0.0), std::invalid_argument);
  EXPECT_THROW(Covariance::diagonal(VectorXd::Constant(3, -1.0)), std::invalid_argument);
}

TEST(Covariance, RepresentationsAgree) {
  const VectorXd r = (VectorXd(3) << 0.3, -1.2, 2.0).finished();
  const Covariance iso = Covariance::isotropic(3, 2.5);
  const Covariance diag = Covariance::diagonal(VectorXd::Constant(3, 2.5));
  const Covariance full = Covariance::full(2.5 * MatrixXd::Identity(3, 3));
  EXPECT_NEAR(iso.mahalanobis_sq(r), diag.mahalanobis_sq(r), 1e-12);
  EXPECT_NEAR(iso.mahalanobis_sq(r), full.mahalanobis_sq(r), 1e-12);
  EXPECT_NEAR(iso.log_det(), full.log_det(), 1e-12);
  EXPECT_NEAR((iso.solve(r) - full.solve(r)).norm(), 0.0, 1e-12);
}

TEST(Mixture, WeightsMustSumToOne) {
  const GaussianComponent c(VectorXd::Zero(1), Covariance::isotropic(1, 1.0));
  EXPECT_THROW(Mixture({c, c}, {0.5, 0.6}), std::invalid_argument);
  EXPECT_THROW(Mixture({c, c}, {1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(Mixture({}, {}), std::invalid_argument);
  const Mixture m = Mixture::normalized({c, c}, {1.0, 3.0});
  EXPECT_DOUBLE_EQ(m.weight(1), 0.75);
}

TEST(Mixture, DimensionsMustMatch) {
  const GaussianComponent a(VectorXd::Zero(1), Covariance::isotropic(1, 1.0));
  const GaussianComponent b(VectorXd::Zero(2), Covariance::isotropic(2, 1.0));
  EXPECT_THROW(Mixture({a, b}, {0.5, 0.5}), std::invalid_argument);
  const Mixture m({a}, {1.0});
  EXPECT_THROW(m.log_density(VectorXd::Zero(2)), std::invalid_argument);
  EXPECT_THROW(m.score(VectorXd::Zero(2)), std::invalid_argument);
}

TEST(Evolve, TimeZeroIsIdentity) {
  Stream rng = RngKey(1).at(0);
  const Mixture m = random_mixture(rng, 3, 2);
  EXPECT_TRUE(evolve(m, 0.0) == m);
}

TEST(Evolve, ClosedFormSubstitution) {
  const Mixture m = evolve(gaussian_1d(2.0, 4.0), std::log(2.0));
  EXPECT_NEAR(m.component(0).mean[0], 1.0, 1e-15);
  EXPECT_NEAR(m.component(0).cov.isotropic_variance(), 1.75, 1e-15);
}

TEST(Evolve, LargeTimeApproachesStandardNormal) {
  Stream rng = RngKey(2).at(0);
  const Mixture m = random_mixture(rng, 4, 3, 10.0);
  double r_bar = 0.0;
  for (const auto& c : m.components()) r_bar = std::max(r_bar, c.mean.norm());
  const Mixture e = evolve(m, 20.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_LE(e.component(i).mean.norm(), std::exp(-20.0) * r_bar * (1 + 1e-12));
    const MatrixXd gap = m.component(i).cov.dense() - MatrixXd::Identity(3, 3);
    const MatrixXd egap = e.component(i).cov.dense() - MatrixXd::Identity(3, 3);
    EXPECT_LE(egap.norm(), std::exp(-40.0) * gap.norm() + 1e-15);
    EXPECT_DOUBLE_EQ(e.weight(i), m.weight(i));
  }
}

TEST(Evolve, RejectsNegativeTime) {
  EXPECT_THROW(evolve(gaussian_1d(0, 1), -0.1), std::invalid_argument);
}

TEST(Evolve, IsASemigroup) {
  Stream rng = RngKey(3).at(0);
  for (int trial = 0; trial < 20; ++trial) {
    const Mixture m = random_mixture(rng, 3, 3);
    const double s = uniform(rng, 0.0, 2.0);
    const double t = uniform(rng, 0.0, 2.0);
    const Mixture a = evolve(evolve(m, s), t);
    const Mixture b = evolve(m, s + t);
    for (std::size_t i = 0; i < m.size(); ++i) {
      EXPECT_LE((a.component(i).mean - b.component(i).mean).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LE((a.component(i).cov.dense() - b.component(i).cov.dense()).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(LogDensity, StandardNormalAtMode) {
  EXPECT_NEAR(gaussian_1d(0.0, 1.0).log_density(VectorXd::Zero(1)), -0.5 * std::log(2.0 * std::numbers::pi), 1e-15);
}

TEST(LogDensity, MatchesExtendedPrecisionSummation) {
  const Mixture m = identity_mixture_1d({-1.5, 1.5});
  for (double x : {0.0, 0.7, -3.0, 8.0}) {
    long double sum = 0.0L;
    for (double mu : {-1.5, 1.5}) {
      const long double z = static_cast<long double>(x) - mu;
      sum += 0.5L * std::exp(-0.5L * z * z) / std::sqrt(2.0L * std::numbers::pi_v<long double>);
    }
    EXPECT_NEAR(m.log_density(VectorXd::Constant(1, x)), static_cast<double>(std::log(sum)), 1e-13);
  }
}

TEST(LogDensity, FiniteFarFromAllMeans) {
  Stream rng = RngKey(4).at(0);
  const Mixture m = random_mixture(rng, 3, 2);
  for (double r : {1e4, 1e6}) {
    const VectorXd x = VectorXd::Constant(2, r / std::sqrt(2.0));
    EXPECT_TRUE(std::isfinite(m.log_density(x)));
    EXPECT_TRUE(m.score(x).allFinite());
    EXPECT_TRUE(m.responsibilities(x).allFinite());
  }
}

TEST(Score, StandardGaussianIsMinusX) {
  const Mixture m({GaussianComponent(VectorXd::Zero(3), Covariance::isotropic(3, 1.0))}, {1.0});
  const VectorXd x = (VectorXd(3) << 0.4, -2.0, 7.5).finished();
  EXPECT_NEAR((m.score(x) + x).norm(), 0.0, 1e-15);
}

TEST(Score, SymmetricPairVanishesAtOrigin) {
  const VectorXd mu = (VectorXd(2) << 1.0, -2.0).finished();
  const Mixture m({GaussianComponent(mu, Covariance::isotropic(2, 1.0)),
                   GaussianComponent(-mu, Covariance::isotropic(2, 1.0))},
                  {0.5, 0.5});
  EXPECT_NEAR(m.score(VectorXd::Zero(2)).norm(), 0.0, 1e-15);
}

TEST(Score, MatchesFiniteDifferenceOnPair) {
  const Mixture m = identity_mixture_1d({-3.0, 3.0});
  const VectorXd x = VectorXd::Constant(1, 1.0);
  const double analytic = m.score(x)[0];
  EXPECT_NEAR(fd_score(m, x, 1e-5)[0], analytic, 1e-6 * std::abs(analytic));
}

TEST(Score, MatchesFiniteDifferenceOnRandomMixtures) {
  const RngKey key(5);
  double worst = 0.0;
  for (std::size_t c = 0; c < 200; ++c) {
    Stream rng = key.at(c);
    const Index d = 1 + static_cast<Index>(rng.index(3));
    const Mixture m = evolve(random_mixture(rng, 1 + rng.index(4), d), uniform(rng, 0.0, 3.0));
    VectorXd x(d);
    for (Index i = 0; i < d; ++i) x[i] = uniform(rng, -5.0, 5.0);
    const VectorXd a = m.score(x);
    worst = std::max(worst, (a - fd_score(m, x, 1e-5)).norm() / std::max(a.norm(), 1.0));
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(Responsibilities, SumToOne) {
  Stream rng = RngKey(6).at(0);
  const Mixture m = random_mixture(rng, 5, 2);
  const VectorXd r = m.responsibilities(VectorXd::Constant(2, 0.3));
  EXPECT_NEAR(r.sum(), 1.0, 1e-14);
  EXPECT_GE(r.minCoeff(), 0.0);
}

TEST(SubsetSpec, Validation) {
  EXPECT_THROW(SubsetSpec::of({}, 3), std::invalid_argument);
  EXPECT_THROW(SubsetSpec::of({3}, 3), std::invalid_argument);
  EXPECT_THROW(SubsetSpec::of({1, 1}, 3), std::invalid_argument);
  const SubsetSpec s = SubsetSpec::of({2, 0}, 3);
  EXPECT_EQ(s.indices(), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(s.to_string(), "{0;2}");
  EXPECT_TRUE(s.is_subset_of(SubsetSpec::all(3)));
  EXPECT_EQ(s.complement(3)->indices(), (std::vector<std::size_t>{1}));
  EXPECT_FALSE(SubsetSpec::all(3).complement(3).has_value());
}

TEST(Submixture, FullSetIsIdentity) {
  Stream rng = RngKey(7).at(0);
  const Mixture m = random_mixture(rng, 3, 2);
  EXPECT_TRUE(submixture(m, SubsetSpec::all(3)) == m);
}

TEST(Submixture, SingletonHasUnitWeight) {
  Stream rng = RngKey(8).at(0);
  const Mixture m = random_mixture(rng, 3, 2);
  const Mixture s = submixture(m, SubsetSpec::of({1}, 3));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.weight(0), 1.0);
  EXPECT_TRUE(s.component(0).mean == m.component(1).mean);
}

TEST(Submixture, Renormalizes) {
  const GaussianComponent c(VectorXd::Zero(1), Covariance::isotropic(1, 1.0));
  const Mixture m({c, c, c}, {0.2, 0.3, 0.5});
  const Mixture s = submixture(m, SubsetSpec::of({0, 2}, 3));
  EXPECT_NEAR(s.weight(0), 2.0 / 7.0, 1e-15);
  EXPECT_NEAR(s.weight(1), 5.0 / 7.0, 1e-15);
}

TEST(Submixture, CommutesWithEvolve) {
  Stream rng = RngKey(9).at(0);
  const Mixture m = random_mixture(rng, 4, 2);
  const SubsetSpec s = SubsetSpec::of({1, 3}, 4);
  EXPECT_TRUE(submixture(evolve(m, 0.8), s) == evolve(submixture(m, s), 0.8));
  const Mixture sub = submixture(m, s);
  double total = 0.0;
  for (double w : sub.weights()) total += w;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(SeparationStats, FigureConfiguration) {
  const Mixture m = fig_mixture();
  const SeparationStats st = separation_stats(m, SubsetSpec::of({1}, 4), SubsetSpec::of({0, 1}, 4));
  EXPECT_DOUBLE_EQ(st.w_pair, 200.0);
  ASSERT_TRUE(st.delta.has_value());
  EXPECT_DOUBLE_EQ(*st.delta, 29800.0);
  EXPECT_DOUBLE_EQ(st.r_bar, 15100.0);
  EXPECT_DOUBLE_EQ(st.w_bar, 1.0);
  EXPECT_DOUBLE_EQ(st.lambda_lower, 1.0);
  EXPECT_DOUBLE_EQ(st.lambda_upper, 1.0);
}

TEST(SeparationStats, DegenerateEqualMeans) {
  const Mixture m = identity_mixture_1d({2.0, 2.0, 2.0});
  const SeparationStats st = separation_stats(m, SubsetSpec::of({0}, 3), SubsetSpec::of({0, 1}, 3));
  EXPECT_EQ(st.w_pair, 0.0);
  EXPECT_EQ(*st.delta, 0.0);
}

TEST(SeparationStats, TwoPointGeometry) {
  const VectorXd mu = (VectorXd(2) << 3.0, 4.0).finished();
  const Mixture m({GaussianComponent(mu, Covariance::isotropic(2, 1.0)),
                   GaussianComponent(-mu, Covariance::isotropic(2, 1.0))},
                  {0.3, 0.7});
  const SeparationStats st = separation_stats(m, SubsetSpec::of({0}, 2), SubsetSpec::of({1}, 2));
  EXPECT_DOUBLE_EQ(*st.delta, 10.0);
  EXPECT_NEAR(st.w_bar, 7.0 / 3.0, 1e-15);
  EXPECT_FALSE(separation_stats(m, SubsetSpec::of({0}, 2), SubsetSpec::all(2)).delta.has_value());
}

TEST(SeparationStats, PairDistanceIsSymmetric) {
  Stream rng = RngKey(10).at(0);
  const Mixture m = random_mixture(rng, 5, 3);
  const SubsetSpec a = SubsetSpec::of({0, 3}, 5);
  const SubsetSpec b = SubsetSpec::of({1, 2, 4}, 5);
  EXPECT_EQ(separation_stats(m, a, b).w_pair, separation_stats(m, b, a).w_pair);
}

TEST(SeparationStats, EigenvalueBracketsHoldEveryCovariance) {
  Stream rng = RngKey(11).at(0);
  const Mixture m = random_mixture(rng, 5, 3, 3.0, 0.2, 4.0);
  const SeparationStats st = separation_stats(m, SubsetSpec::all(5), SubsetSpec::all(5));
  for (const auto& c : m.components()) {
    EXPECT_LE(st.lambda_lower, c.cov.min_eigenvalue());
    EXPECT_GE(st.lambda_upper, c.cov.max_eigenvalue());
  }
  EXPECT_LE(st.lambda_lower, 1.0);
  EXPECT_GE(st.lambda_upper, 1.0);
}

TEST(ScoreDecomposition, TwoComponents) {
  const Mixture m = identity_mixture_1d({-1.0, 2.0});
  for (double x : {-2.0, 0.0, 0.5, 3.0}) {
    const auto sides = score_decomposition_check(m, SubsetSpec::of({0}, 2), 0.3, VectorXd::Constant(1, x));
    EXPECT_NEAR(sides.lhs, sides.rhs, 1e-8 * std::max(1.0, std::abs(sides.lhs)));
  }
}

TEST(ScoreDecomposition, VanishesWhereComplementHasNoMass) {
  const Mixture m = identity_mixture_1d({0.0, 50.0});
  const auto sides = score_decomposition_check(m, SubsetSpec::of({0}, 2), 0.0, VectorXd::Constant(1, -1.0));
  EXPECT_NEAR(sides.lhs, 0.0, 1e-12);
  EXPECT_NEAR(sides.rhs, 0.0, 1e-12);
}

TEST(ScoreDecomposition, RandomThreeComponentMixture) {
  Stream rng = RngKey(12).at(0);
  const Mixture m = random_mixture(rng, 3, 2);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const VectorXd x = 3.0 * rng.normal_vector(2);
    const auto sides = score_decomposition_check(m, SubsetSpec::of({0, 2}, 3), 0.4, x);
    worst = std::max(worst, std::abs(sides.lhs - sides.rhs) / std::max({std::abs(sides.lhs), std::abs(sides.rhs), 1e-300}));
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(ScoreDecomposition, RejectsFullSet) {
  EXPECT_THROW(score_decomposition_check(identity_mixture_1d({0.0, 1.0}), SubsetSpec::all(2), 0.1,
                                         VectorXd::Zero(1)),
               std::invalid_argument);
}

TEST(AssumptionParams, StandardNormalMoments) {
  const AssumptionParams p = estimate_assumption_params(gaussian_1d(0.0, 1.0), {0.0}, 200000, RngKey(13));
  EXPECT_NEAR(p.m4, 3.0, 0.15);
  EXPECT_NEAR(p.m_bar, 3.0, 0.15);
  EXPECT_DOUBLE_EQ(p.psi_sq, 1.0);
}

TEST(AssumptionParams, LargeTimeApproachesStandardNormal) {
  const AssumptionParams p = estimate_assumption_params(gaussian_1d(4.0, 0.5), {12.0}, 200000, RngKey(14));
  EXPECT_NEAR(p.m4, 3.0, 0.15);
  EXPECT_NEAR(p.m_bar, 3.0, 0.15);
}

TEST(AssumptionParams, Preconditions) {
  EXPECT_THROW(estimate_assumption_params(gaussian_1d(0, 1), {}, 5000, RngKey(1)), std::invalid_argument);
  EXPECT_THROW(estimate_assumption_params(gaussian_1d(0, 1), {0.0}, 999, RngKey(1)), std::invalid_argument);
}

TEST(Sampling, ComponentFrequenciesFollowWeights) {
  const Mixture m = Mixture::normalized(
      {GaussianComponent(VectorXd::Zero(1), Covariance::isotropic(1, 1.0)),
       GaussianComponent(VectorXd::Ones(1), Covariance::isotropic(1, 1.0))},
      {1.0, 3.0});
  Stream rng = RngKey(15).at(0);
  int hits = 0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) hits += m.sample_component(rng) == 1 ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(hits) / n, 0.75, 0.01);
}
