#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include "cwlab/divergences.hpp"
#include "support.hpp"

using namespace cwlab;
using namespace cwlab::testing;

namespace {

const double kTvUnitShift = 2.0 * normal_cdf(0.5) - 1.0;

// Plain trapezoid on a fine uniform grid; deliberately unrelated to the
// adaptive Simpson under test.
double integrate(const std::function<double(double)>& f, double lo, double hi, int cells = 400000) {
  const double h = (hi - lo) / cells;
  double sum = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i < cells; ++i) sum += f(lo + i * h);
  return sum * h;
}

double density(const Mixture& m, double x) { return std::exp(m.log_density(VectorXd::Constant(1, x))); }

double tv_oracle_1d(const Mixture& p, const Mixture& q) {
  double lo = 0.0;
  double hi = 0.0;
  for (const Mixture* m : {&p, &q}) {
    for (const auto& c : m->components()) {
      const double sd = std::sqrt(c.cov.dense()(0, 0));
      lo = std::min(lo, c.mean[0] - 14 * sd);
      hi = std::max(hi, c.mean[0] + 14 * sd);
    }
  }
  return 0.5 * integrate([&](double x) { return std::abs(density(p, x) - density(q, x)); }, lo, hi);
}

GaussianComponent g1(double mean, double var) {
  return GaussianComponent(VectorXd::Constant(1, mean), Covariance::isotropic(1, var));
}

Mixture single(const GaussianComponent& c) { return Mixture({c}, {1.0}); }

}  // namespace

TEST(TvMc, EqualMixturesGiveZero) {
  const Mixture p = identity_mixture_1d({-1.0, 2.0});
  const DivergenceEstimate e = tv_mc(p, p, 10000, RngKey(1));
  EXPECT_EQ(e.value, 0.0);
  EXPECT_EQ(e.method, DivergenceMethod::monte_carlo);
  EXPECT_EQ(e.n, 10000u);
}

TEST(TvMc, DisjointSupports) {
  EXPECT_GE(tv_mc(gaussian_1d(0, 1), gaussian_1d(30, 1), 10000, RngKey(2)).value, 1.0 - 1e-6);
}

TEST(TvMc, UnitShift) {
  const DivergenceEstimate e = tv_mc(gaussian_1d(0, 1), gaussian_1d(1, 1), 100000, RngKey(3));
  EXPECT_GT(e.std_error, 0.0);
  EXPECT_NEAR(e.value, kTvUnitShift, 3.0 * e.std_error);
}

TEST(TvMc, Preconditions) {
  EXPECT_THROW(tv_mc(gaussian_1d(0, 1), gaussian_1d(0, 1), 9999, RngKey(1)), std::invalid_argument);
  const Mixture two({GaussianComponent(VectorXd::Zero(2), Covariance::isotropic(2, 1.0))}, {1.0});
  EXPECT_THROW(tv_mc(gaussian_1d(0, 1), two, 10000, RngKey(1)), std::invalid_argument);
}

TEST(TvMc, SymmetricWithinStdError) {
  const Mixture p = identity_mixture_1d({-1.0, 1.5});
  const Mixture q = gaussian_1d(0.3, 2.0);
  const auto a = tv_mc(p, q, 50000, RngKey(4));
  const auto b = tv_mc(q, p, 50000, RngKey(5));
  EXPECT_NEAR(a.value, b.value, 3.0 * std::hypot(a.std_error, b.std_error));
}

TEST(TvMc, MatchesQuadratureOnRandomPairs) {
  Stream rng = RngKey(6).at(0);
  for (int trial = 0; trial < 100; ++trial) {
    const Mixture p = random_mixture(rng, 1 + rng.index(3), 1);
    const Mixture q = random_mixture(rng, 1 + rng.index(3), 1);
    const auto mc = tv_mc(p, q, 10000, RngKey(7).child(trial));
    const auto quad = tv_quadrature_1d(p, q);
    EXPECT_NEAR(mc.value, quad.value, std::max(3.0 * mc.std_error, 0.01)) << "trial " << trial;
  }
}

TEST(TvQuadrature, Examples) {
  EXPECT_EQ(tv_quadrature_1d(gaussian_1d(0, 1), gaussian_1d(0, 1)).value, 0.0);
  const auto e = tv_quadrature_1d(gaussian_1d(0, 1), gaussian_1d(1, 1));
  EXPECT_NEAR(e.value, kTvUnitShift, 1e-8);
  EXPECT_NEAR(e.value, 0.38292, 1e-4);
  EXPECT_EQ(e.method, DivergenceMethod::quadrature);
  EXPECT_EQ(e.std_error, 0.0);
  EXPECT_NEAR(tv_quadrature_1d(gaussian_1d(-15100, 1), gaussian_1d(-14900, 1)).value, 1.0, 1e-8);
}

TEST(TvQuadrature, MatchesTrapezoidOracle) {
  Stream rng = RngKey(8).at(0);
  for (int trial = 0; trial < 10; ++trial) {
    const Mixture p = random_mixture(rng, 2, 1);
    const Mixture q = random_mixture(rng, 3, 1);
    EXPECT_NEAR(tv_quadrature_1d(p, q).value, tv_oracle_1d(p, q), 1e-6);
  }
}

TEST(TvQuadrature, SymmetricExactly) {
  Stream rng = RngKey(9).at(0);
  const Mixture p = random_mixture(rng, 3, 1);
  const Mixture q = random_mixture(rng, 2, 1);
  EXPECT_EQ(tv_quadrature_1d(p, q).value, tv_quadrature_1d(q, p).value);
}

TEST(TvQuadrature, RejectsHigherDimension) {
  const Mixture two({GaussianComponent(VectorXd::Zero(2), Covariance::isotropic(2, 1.0))}, {1.0});
  EXPECT_THROW(tv_quadrature_1d(two, two), std::invalid_argument);
}

TEST(TvQuadrature, NonincreasingUnderForwardProcess) {
  Stream rng = RngKey(10).at(0);
  for (int trial = 0; trial < 5; ++trial) {
    const Mixture p = random_mixture(rng, 2, 1, 5.0);
    const Mixture q = random_mixture(rng, 2, 1, 5.0);
    double prev = 1.0;
    for (int g = 0; g <= 30; ++g) {
      const double t = 0.1 * g;
      const double tv = tv_quadrature_1d(evolve(p, t), evolve(q, t)).value;
      EXPECT_LE(tv, prev + 1e-6) << "t=" << t;
      prev = tv;
    }
  }
}

TEST(Hellinger, Examples) {
  EXPECT_NEAR(hellinger_sq_gaussian(g1(0, 1), g1(0, 1)), 0.0, 1e-15);
  EXPECT_NEAR(hellinger_sq_gaussian(g1(0, 1), g1(2, 1)), 2.0 - 2.0 * std::exp(-0.5), 1e-12);
  EXPECT_NEAR(hellinger_sq_gaussian(g1(0, 1), g1(200, 1)), 2.0, 1e-12);
}

TEST(Hellinger, MatchesQuadratureOfRootDensities) {
  Stream rng = RngKey(11).at(0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = g1(uniform(rng, -2, 2), uniform(rng, 0.3, 3));
    const auto b = g1(uniform(rng, -2, 2), uniform(rng, 0.3, 3));
    const double oracle = integrate(
        [&](double x) {
          const double d = std::exp(0.5 * a.log_pdf(VectorXd::Constant(1, x))) -
                           std::exp(0.5 * b.log_pdf(VectorXd::Constant(1, x)));
          return d * d;
        },
        -30, 30);
    EXPECT_NEAR(hellinger_sq_gaussian(a, b), oracle, 1e-7);
  }
}

TEST(Hellinger, ProductOfDiagonalFactors) {
  // For diagonal covariances the Bhattacharyya coefficient factorizes over coordinates.
  const VectorXd ma = (VectorXd(2) << 0.5, -1.0).finished();
  const VectorXd mb = (VectorXd(2) << -0.2, 0.7).finished();
  const VectorXd va = (VectorXd(2) << 1.3, 0.6).finished();
  const VectorXd vb = (VectorXd(2) << 0.8, 2.1).finished();
  double bc = 1.0;
  for (int i = 0; i < 2; ++i) bc *= 1.0 - 0.5 * hellinger_sq_gaussian(g1(ma[i], va[i]), g1(mb[i], vb[i]));
  const double h2 = hellinger_sq_gaussian(GaussianComponent(ma, Covariance::diagonal(va)),
                                          GaussianComponent(mb, Covariance::full(MatrixXd(vb.asDiagonal()))));
  EXPECT_NEAR(h2, 2.0 - 2.0 * bc, 1e-12);
}

TEST(Kl, Examples) {
  EXPECT_NEAR(kl_gaussian(g1(0.3, 1.7), g1(0.3, 1.7)), 0.0, 1e-15);
  const GaussianComponent a(VectorXd::Constant(3, 1.0), Covariance::isotropic(3, 1.0));
  const GaussianComponent b(VectorXd::Zero(3), Covariance::isotropic(3, 1.0));
  EXPECT_NEAR(kl_gaussian(a, b), 1.5, 1e-12);
  EXPECT_NEAR(kl_gaussian(g1(0, 2), g1(0, 1)), 0.5 * (std::log(0.5) + 2.0 - 1.0), 1e-12);
  EXPECT_NEAR(kl_gaussian(g1(0, 2), g1(0, 1)), 0.15343, 1e-5);
}

TEST(Kl, MatchesNumericIntegral) {
  const auto a = g1(0.4, 0.7);
  const auto b = g1(-0.5, 1.9);
  const double oracle = integrate(
      [&](double x) {
        const VectorXd v = VectorXd::Constant(1, x);
        const double la = a.log_pdf(v);
        return std::exp(la) * (la - b.log_pdf(v));
      },
      -25, 25);
  EXPECT_NEAR(kl_gaussian(a, b), oracle, 1e-8);
}

TEST(Kl, RandomFullCovariancesAreNonnegative) {
  Stream rng = RngKey(12).at(0);
  for (int trial = 0; trial < 50; ++trial) {
    const GaussianComponent a(rng.normal_vector(3), Covariance::full(random_spd(rng, 3, 0.3, 3.0)));
    const GaussianComponent b(rng.normal_vector(3), Covariance::full(random_spd(rng, 3, 0.3, 3.0)));
    EXPECT_GE(kl_gaussian(a, b), 0.0);
  }
}

TEST(W2, Examples) {
  EXPECT_NEAR(w2_gaussian(g1(1, 2), g1(1, 2)), 0.0, 1e-7);
  const GaussianComponent a(VectorXd::Constant(2, 1.0), Covariance::full(MatrixXd{{2.0, 0.3}, {0.3, 1.0}}));
  const GaussianComponent b(VectorXd::Constant(2, -2.0), Covariance::full(MatrixXd{{2.0, 0.3}, {0.3, 1.0}}));
  EXPECT_NEAR(w2_gaussian(a, b), std::sqrt(18.0), 1e-7);
  EXPECT_NEAR(w2_gaussian(g1(0, 1), g1(0, 4)), 1.0, 1e-12);
}

TEST(W2, CommutingCovariances) {
  // Diagonal covariances commute, so W2^2 = |dmu|^2 + sum (sqrt a_i - sqrt b_i)^2.
  const VectorXd va = (VectorXd(3) << 0.5, 2.0, 1.2).finished();
  const VectorXd vb = (VectorXd(3) << 3.0, 0.4, 1.2).finished();
  const VectorXd ma = (VectorXd(3) << 1.0, 0.0, -1.0).finished();
  const VectorXd mb = (VectorXd(3) << 0.0, 2.0, 0.5).finished();
  const double expected =
      std::sqrt((ma - mb).squaredNorm() + (va.array().sqrt() - vb.array().sqrt()).square().sum());
  EXPECT_NEAR(w2_gaussian(GaussianComponent(ma, Covariance::diagonal(va)), GaussianComponent(mb, Covariance::diagonal(vb))),
              expected, 1e-10);
}

TEST(LeCam, Examples) {
  const auto same = lecam_mc(gaussian_1d(0, 1), gaussian_1d(0, 1), 10000, RngKey(13));
  EXPECT_NEAR(same.ratio, 0.5, 1e-12);
  EXPECT_NEAR(same.lc.value, 0.0, 1e-12);
  const auto far = lecam_mc(gaussian_1d(0, 1), gaussian_1d(30, 1), 10000, RngKey(14));
  EXPECT_LT(far.ratio, 1e-6);
  EXPECT_GT(far.lc.value, 1.0 - 1e-6);
  EXPECT_THROW(lecam_mc(gaussian_1d(0, 1), gaussian_1d(0, 1), 100, RngKey(1)), std::invalid_argument);
}

TEST(LeCam, SandwichOnUnitShift) {
  const auto lc = lecam_mc(gaussian_1d(0, 1), gaussian_1d(1, 1), 100000, RngKey(15));
  const double h2 = hellinger_sq_gaussian(g1(0, 1), g1(1, 1));
  const double tv = kTvUnitShift;
  EXPECT_LE(0.5 * (1 - lc.lc.value), 0.5 * (1 - 0.5 * h2) + 3.0 * lc.ratio_std_error);
  EXPECT_LE(0.5 * (1 - 0.5 * h2), 0.5 * std::sqrt(1 - tv * tv) + 1e-9);
}

TEST(LeCam, SandwichOnRandomPairs) {
  Stream rng = RngKey(16).at(0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = g1(uniform(rng, -3, 3), uniform(rng, 0.3, 3));
    const auto b = g1(uniform(rng, -3, 3), uniform(rng, 0.3, 3));
    const auto lc = lecam_mc(single(a), single(b), 10000, RngKey(17).child(trial));
    const double h2 = hellinger_sq_gaussian(a, b);
    const double tv = tv_quadrature_1d(single(a), single(b)).value;
    EXPECT_LE(lc.ratio, 0.5 * (1 - 0.5 * h2) + 3.0 * lc.ratio_std_error) << "trial " << trial;
    EXPECT_LE(0.5 * (1 - 0.5 * h2), 0.5 * std::sqrt(1 - tv * tv) + 1e-9) << "trial " << trial;
  }
}

TEST(ScoreGap, EqualIndicesGiveZero) {
  const Mixture m = identity_mixture_1d({-3.0, 3.0});
  EXPECT_EQ(score_gap_moment(m, 0, 1, 1, 0.5, 10000, RngKey(18)), 0.0);
  EXPECT_THROW(score_gap_moment(m, 0, 1, 2, 0.5, 10000, RngKey(18)), std::invalid_argument);
}

TEST(ScoreGap, EqualVariancePairHasClosedForm) {
  // Components with equal covariance have a constant score gap e^{-t} dmu / sigma_t^2.
  const Mixture m = identity_mixture_1d({-3.0, 3.0});
  const double t = 1.3;
  EXPECT_NEAR(score_gap_moment(m, 0, 0, 1, t, 10000, RngKey(19)), std::pow(6.0 * std::exp(-t), 4), 1e-9);
}

TEST(ScoreGap, DecaysExponentially) {
  const Mixture m = identity_mixture_1d({-3.0, 3.0});
  std::vector<double> ts = {1.0, 2.0, 3.0};
  std::vector<double> logs;
  for (double t : ts) logs.push_back(std::log(score_gap_moment(m, 0, 0, 1, t, 100000, RngKey(20))));
  const double tbar = 2.0;
  double num = 0.0;
  double den = 0.0;
  double lbar = (logs[0] + logs[1] + logs[2]) / 3.0;
  for (int i = 0; i < 3; ++i) {
    num += (ts[i] - tbar) * (logs[i] - lbar);
    den += (ts[i] - tbar) * (ts[i] - tbar);
  }
  const double slope = num / den;
  EXPECT_GE(slope, -6.0);
  EXPECT_LE(slope, -2.0);
}

TEST(ScoreGap, LargeTimeBelowHalfTime) {
  Stream rng = RngKey(21).at(0);
  for (int trial = 0; trial < 3; ++trial) {
    const Mixture m = random_mixture(rng, 3, 1);
    const double at4 = score_gap_moment(m, 0, 1, 2, 4.0, 100000, RngKey(22).child(trial));
    const double at2 = score_gap_moment(m, 0, 1, 2, 2.0, 100000, RngKey(23).child(trial));
    EXPECT_LE(at4, at2) << "trial " << trial;
  }
}
