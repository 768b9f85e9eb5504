#pragma once

#include <cmath>
#include <algorithm>
#include <cstddef>
#include <vector>

#include <Eigen/QR>

#include "cwlab/gmm.hpp"
#include "cwlab/rng.hpp"

namespace cwlab::testing {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double uniform(Stream& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

/// Random SPD matrix with eigenvalues in [lo, hi].
inline MatrixXd random_spd(Stream& rng, Index d, double lo, double hi) {
  MatrixXd a(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) a(i, j) = rng.normal();
  const Eigen::HouseholderQR<MatrixXd> qr(a);
  const MatrixXd q = qr.householderQ();
  VectorXd ev(d);
  for (Index i = 0; i < d; ++i) ev[i] = uniform(rng, lo, hi);
  MatrixXd s = q * ev.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

/// Random mixture mixing isotropic, diagonal and full covariances with
/// eigenvalues in [var_lo, var_hi] and means in [-spread, spread]^d.
inline Mixture random_mixture(Stream& rng, std::size_t k, Index d, double spread = 3.0, double var_lo = 0.5,
                              double var_hi = 2.0) {
  std::vector<GaussianComponent> comps;
  std::vector<double> weights;
  for (std::size_t i = 0; i < k; ++i) {
    VectorXd mean(d);
    for (Index j = 0; j < d; ++j) mean[j] = uniform(rng, -spread, spread);
    const std::size_t kind = rng.index(3);
    Covariance cov = Covariance::isotropic(d, uniform(rng, var_lo, var_hi));
    if (kind == 1) {
      VectorXd v(d);
      for (Index j = 0; j < d; ++j) v[j] = uniform(rng, var_lo, var_hi);
      cov = Covariance::diagonal(v);
    } else if (kind == 2) {
      cov = Covariance::full(random_spd(rng, d, var_lo, var_hi));
    }
    comps.emplace_back(mean, cov);
    weights.push_back(uniform(rng, 0.2, 1.0));
  }
  return Mixture::normalized(std::move(comps), std::move(weights));
}

inline Mixture gaussian_1d(double mean, double var) {
  return Mixture({GaussianComponent(VectorXd::Constant(1, mean), Covariance::isotropic(1, var))}, {1.0});
}

inline Mixture identity_mixture_1d(const std::vector<double>& means) {
  std::vector<GaussianComponent> comps;
  for (double m : means) comps.emplace_back(VectorXd::Constant(1, m), Covariance::isotropic(1, 1.0));
  return Mixture::normalized(std::move(comps), std::vector<double>(means.size(), 1.0));
}

inline Mixture fig_mixture() { return identity_mixture_1d({-15100.0, -14900.0, 14900.0, 15100.0}); }

/// Central finite-difference gradient of ln p.
inline VectorXd fd_score(const Mixture& m, const VectorXd& x, double h) {
  VectorXd g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    VectorXd a = x;
    VectorXd b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (m.log_density(a) - m.log_density(b)) / (2.0 * h);
  }
  return g;
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

}  // namespace cwlab::testing
