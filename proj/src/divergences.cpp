#include "cwlab/divergences.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "cwlab/parallel.hpp"

namespace cwlab {
namespace {

void require_same_dim(const Mixture& p, const Mixture& q) {
  if (p.dim() != q.dim()) throw std::invalid_argument("divergence: mixtures differ in dimension");
}

struct MeanAndError {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Jackknife over leave-one-out means. For a plain average this reproduces
/// s / sqrt(n), but it is written out so the estimator matches its name.
MeanAndError jackknife_mean(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) {
    const double loo = (sum - x) / (n - 1.0);
    ss += (loo - mean) * (loo - mean);
  }
  return {mean, std::sqrt((n - 1.0) / n * ss)};
}

double sigma_1d(const GaussianComponent& c) { return std::sqrt(c.cov.max_eigenvalue()); }

struct Simpson {
  const Mixture& p;
  const Mixture& q;

  double f(double x) const {
    VectorXd v(1);
    v[0] = x;
    return 0.5 * std::abs(std::exp(p.log_density(v)) - std::exp(q.log_density(v)));
  }

  double adaptive(double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) const {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
  }

  double integrate(double a, double b, double tol) const {
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive(a, b, fa, fm, fb, whole, tol, 40);
  }
};

}  // namespace

std::string_view to_string(DivergenceMethod m) {
  switch (m) {
    case DivergenceMethod::monte_carlo:
      return "monte_carlo";
    case DivergenceMethod::quadrature:
      return "quadrature";
    case DivergenceMethod::closed_form:
      return "closed_form";
  }
  return "unknown";
}

DivergenceEstimate tv_mc(const Mixture& p, const Mixture& q, std::size_t n, RngKey key) {
  require_same_dim(p, q);
  if (n < 10000) throw std::invalid_argument("tv_mc needs n >= 10^4");
  std::vector<double> vals(n);
  parallel_sample(n, key, [&](std::size_t i, Stream& rng) {
    const VectorXd x = rng.coin() ? p.sample(rng) : q.sample(rng);
    // |p - q| / (p + q) = |tanh((ln p - ln q) / 2)|
    vals[i] = std::abs(std::tanh(0.5 * (p.log_density(x) - q.log_density(x))));
  });
  const auto [mean, se] = jackknife_mean(vals);
  return {std::clamp(mean, 0.0, 1.0), se, n, DivergenceMethod::monte_carlo};
}

DivergenceEstimate tv_quadrature_1d(const Mixture& p, const Mixture& q) {
  require_same_dim(p, q);
  if (p.dim() != 1) throw std::invalid_argument("tv_quadrature_1d needs d = 1");

  std::vector<std::pair<double, double>> windows;
  double min_sigma = std::numeric_limits<double>::infinity();
  for (const Mixture* m : {&p, &q}) {
    for (const auto& c : m->components()) {
      const double s = sigma_1d(c);
      min_sigma = std::min(min_sigma, std::sqrt(c.cov.min_eigenvalue()));
      windows.emplace_back(c.mean[0] - 12.0 * s, c.mean[0] + 12.0 * s);
    }
  }
  std::sort(windows.begin(), windows.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& w : windows) {
    if (!merged.empty() && w.first <= merged.back().second) {
      merged.back().second = std::max(merged.back().second, w.second);
    } else {
      merged.push_back(w);
    }
  }
  double total_len = 0.0;
  for (const auto& [a, b] : merged) total_len += b - a;

  // Panels no wider than the narrowest component so no peak falls between nodes.
  const Simpson simpson{p, q};
  constexpr double kTol = 1e-8;
  double tv = 0.0;
  for (const auto& [a, b] : merged) {
    const auto panels = static_cast<std::size_t>(std::ceil((b - a) / min_sigma));
    const double width = (b - a) / static_cast<double>(panels);
    const double tol = kTol * width / total_len;
    for (std::size_t k = 0; k < panels; ++k) {
      const double lo = a + static_cast<double>(k) * width;
      const double hi = (k + 1 == panels) ? b : lo + width;
      tv += simpson.integrate(lo, hi, tol);
    }
  }
  return {std::clamp(tv, 0.0, 1.0), 0.0, 0, DivergenceMethod::quadrature};
}

double hellinger_sq_gaussian(const GaussianComponent& a, const GaussianComponent& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("hellinger: dimension mismatch");
  const Covariance avg = Covariance::full(0.5 * (a.cov.dense() + b.cov.dense()));
  const double log_bc = 0.25 * a.cov.log_det() + 0.25 * b.cov.log_det() - 0.5 * avg.log_det() -
                        0.125 * avg.mahalanobis_sq(a.mean - b.mean);
  return std::clamp(-2.0 * std::expm1(log_bc), 0.0, 2.0);
}

double kl_gaussian(const GaussianComponent& a, const GaussianComponent& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("kl: dimension mismatch");
  const Covariance& sb = b.cov;
  const MatrixXd sa = a.cov.dense();
  double trace = 0.0;
  for (Index c = 0; c < sa.cols(); ++c) trace += sb.solve(sa.col(c))[c];
  const double kl = 0.5 * (sb.log_det() - a.cov.log_det() + trace - static_cast<double>(a.dim()) +
                           sb.mahalanobis_sq(a.mean - b.mean));
  return std::max(0.0, kl);
}

double w2_gaussian(const GaussianComponent& a, const GaussianComponent& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("w2: dimension mismatch");
  const MatrixXd sa = a.cov.dense();
  const MatrixXd sb = b.cov.dense();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eb(sb);
  const MatrixXd sb_half = eb.operatorSqrt();
  const MatrixXd cross = sb_half * sa * sb_half;
  Eigen::SelfAdjointEigenSolver<MatrixXd> ec(0.5 * (cross + cross.transpose()), Eigen::EigenvaluesOnly);
  const double cross_trace = ec.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double bures = std::max(0.0, sa.trace() + sb.trace() - 2.0 * cross_trace);
  return std::sqrt((a.mean - b.mean).squaredNorm() + bures);
}

LeCamEstimate lecam_mc(const Mixture& p, const Mixture& q, std::size_t n, RngKey key) {
  require_same_dim(p, q);
  if (n < 10000) throw std::invalid_argument("lecam_mc needs n >= 10^4");
  std::vector<double> vals(n);
  parallel_sample(n, key, [&](std::size_t i, Stream& rng) {
    const VectorXd x = p.sample(rng);
    // q / (p + q) = 1 / (1 + exp(ln p - ln q))
    vals[i] = 1.0 / (1.0 + std::exp(p.log_density(x) - q.log_density(x)));
  });
  const auto [mean, se] = jackknife_mean(vals);
  LeCamEstimate out;
  out.ratio = mean;
  out.ratio_std_error = se;
  out.lc = {std::clamp(1.0 - 2.0 * mean, 0.0, 1.0), 2.0 * se, n, DivergenceMethod::monte_carlo};
  return out;
}

double score_gap_moment(const Mixture& mixture, std::size_t i, std::size_t j, std::size_t l, double t, std::size_t n,
                        RngKey key) {
  const std::size_t k = mixture.size();
  if (i >= k || j >= k || l >= k) throw std::invalid_argument("score_gap_moment: component index out of range");
  if (n < 10000) throw std::invalid_argument("score_gap_moment needs n >= 10^4");
  if (j == l) return 0.0;
  const Mixture pt = evolve(mixture, t);
  std::vector<double> vals(n);
  parallel_sample(n, key, [&](std::size_t s, Stream& rng) {
    const VectorXd x = pt.component(i).sample(rng);
    const double g = (pt.component(j).score(x) - pt.component(l).score(x)).squaredNorm();
    vals[s] = g * g;
  });
  double sum = 0.0;
  for (double v : vals) sum += v;
  return sum / static_cast<double>(n);
}

}  // namespace cwlab
