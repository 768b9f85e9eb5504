#include "cwlab/gmm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>
#include <quadmath.h>
#include <fmt/format.h>

#include "cwlab/parallel.hpp"

namespace cwlab {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void require_eigenvalue(double v) {
  if (!(v > kMinEigenvalue) || !std::isfinite(v)) {
    throw std::invalid_argument(fmt::format("covariance eigenvalue {} not above guard {}", v, kMinEigenvalue));
  }
}

double log_sum_exp(const std::vector<double>& terms) {
  const double m = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : terms) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace

// ---------------------------------------------------------------------------
// Covariance

Covariance Covariance::isotropic(Index dim, double variance) {
  if (dim < 1) throw std::invalid_argument("covariance dimension must be positive");
  require_eigenvalue(variance);
  Covariance c;
  c.kind_ = CovarianceKind::isotropic;
  c.dim_ = dim;
  c.iso_var_ = variance;
  c.log_det_ = static_cast<double>(dim) * std::log(variance);
  c.min_eig_ = c.max_eig_ = variance;
  return c;
}

Covariance Covariance::diagonal(VectorXd variances) {
  if (variances.size() < 1) throw std::invalid_argument("covariance dimension must be positive");
  for (Index i = 0; i < variances.size(); ++i) require_eigenvalue(variances[i]);
  Covariance c;
  c.kind_ = CovarianceKind::diagonal;
  c.dim_ = variances.size();
  c.log_det_ = variances.array().log().sum();
  c.min_eig_ = variances.minCoeff();
  c.max_eig_ = variances.maxCoeff();
  c.diag_ = std::move(variances);
  return c;
}

Covariance Covariance::full(MatrixXd matrix) {
  if (matrix.rows() < 1 || matrix.rows() != matrix.cols()) {
    throw std::invalid_argument("covariance matrix must be square and nonempty");
  }
  if (!matrix.allFinite()) throw std::invalid_argument("covariance matrix has non-finite entries");
  const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
  if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("covariance matrix is not symmetric");
  }
  Covariance c;
  c.kind_ = CovarianceKind::full;
  c.dim_ = matrix.rows();
  c.full_ = 0.5 * (matrix + matrix.transpose());
  c.finish_full();
  return c;
}

void Covariance::finish_full() {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(full_, Eigen::EigenvaluesOnly);
  min_eig_ = eig.eigenvalues().minCoeff();
  max_eig_ = eig.eigenvalues().maxCoeff();
  require_eigenvalue(min_eig_);
  Eigen::LLT<MatrixXd> llt(full_);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("covariance matrix is not positive definite");
  chol_lower_ = llt.matrixL();
  log_det_ = 2.0 * chol_lower_.diagonal().array().log().sum();
}

Covariance Covariance::evolved(double t) const {
  const double decay = std::exp(-2.0 * t);
  const double fill = -std::expm1(-2.0 * t);
  switch (kind_) {
    case CovarianceKind::isotropic:
      return isotropic(dim_, decay * iso_var_ + fill);
    case CovarianceKind::diagonal:
      return diagonal((decay * diag_.array() + fill).matrix());
    case CovarianceKind::full: {
      MatrixXd m = decay * full_;
      m.diagonal().array() += fill;
      return full(std::move(m));
    }
  }
  throw std::logic_error("unknown covariance kind");
}

MatrixXd Covariance::dense() const {
  switch (kind_) {
    case CovarianceKind::isotropic:
      return iso_var_ * MatrixXd::Identity(dim_, dim_);
    case CovarianceKind::diagonal:
      return diag_.asDiagonal();
    case CovarianceKind::full:
      return full_;
  }
  throw std::logic_error("unknown covariance kind");
}

double Covariance::mahalanobis_sq(const Eigen::Ref<const VectorXd>& r) const {
  switch (kind_) {
    case CovarianceKind::isotropic:
      return r.squaredNorm() / iso_var_;
    case CovarianceKind::diagonal:
      return (r.array().square() / diag_.array()).sum();
    case CovarianceKind::full:
      return chol_lower_.triangularView<Eigen::Lower>().solve(r).squaredNorm();
  }
  throw std::logic_error("unknown covariance kind");
}

VectorXd Covariance::solve(const Eigen::Ref<const VectorXd>& r) const {
  switch (kind_) {
    case CovarianceKind::isotropic:
      return r / iso_var_;
    case CovarianceKind::diagonal:
      return (r.array() / diag_.array()).matrix();
    case CovarianceKind::full: {
      VectorXd y = chol_lower_.triangularView<Eigen::Lower>().solve(r);
      return chol_lower_.transpose().triangularView<Eigen::Upper>().solve(y);
    }
  }
  throw std::logic_error("unknown covariance kind");
}

VectorXd Covariance::transform_noise(const Eigen::Ref<const VectorXd>& xi) const {
  switch (kind_) {
    case CovarianceKind::isotropic:
      return std::sqrt(iso_var_) * xi;
    case CovarianceKind::diagonal:
      return (diag_.array().sqrt() * xi.array()).matrix();
    case CovarianceKind::full:
      return chol_lower_ * xi;
  }
  throw std::logic_error("unknown covariance kind");
}

bool Covariance::operator==(const Covariance& other) const {
  if (kind_ != other.kind_ || dim_ != other.dim_) return false;
  switch (kind_) {
    case CovarianceKind::isotropic:
      return iso_var_ == other.iso_var_;
    case CovarianceKind::diagonal:
      return diag_ == other.diag_;
    case CovarianceKind::full:
      return full_ == other.full_;
  }
  return false;
}

// ---------------------------------------------------------------------------
// GaussianComponent

GaussianComponent::GaussianComponent(VectorXd mean_in, Covariance cov_in)
    : mean(std::move(mean_in)), cov(std::move(cov_in)) {
  if (mean.size() != cov.dim()) {
    throw std::invalid_argument(fmt::format("mean has dimension {} but covariance {}", mean.size(), cov.dim()));
  }
  if (!mean.allFinite()) throw std::invalid_argument("component mean is not finite");
}

double GaussianComponent::log_pdf(const Eigen::Ref<const VectorXd>& x) const {
  const double d = static_cast<double>(mean.size());
  double quad = 0.0;
  switch (cov.kind()) {
    case CovarianceKind::isotropic:
      quad = (x - mean).squaredNorm() / cov.isotropic_variance();
      break;
    case CovarianceKind::diagonal:
      quad = ((x - mean).array().square() / cov.diagonal_variances().array()).sum();
      break;
    case CovarianceKind::full:
      quad = cov.mahalanobis_sq(x - mean);
      break;
  }
  return -0.5 * (d * kLog2Pi + cov.log_det() + quad);
}

VectorXd GaussianComponent::score(const Eigen::Ref<const VectorXd>& x) const { return cov.solve(mean - x); }

VectorXd GaussianComponent::sample(Stream& rng) const {
  return mean + cov.transform_noise(rng.normal_vector(mean.size()));
}

GaussianComponent GaussianComponent::evolved(double t) const {
  return GaussianComponent(std::exp(-t) * mean, cov.evolved(t));
}

// ---------------------------------------------------------------------------
// SubsetSpec

SubsetSpec SubsetSpec::of(std::vector<std::size_t> indices, std::size_t k) {
  if (indices.empty()) throw std::invalid_argument("subset must be nonempty");
  std::sort(indices.begin(), indices.end());
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end()) {
    throw std::invalid_argument("subset has duplicate indices");
  }
  if (indices.back() >= k) {
    throw std::invalid_argument(fmt::format("subset index {} out of range for {} components", indices.back(), k));
  }
  SubsetSpec s;
  s.indices_ = std::move(indices);
  return s;
}

SubsetSpec SubsetSpec::all(std::size_t k) {
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  return of(std::move(idx), k);
}

bool SubsetSpec::contains(std::size_t i) const { return std::binary_search(indices_.begin(), indices_.end(), i); }

bool SubsetSpec::is_subset_of(const SubsetSpec& other) const {
  return std::includes(other.indices_.begin(), other.indices_.end(), indices_.begin(), indices_.end());
}

std::optional<SubsetSpec> SubsetSpec::complement(std::size_t k) const {
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < k; ++i) {
    if (!contains(i)) rest.push_back(i);
  }
  if (rest.empty()) return std::nullopt;
  return of(std::move(rest), k);
}

std::string SubsetSpec::to_string() const {
  std::string out = "{";
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(indices_[i]);
  }
  return out + "}";
}

// ---------------------------------------------------------------------------
// Mixture

Mixture::Mixture(std::vector<GaussianComponent> components, std::vector<double> weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
  if (components_.empty()) throw std::invalid_argument("mixture needs at least one component");
  if (components_.size() != weights_.size()) {
    throw std::invalid_argument(
        fmt::format("{} components but {} weights", components_.size(), weights_.size()));
  }
  dim_ = components_.front().dim();
  double total = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (components_[i].dim() != dim_) throw std::invalid_argument("mixture components differ in dimension");
    if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i])) {
      throw std::invalid_argument(fmt::format("weight {} is not strictly positive", i));
    }
    total += weights_[i];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument(fmt::format("weights sum to {:.17g}, not 1", total));
  }
  log_weights_.reserve(weights_.size());
  for (double w : weights_) log_weights_.push_back(std::log(w));
}

Mixture Mixture::normalized(std::vector<GaussianComponent> components, std::vector<double> raw_weights) {
  double total = 0.0;
  for (double w : raw_weights) {
    if (!(w > 0.0)) throw std::invalid_argument("weights must be strictly positive");
    total += w;
  }
  for (double& w : raw_weights) w /= total;
  return Mixture(std::move(components), std::move(raw_weights));
}

void Mixture::check_dim(Index n) const {
  if (n != dim_) throw std::invalid_argument(fmt::format("point has dimension {}, mixture {}", n, dim_));
}

double Mixture::log_terms(const Eigen::Ref<const VectorXd>& x, std::vector<double>& terms) const {
  terms.resize(components_.size());
  for (std::size_t i = 0; i < components_.size(); ++i) {
    terms[i] = log_weights_[i] + components_[i].log_pdf(x);
  }
  return log_sum_exp(terms);
}

double Mixture::log_density(const Eigen::Ref<const VectorXd>& x) const {
  check_dim(x.size());
  thread_local std::vector<double> terms;
  return log_terms(x, terms);
}

VectorXd Mixture::responsibilities(const Eigen::Ref<const VectorXd>& x) const {
  check_dim(x.size());
  thread_local std::vector<double> terms;
  const double total = log_terms(x, terms);
  VectorXd r(components_.size());
  for (std::size_t i = 0; i < terms.size(); ++i) r[static_cast<Index>(i)] = std::exp(terms[i] - total);
  return r;
}

VectorXd Mixture::score(const Eigen::Ref<const VectorXd>& x) const {
  VectorXd out(dim_);
  score_into(x, out);
  return out;
}

void Mixture::score_into(const Eigen::Ref<const VectorXd>& x, VectorXd& out) const {
  check_dim(x.size());
  const std::size_t k = components_.size();
  std::array<double, 16> small;
  thread_local std::vector<double> large;
  double* terms = small.data();
  if (k > small.size()) {
    large.resize(k);
    terms = large.data();
  }
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    terms[i] = log_weights_[i] + components_[i].log_pdf(x);
    top = std::max(top, terms[i]);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) total += (terms[i] = std::exp(terms[i] - top));
  out.setZero(dim_);
  for (std::size_t i = 0; i < k; ++i) {
    const double r = terms[i] / total;
    if (r == 0.0) continue;
    const GaussianComponent& c = components_[i];
    switch (c.cov.kind()) {
      case CovarianceKind::isotropic: {
        const double a = r / c.cov.isotropic_variance();
        for (Index j = 0; j < dim_; ++j) out[j] += a * (c.mean[j] - x[j]);
        break;
      }
      case CovarianceKind::diagonal:
        out.array() += r * (c.mean - x).array() / c.cov.diagonal_variances().array();
        break;
      case CovarianceKind::full:
        out.noalias() += r * c.score(x);
        break;
    }
  }
}

std::size_t Mixture::sample_component(Stream& rng) const {
  if (components_.size() == 1) return 0;
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < weights_.size(); ++i) {
    acc += weights_[i];
    if (u < acc) return i;
  }
  return weights_.size() - 1;
}

VectorXd Mixture::sample(Stream& rng) const { return components_[sample_component(rng)].sample(rng); }

bool Mixture::operator==(const Mixture& other) const {
  if (weights_ != other.weights_ || components_.size() != other.components_.size()) return false;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (components_[i].mean != other.components_[i].mean || !(components_[i].cov == other.components_[i].cov)) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Free operations

Mixture evolve(const Mixture& mixture, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument(fmt::format("evolve time {} must be >= 0", t));
  if (t == 0.0) return mixture;
  std::vector<GaussianComponent> comps;
  comps.reserve(mixture.size());
  for (const auto& c : mixture.components()) comps.push_back(c.evolved(t));
  return Mixture(std::move(comps), mixture.weights());
}

double log_density(const Mixture& mixture, const Eigen::Ref<const VectorXd>& x) { return mixture.log_density(x); }

VectorXd score(const Mixture& mixture, const Eigen::Ref<const VectorXd>& x) { return mixture.score(x); }

Mixture submixture(const Mixture& mixture, const SubsetSpec& s) {
  if (s.indices().back() >= mixture.size()) throw std::invalid_argument("subset out of range for mixture");
  if (s.size() == mixture.size()) return mixture;
  std::vector<GaussianComponent> comps;
  std::vector<double> w;
  for (std::size_t i : s.indices()) {
    comps.push_back(mixture.component(i));
    w.push_back(mixture.weight(i));
  }
  return Mixture::normalized(std::move(comps), std::move(w));
}

SeparationStats separation_stats(const Mixture& mixture, const SubsetSpec& s_a, const SubsetSpec& s_b) {
  const std::size_t k = mixture.size();
  if (s_a.indices().back() >= k || s_b.indices().back() >= k) {
    throw std::invalid_argument("subset out of range for mixture");
  }
  auto mu = [&](std::size_t i) -> const VectorXd& { return mixture.component(i).mean; };

  SeparationStats st;
  double w_min = std::numeric_limits<double>::infinity();
  double w_max = 0.0;
  double eig_min = std::numeric_limits<double>::infinity();
  double eig_max = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    st.r_bar = std::max(st.r_bar, mu(i).norm());
    w_min = std::min(w_min, mixture.weight(i));
    w_max = std::max(w_max, mixture.weight(i));
    eig_min = std::min(eig_min, mixture.component(i).cov.min_eigenvalue());
    eig_max = std::max(eig_max, mixture.component(i).cov.max_eigenvalue());
  }
  st.w_bar = w_max / w_min;
  st.lambda_lower = std::min(1.0, eig_min);
  st.lambda_upper = std::max(1.0, eig_max);

  for (std::size_t i : s_a.indices()) {
    for (std::size_t j : s_b.indices()) st.w_pair = std::max(st.w_pair, (mu(i) - mu(j)).norm());
  }
  if (auto rest = s_b.complement(k)) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t l : s_b.indices()) {
      for (std::size_t j : rest->indices()) d = std::min(d, (mu(l) - mu(j)).norm());
    }
    st.delta = d;
  }
  return st;
}

namespace {

using Quad = __float128;
using QuadVec = std::vector<Quad>;

// log N(x; mean, cov) and the component score -cov^{-1}(x - mean), by a
// Cholesky factorization carried out in quad precision.
Quad quad_log_normal(const GaussianComponent& c, const Eigen::Ref<const VectorXd>& x, QuadVec& score) {
  const Index d = x.size();
  const MatrixXd cov = c.cov.dense();
  std::vector<Quad> l(static_cast<std::size_t>(d * d), 0);
  auto at = [&](Index i, Index j) -> Quad& { return l[static_cast<std::size_t>(i * d + j)]; };
  for (Index j = 0; j < d; ++j) {
    Quad diag = cov(j, j);
    for (Index p = 0; p < j; ++p) diag -= at(j, p) * at(j, p);
    at(j, j) = sqrtq(diag);
    for (Index i = j + 1; i < d; ++i) {
      Quad v = cov(i, j);
      for (Index p = 0; p < j; ++p) v -= at(i, p) * at(j, p);
      at(i, j) = v / at(j, j);
    }
  }
  QuadVec y(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) {
    Quad v = static_cast<Quad>(x[i]) - static_cast<Quad>(c.mean[i]);
    for (Index p = 0; p < i; ++p) v -= at(i, p) * y[p];
    y[i] = v / at(i, i);
  }
  score.assign(static_cast<std::size_t>(d), 0);
  for (Index i = d - 1; i >= 0; --i) {
    Quad v = y[i];
    for (Index p = i + 1; p < d; ++p) v -= at(p, i) * score[p];
    score[i] = v / at(i, i);
  }
  Quad quad_form = 0;
  Quad log_det = 0;
  for (Index i = 0; i < d; ++i) {
    quad_form += y[i] * y[i];
    log_det += 2 * logq(at(i, i));
    score[i] = -score[i];
  }
  return -0.5Q * quad_form - 0.5Q * log_det - 0.5Q * static_cast<Quad>(d) * logq(2 * M_PIq);
}

}  // namespace

DecompositionSides score_decomposition_check(const Mixture& mixture, const SubsetSpec& s, double t,
                                             const Eigen::Ref<const VectorXd>& x) {
  const auto rest = s.complement(mixture.size());
  if (!rest) throw std::invalid_argument("score decomposition needs a proper subset S != [K]");
  if (x.size() != mixture.dim()) throw std::invalid_argument("score decomposition: dimension mismatch");
  const Mixture pt = evolve(mixture, t);
  const std::size_t k = pt.size();
  const auto d = static_cast<std::size_t>(pt.dim());

  // The left side subtracts two nearly equal scores wherever one side holds
  // almost all posterior mass (1e-14 is routine), so it is evaluated in quad precision.
  std::vector<Quad> log_terms(k);
  std::vector<QuadVec> scores(k);
  for (std::size_t i = 0; i < k; ++i)
    log_terms[i] = logq(static_cast<Quad>(pt.weight(i))) + quad_log_normal(pt.component(i), x, scores[i]);
  auto lse = [&](const std::vector<std::size_t>& idx) {
    Quad top = log_terms[idx.front()];
    for (std::size_t i : idx) top = std::max(top, log_terms[i]);
    Quad sum = 0;
    for (std::size_t i : idx) sum += expq(log_terms[i] - top);
    return top + logq(sum);
  };
  auto set_score = [&](const std::vector<std::size_t>& idx) {
    const Quad norm = lse(idx);
    QuadVec out(d, 0);
    for (std::size_t i : idx)
      for (std::size_t j = 0; j < d; ++j) out[j] += expq(log_terms[i] - norm) * scores[i][j];
    return out;
  };
  auto sq_dist = [&](const QuadVec& a, const QuadVec& b) {
    Quad v = 0;
    for (std::size_t j = 0; j < d; ++j) v += (a[j] - b[j]) * (a[j] - b[j]);
    return v;
  };
  std::vector<std::size_t> all(k);
  for (std::size_t i = 0; i < k; ++i) all[i] = i;
  const QuadVec s_full = set_score(all);
  const QuadVec s_in = set_score(s.indices());
  const QuadVec s_out = set_score(rest->indices());
  const Quad out_mass = expq(lse(rest->indices()) - lse(all));

  return {static_cast<double>(sq_dist(s_in, s_full)), static_cast<double>(sq_dist(s_in, s_out) * out_mass * out_mass)};
}

AssumptionParams estimate_assumption_params(const Mixture& mixture, const std::vector<double>& t_grid,
                                            std::size_t n, RngKey key) {
  if (t_grid.empty()) throw std::invalid_argument("assumption estimate needs a nonempty time grid");
  if (n < 1000) throw std::invalid_argument("assumption estimate needs n >= 1000");
  const std::size_t k = mixture.size();

  AssumptionParams params;
  params.psi_sq = separation_stats(mixture, SubsetSpec::all(k), SubsetSpec::all(k)).lambda_upper;

  for (std::size_t g = 0; g < t_grid.size(); ++g) {
    const Mixture pt = evolve(mixture, t_grid[g]);
    for (std::size_t j = 0; j < k; ++j) {
      // X ~ p_t^j; accumulate |X|^4 and |grad ln p_t^i(X)|^4 for every i.
      const RngKey sub = key.child(g).child(j);
      std::vector<double> x4(n);
      std::vector<std::vector<double>> s4(k, std::vector<double>(n));
      parallel_sample(n, sub, [&](std::size_t s, Stream& rng) {
        const VectorXd x = pt.component(j).sample(rng);
        x4[s] = std::pow(x.squaredNorm(), 2);
        for (std::size_t i = 0; i < k; ++i) s4[i][s] = std::pow(pt.component(i).score(x).squaredNorm(), 2);
      });
      double mean_x4 = 0.0;
      for (double v : x4) mean_x4 += v;
      params.m4 = std::max(params.m4, mean_x4 / static_cast<double>(n));
      for (std::size_t i = 0; i < k; ++i) {
        double m = 0.0;
        for (double v : s4[i]) m += v;
        params.m_bar = std::max(params.m_bar, m / static_cast<double>(n));
      }
    }
  }
  return params;
}

}  // namespace cwlab
