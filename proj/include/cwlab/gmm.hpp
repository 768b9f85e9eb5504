#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "cwlab/rng.hpp"

namespace cwlab {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Smallest admissible covariance eigenvalue.
inline constexpr double kMinEigenvalue = 1e-12;

enum class CovarianceKind { isotropic, diagonal, full };

/// Symmetric positive-definite covariance in one of three representations.
/// The factorization needed by log-densities and scores is computed once at
/// construction, so a Covariance is cheap to evaluate against many points.
class Covariance {
 public:
  static Covariance isotropic(Index dim, double variance);
  static Covariance diagonal(VectorXd variances);
  static Covariance full(MatrixXd matrix);

  CovarianceKind kind() const { return kind_; }
  Index dim() const { return dim_; }

  /// Covariance of the OU forward process at time t: e^{-2t} S + (1 - e^{-2t}) I.
  /// The representation is preserved.
  Covariance evolved(double t) const;

  MatrixXd dense() const;
  double log_det() const { return log_det_; }
  double min_eigenvalue() const { return min_eig_; }
  double max_eigenvalue() const { return max_eig_; }

  /// Only meaningful for the matching representation.
  double isotropic_variance() const { return iso_var_; }
  const VectorXd& diagonal_variances() const { return diag_; }
  const MatrixXd& full_matrix() const { return full_; }

  /// r^T S^{-1} r
  double mahalanobis_sq(const Eigen::Ref<const VectorXd>& r) const;
  /// S^{-1} r
  VectorXd solve(const Eigen::Ref<const VectorXd>& r) const;
  /// L xi with L L^T = S; maps standard normal noise to N(0, S).
  VectorXd transform_noise(const Eigen::Ref<const VectorXd>& xi) const;

  bool operator==(const Covariance& other) const;

 private:
  Covariance() = default;
  void finish_full();

  CovarianceKind kind_ = CovarianceKind::isotropic;
  Index dim_ = 0;
  double iso_var_ = 1.0;
  VectorXd diag_;
  MatrixXd full_;
  MatrixXd chol_lower_;
  double log_det_ = 0.0;
  double min_eig_ = 1.0;
  double max_eig_ = 1.0;
};

struct GaussianComponent {
  VectorXd mean;
  Covariance cov;

  GaussianComponent(VectorXd mean, Covariance cov);

  Index dim() const { return mean.size(); }
  double log_pdf(const Eigen::Ref<const VectorXd>& x) const;
  /// -S^{-1}(x - mean)
  VectorXd score(const Eigen::Ref<const VectorXd>& x) const;
  VectorXd sample(Stream& rng) const;
  GaussianComponent evolved(double t) const;
};

/// Nonempty, sorted, duplicate-free set of component indices.
class SubsetSpec {
 public:
  /// Sorts the indices. Throws on empty input, duplicates, or index >= k.
  static SubsetSpec of(std::vector<std::size_t> indices, std::size_t k);
  static SubsetSpec all(std::size_t k);

  const std::vector<std::size_t>& indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  bool contains(std::size_t i) const;
  bool is_subset_of(const SubsetSpec& other) const;
  /// Complement in [k]; empty optional when this set is all of [k].
  std::optional<SubsetSpec> complement(std::size_t k) const;
  /// "{0;2;3}" (no commas, so it can sit in a CSV field).
  std::string to_string() const;

  bool operator==(const SubsetSpec&) const = default;

 private:
  std::vector<std::size_t> indices_;
};

/// Weighted Gaussian mixture. Immutable after construction.
class Mixture {
 public:
  /// Weights must be strictly positive and sum to 1 within 1e-12.
  Mixture(std::vector<GaussianComponent> components, std::vector<double> weights);
  /// Rescales positive weights to sum to one.
  static Mixture normalized(std::vector<GaussianComponent> components, std::vector<double> raw_weights);

  std::size_t size() const { return components_.size(); }
  Index dim() const { return dim_; }
  const GaussianComponent& component(std::size_t i) const { return components_[i]; }
  const std::vector<GaussianComponent>& components() const { return components_; }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const { return weights_; }

  double log_density(const Eigen::Ref<const VectorXd>& x) const;
  VectorXd score(const Eigen::Ref<const VectorXd>& x) const;
  /// score() into a caller-owned buffer; avoids an allocation per call.
  void score_into(const Eigen::Ref<const VectorXd>& x, VectorXd& out) const;
  /// Posterior component probabilities, computed in log space.
  VectorXd responsibilities(const Eigen::Ref<const VectorXd>& x) const;

  std::size_t sample_component(Stream& rng) const;
  VectorXd sample(Stream& rng) const;

  bool operator==(const Mixture& other) const;

 private:
  void check_dim(Index n) const;
  /// Fills log(w_i) + log p^i(x) into terms and returns their log-sum-exp.
  double log_terms(const Eigen::Ref<const VectorXd>& x, std::vector<double>& terms) const;

  std::vector<GaussianComponent> components_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  Index dim_ = 0;
};

/// Mixture at forward-process time t. Throws on negative t.
Mixture evolve(const Mixture& mixture, double t);
double log_density(const Mixture& mixture, const Eigen::Ref<const VectorXd>& x);
VectorXd score(const Mixture& mixture, const Eigen::Ref<const VectorXd>& x);
/// Components in s with weights renormalized to one.
Mixture submixture(const Mixture& mixture, const SubsetSpec& s);

struct SeparationStats {
  double r_bar = 0.0;                 // max_i |mu_i|
  double w_pair = 0.0;                // max over a x b of |mu_i - mu_j|
  std::optional<double> delta;        // min over b x ([K]-b); absent when b = [K]
  double w_bar = 1.0;                 // max_{i,j} w_i / w_j
  double lambda_lower = 1.0;          // min(1, smallest covariance eigenvalue)
  double lambda_upper = 1.0;          // max(1, largest covariance eigenvalue)
};

SeparationStats separation_stats(const Mixture& mixture, const SubsetSpec& s_a, const SubsetSpec& s_b);

struct DecompositionSides {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Both sides of the score decomposition identity
///   |grad ln p_t^S - grad ln p_t|^2
///     = |grad ln p_t^S - grad ln p_t^{[K]-S}|^2 * (posterior mass of [K]-S)^2
/// at x on the time-t mixture. Throws when S = [K].
DecompositionSides score_decomposition_check(const Mixture& mixture, const SubsetSpec& s, double t,
                                             const Eigen::Ref<const VectorXd>& x);

struct AssumptionParams {
  double psi_sq = 1.0;  // strong log-concavity parameter; lambda_upper for Gaussians
  double m4 = 0.0;      // max_{i,t} E|X_t^i|^4
  double m_bar = 0.0;   // max_{i,j,t} E_{X ~ p_t^j} |grad ln p_t^i(X)|^4
};

/// Monte Carlo maxima of the moment assumptions over a time grid. n >= 1000.
AssumptionParams estimate_assumption_params(const Mixture& mixture, const std::vector<double>& t_grid,
                                            std::size_t n, RngKey key);

}  // namespace cwlab
