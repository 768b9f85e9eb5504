#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cwlab/gmm.hpp"
#include "cwlab/rng.hpp"

namespace cwlab {

enum class WindowMethod { empirical, identity_gaussian, well_conditioned, wasserstein, weighted_two, sparse_dictionary };

std::string_view to_string(WindowMethod m);

/// Critical window [t_lower, t_upper] for one (S_init, S_target, epsilon).
/// A side is absent when its defining condition or log-domain precondition
/// fails; `diagnostics` names the failing expression.
struct WindowEstimate {
  std::optional<double> t_lower;
  std::optional<double> t_upper;
  double epsilon = 0.1;
  WindowMethod method = WindowMethod::empirical;
  double horizon = 0.0;
  std::string diagnostics;
};

/// One CSV row: method,s_init,s_target,epsilon,t_lower,t_upper,diagnostics
std::string window_csv_header();
std::string window_csv_row(const WindowEstimate& w, const SubsetSpec& s_init, const SubsetSpec& s_target);

struct EmpiricalTvOptions {
  double tolerance = 1e-3;  // bisection width on t
  std::size_t n = 100000;   // Monte Carlo size when d > 1
  RngKey key{0};
};

/// TV(p_t^{S_init}, p_t^{S_target}); quadrature for d = 1, Monte Carlo otherwise.
double forward_tv(const Mixture& mixture, const SubsetSpec& a, const SubsetSpec& b, double t,
                  const EmpiricalTvOptions& opts);

/// inf { t in [0, horizon] : TV(p_t^{S_init}, p_t^{S_target}) <= eps } by bisection.
std::optional<double> t_lower_empirical(const Mixture& mixture, const SubsetSpec& s_init, const SubsetSpec& s_target,
                                        double epsilon, double horizon, const EmpiricalTvOptions& opts = {});

/// sup { t in [0, horizon] : TV(p_t^i, p_t^j) >= 1 - eps^2 / 2 for all i in S_target, j outside }.
std::optional<double> t_upper_empirical(const Mixture& mixture, const SubsetSpec& s_target, double epsilon,
                                        double horizon, const EmpiricalTvOptions& opts = {});

/// Identity-covariance closed forms:
///   t_lower = ln w + ln(1/eps)
///   t_upper = ln Delta - ln 4 - 1/2 ln ln(R^2 sqrt(K W) / (eps^2 Delta^2))
WindowEstimate bounds_identity(const SeparationStats& stats, std::size_t k, double epsilon);

/// Well-conditioned covariances with eigenvalues in [lambda_lower, lambda_upper].
WindowEstimate bounds_wellconditioned(const SeparationStats& stats, std::size_t dim, std::size_t k, double epsilon);

/// Components whose centered versions are within `upsilon` in W2, sub-Gaussian with proxy sigma^2.
WindowEstimate bounds_wasserstein(const SeparationStats& stats, double upsilon, double sigma, std::size_t dim,
                                  double epsilon);

struct WeightedTwoCutoffs {
  double t_one = 0.0;
  double t_all = 0.0;
};

/// Two identity-covariance Gaussians at +-mu with weights w1, w2. Throws
/// std::domain_error when the inner ln ln argument is not above 1.
WeightedTwoCutoffs bounds_weighted_two(double mu_norm, double w1, double w2, double epsilon);

/// Classes built from sparse sums of nearly orthogonal unit features.
struct DictionaryModel {
  MatrixXd features;                             // d x n, unit columns
  double scale = 1.0;                            // R
  std::size_t sparsity = 1;                      // S~, max class size
  double sigma_sq = 1.0;                         // sub-Gaussian variance proxy
  double upsilon = 0.0;                          // W2 bound between centered classes
  std::vector<std::vector<std::size_t>> classes;  // feature subsets

  std::size_t dim() const { return static_cast<std::size_t>(features.rows()); }
  /// max_{a != b} |<f_a, f_b>|
  double coherence() const;
  /// Throws std::invalid_argument when norms or class sizes break the model.
  void validate() const;
  /// Hamming distance between the feature sets of two classes.
  std::size_t hamming(std::size_t a, std::size_t b) const;
  /// Class means R * sum_{i in S} f_i as an identity-covariance mixture with equal weights.
  Mixture mixture() const;
};

/// Hamming form of the Wasserstein bounds. s_init / s_target index classes.
/// `coherence_bound` is delta; pass model.coherence() for the tight value.
WindowEstimate bounds_sparse_dictionary(const DictionaryModel& model, const SubsetSpec& s_init,
                                        const SubsetSpec& s_target, double coherence_bound, double epsilon);

/// eps sqrt(W) K^2 (R^2 + M^2 + sqrt(M) Psi^4 + sqrt(Mbar)), universal constant taken as 1.
/// A comparator, not a certified bound.
double eval_master_bound(double epsilon, std::size_t k, double w_bar, const SeparationStats& stats,
                         const AssumptionParams& params);

}  // namespace cwlab
