#pragma once

#include <cstddef>
#include <string_view>

#include "cwlab/gmm.hpp"
#include "cwlab/rng.hpp"

namespace cwlab {

enum class DivergenceMethod { monte_carlo, quadrature, closed_form };

std::string_view to_string(DivergenceMethod m);

struct DivergenceEstimate {
  double value = 0.0;
  double std_error = 0.0;  // 0 for closed forms and quadrature
  std::size_t n = 0;
  DivergenceMethod method = DivergenceMethod::closed_form;
};

/// Total variation by sampling the balanced mixture m = (p + q) / 2 and
/// averaging |p - q| / (p + q), which lies in [0, 1]. n >= 10^4.
DivergenceEstimate tv_mc(const Mixture& p, const Mixture& q, std::size_t n, RngKey key);

/// 1D total variation by adaptive Simpson over the union of mu +- 12 sigma
/// windows of both mixtures. Absolute tolerance 1e-8.
DivergenceEstimate tv_quadrature_1d(const Mixture& p, const Mixture& q);

/// Squared Hellinger distance, convention H^2 = int (sqrt p - sqrt q)^2 in [0, 2].
double hellinger_sq_gaussian(const GaussianComponent& a, const GaussianComponent& b);

/// KL(a || b) with the usual factor 1/2.
double kl_gaussian(const GaussianComponent& a, const GaussianComponent& b);

/// 2-Wasserstein distance (Bures formula).
double w2_gaussian(const GaussianComponent& a, const GaussianComponent& b);

struct LeCamEstimate {
  double ratio = 0.0;           // E_{x~P}[q / (p + q)]
  double ratio_std_error = 0.0;
  DivergenceEstimate lc;        // LC = 1 - 2 * ratio
};

/// n >= 10^4.
LeCamEstimate lecam_mc(const Mixture& p, const Mixture& q, std::size_t n, RngKey key);

/// E_{X ~ p_t^i} |grad ln p_t^j(X) - grad ln p_t^l(X)|^4. n >= 10^4.
double score_gap_moment(const Mixture& mixture, std::size_t i, std::size_t j, std::size_t l, double t, std::size_t n,
                        RngKey key);

}  // namespace cwlab
