#include "cwlab/windows.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "cwlab/divergences.hpp"
#include "cwlab/io.hpp"

namespace cwlab {
namespace {

void require_epsilon(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument(fmt::format("epsilon {} must lie in (0, 1)", eps));
}

void append_diag(std::string& diag, const std::string& msg) {
  if (!diag.empty()) diag += "; ";
  diag += msg;
}

/// -1/2 ln ln(arg), or nullopt when arg <= 1.
std::optional<double> neg_half_lnln(double arg) {
  if (!(arg > 1.0) || !std::isfinite(arg)) return std::nullopt;
  return -0.5 * std::log(std::log(arg));
}

/// Clamp a lower-side bound to the domain [0, T] of the definition.
double clamp_lower(double value, std::string& diag) {
  if (value < 0.0) {
    append_diag(diag, fmt::format("t_lower formula {:.6g} < 0 clamped to 0", value));
    return 0.0;
  }
  return value;
}

/// ln sqrt(8 d ln 6 + 8 ln(4 / eps^2))
double subgaussian_radius_log(std::size_t dim, double eps) {
  return 0.5 * std::log(8.0 * static_cast<double>(dim) * std::log(6.0) + 8.0 * std::log(4.0 / (eps * eps)));
}

}  // namespace

std::string_view to_string(WindowMethod m) {
  switch (m) {
    case WindowMethod::empirical:
      return "empirical";
    case WindowMethod::identity_gaussian:
      return "identity_gaussian";
    case WindowMethod::well_conditioned:
      return "well_conditioned";
    case WindowMethod::wasserstein:
      return "wasserstein";
    case WindowMethod::weighted_two:
      return "weighted_two";
    case WindowMethod::sparse_dictionary:
      return "sparse_dictionary";
  }
  return "unknown";
}

std::string window_csv_header() { return "method,s_init,s_target,epsilon,t_lower,t_upper,diagnostics\n"; }

std::string window_csv_row(const WindowEstimate& w, const SubsetSpec& s_init, const SubsetSpec& s_target) {
  std::string diag = w.diagnostics;
  std::replace(diag.begin(), diag.end(), ',', ';');
  std::replace(diag.begin(), diag.end(), '\n', ' ');
  return fmt::format("{},{},{},{},{},{},{}\n", to_string(w.method), s_init.to_string(), s_target.to_string(),
                     format_real(w.epsilon), w.t_lower ? format_real(*w.t_lower) : "",
                     w.t_upper ? format_real(*w.t_upper) : "", diag);
}

// ---------------------------------------------------------------------------
// Empirical windows

double forward_tv(const Mixture& mixture, const SubsetSpec& a, const SubsetSpec& b, double t,
                  const EmpiricalTvOptions& opts) {
  if (a == b) return 0.0;
  const Mixture pt = evolve(mixture, t);
  const Mixture pa = submixture(pt, a);
  const Mixture pb = submixture(pt, b);
  if (mixture.dim() == 1) return tv_quadrature_1d(pa, pb).value;
  return tv_mc(pa, pb, opts.n, opts.key).value;
}

std::optional<double> t_lower_empirical(const Mixture& mixture, const SubsetSpec& s_init, const SubsetSpec& s_target,
                                        double epsilon, double horizon, const EmpiricalTvOptions& opts) {
  require_epsilon(epsilon);
  if (!s_init.is_subset_of(s_target)) throw std::invalid_argument("t_lower_empirical needs s_init inside s_target");
  if (s_init == s_target) return 0.0;
  auto close = [&](double t) { return forward_tv(mixture, s_init, s_target, t, opts) <= epsilon; };
  if (close(0.0)) return 0.0;
  if (!close(horizon)) return std::nullopt;
  // TV along the forward process is nonincreasing (data processing), so the
  // set {t : TV <= eps} is an interval ending at the horizon.
  double lo = 0.0;
  double hi = horizon;
  while (hi - lo > opts.tolerance) {
    const double mid = 0.5 * (lo + hi);
    (close(mid) ? hi : lo) = mid;
  }
  return hi;
}

std::optional<double> t_upper_empirical(const Mixture& mixture, const SubsetSpec& s_target, double epsilon,
                                        double horizon, const EmpiricalTvOptions& opts) {
  require_epsilon(epsilon);
  const auto outside = s_target.complement(mixture.size());
  if (!outside) throw std::invalid_argument("t_upper_empirical needs s_target != [K]");
  const double threshold = 1.0 - 0.5 * epsilon * epsilon;
  const std::size_t k = mixture.size();

  auto separated = [&](double t) {
    for (std::size_t i : s_target.indices()) {
      for (std::size_t j : outside->indices()) {
        if (forward_tv(mixture, SubsetSpec::of({i}, k), SubsetSpec::of({j}, k), t, opts) < threshold) return false;
      }
    }
    return true;
  };
  if (!separated(0.0)) return std::nullopt;
  if (separated(horizon)) return horizon;
  double lo = 0.0;
  double hi = horizon;
  while (hi - lo > opts.tolerance) {
    const double mid = 0.5 * (lo + hi);
    (separated(mid) ? lo : hi) = mid;
  }
  return lo;
}

// ---------------------------------------------------------------------------
// Closed-form families

WindowEstimate bounds_identity(const SeparationStats& stats, std::size_t k, double epsilon) {
  require_epsilon(epsilon);
  WindowEstimate out;
  out.method = WindowMethod::identity_gaussian;
  out.epsilon = epsilon;

  if (stats.w_pair > 0.0) {
    out.t_lower = clamp_lower(std::log(stats.w_pair) + std::log(1.0 / epsilon), out.diagnostics);
  } else {
    out.t_lower = 0.0;
    append_diag(out.diagnostics, "w=0: initial and target means coincide");
  }

  if (!stats.delta) {
    append_diag(out.diagnostics, "t_upper absent: S_target=[K] has no outside component");
  } else if (!(*stats.delta > 0.0)) {
    append_diag(out.diagnostics, "t_upper absent: Delta=0");
  } else {
    const double delta = *stats.delta;
    const double inner =
        stats.r_bar * stats.r_bar * std::sqrt(static_cast<double>(k) * stats.w_bar) / (epsilon * epsilon * delta * delta);
    if (const auto tail = neg_half_lnln(inner)) {
      out.t_upper = std::log(delta) - std::log(4.0) + *tail;
    } else {
      append_diag(out.diagnostics,
                  fmt::format("t_upper absent: ln ln argument R^2 sqrt(KW)/(eps^2 Delta^2) = {:.6g} <= 1", inner));
    }
  }
  return out;
}

WindowEstimate bounds_wellconditioned(const SeparationStats& stats, std::size_t dim, std::size_t k, double epsilon) {
  require_epsilon(epsilon);
  const double lo = stats.lambda_lower;
  const double hi = stats.lambda_upper;
  if (!(lo > 0.0 && lo <= 1.0 && hi >= 1.0)) {
    throw std::invalid_argument(fmt::format("eigenvalue bounds [{}, {}] must satisfy 0 < lower <= 1 <= upper", lo, hi));
  }
  WindowEstimate out;
  out.method = WindowMethod::well_conditioned;
  out.epsilon = epsilon;
  const double d = static_cast<double>(dim);

  const double lower_arg = 2.0 * d * (hi - lo) / lo + stats.w_pair * stats.w_pair / lo;
  if (lower_arg > 0.0) {
    out.t_lower = clamp_lower(0.5 * std::log(lower_arg) + std::log(1.0 / epsilon), out.diagnostics);
  } else {
    out.t_lower = 0.0;
    append_diag(out.diagnostics, "w=0 and lambda_upper=lambda_lower: initial and target coincide");
  }

  if (!stats.delta) {
    append_diag(out.diagnostics, "t_upper absent: S_target=[K] has no outside component");
  } else if (!(*stats.delta > 0.0)) {
    append_diag(out.diagnostics, "t_upper absent: Delta=0");
  } else {
    const double delta = *stats.delta;
    const double r2 = stats.r_bar * stats.r_bar;
    const double bracket = (hi - lo) * (hi - lo) * (r2 + hi * d) + r2;
    const double inner = hi * std::sqrt(static_cast<double>(k) * stats.w_bar) * bracket /
                         (lo * lo * delta * delta * epsilon * epsilon);
    if (const auto tail = neg_half_lnln(inner)) {
      out.t_upper = std::log(delta) + 0.5 * std::log(lo) - std::log(4.0) + *tail;
    } else {
      append_diag(out.diagnostics, fmt::format("t_upper absent: ln ln argument {:.6g} <= 1", inner));
    }
  }
  return out;
}

WindowEstimate bounds_wasserstein(const SeparationStats& stats, double upsilon, double sigma, std::size_t dim,
                                  double epsilon) {
  require_epsilon(epsilon);
  if (!(upsilon >= 0.0)) throw std::invalid_argument("upsilon must be >= 0");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  WindowEstimate out;
  out.method = WindowMethod::wasserstein;
  out.epsilon = epsilon;

  const double spread = stats.w_pair + upsilon;
  const double formula = spread > 0.0
                             ? std::log(spread) + std::log(1.0 / epsilon) + 0.5 * std::log(2.0)
                             : -std::numeric_limits<double>::infinity();
  out.t_lower = std::max(formula, 3.0);

  if (!stats.delta) {
    append_diag(out.diagnostics, "t_upper absent: S_target=[K] has no outside component");
  } else if (!(*stats.delta > 0.0)) {
    append_diag(out.diagnostics, "t_upper absent: Delta=0");
  } else {
    out.t_upper = std::log(*stats.delta) - std::log(sigma) - subgaussian_radius_log(dim, epsilon) - std::log(3.0) -
                  0.5 * std::log(8.0);
  }
  return out;
}

WeightedTwoCutoffs bounds_weighted_two(double mu_norm, double w1, double w2, double epsilon) {
  require_epsilon(epsilon);
  if (!(w1 > 0.0 && w2 > 0.0) || std::abs(w1 + w2 - 1.0) > 1e-12) {
    throw std::invalid_argument("weights must be positive and sum to 1");
  }
  if (!(mu_norm > 0.0)) throw std::domain_error("|mu| must be positive");
  const double inner = std::sqrt(2.0 * w2 / w1) / (4.0 * epsilon * epsilon);
  const auto tail = neg_half_lnln(inner);
  if (!tail) throw std::domain_error(fmt::format("ln ln argument sqrt(2 w2/w1)/(4 eps^2) = {:.6g} <= 1", inner));
  return {std::log(mu_norm) - std::log(2.0) + *tail, std::log(mu_norm) + std::log(2.0) + std::log(1.0 / epsilon)};
}

// ---------------------------------------------------------------------------
// Sparse dictionary

double DictionaryModel::coherence() const {
  double c = 0.0;
  for (Index a = 0; a < features.cols(); ++a) {
    for (Index b = a + 1; b < features.cols(); ++b) c = std::max(c, std::abs(features.col(a).dot(features.col(b))));
  }
  return c;
}

void DictionaryModel::validate() const {
  if (features.cols() < 1 || features.rows() < 1) throw std::invalid_argument("dictionary needs features");
  for (Index a = 0; a < features.cols(); ++a) {
    if (std::abs(features.col(a).norm() - 1.0) > 1e-12) {
      throw std::invalid_argument(fmt::format("feature {} is not unit norm", a));
    }
  }
  if (classes.empty()) throw std::invalid_argument("dictionary needs classes");
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (classes[c].size() > sparsity) {
      throw std::invalid_argument(fmt::format("class {} has {} features, cap {}", c, classes[c].size(), sparsity));
    }
    for (std::size_t f : classes[c]) {
      if (f >= static_cast<std::size_t>(features.cols())) throw std::invalid_argument("class feature out of range");
    }
  }
  if (!(sigma_sq > 0.0) || !(upsilon >= 0.0) || !(scale > 0.0)) {
    throw std::invalid_argument("dictionary scale, sigma^2 and upsilon must be positive");
  }
}

std::size_t DictionaryModel::hamming(std::size_t a, std::size_t b) const {
  std::vector<std::size_t> x = classes.at(a);
  std::vector<std::size_t> y = classes.at(b);
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::vector<std::size_t> diff;
  std::set_symmetric_difference(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(diff));
  return diff.size();
}

Mixture DictionaryModel::mixture() const {
  validate();
  std::vector<GaussianComponent> comps;
  for (const auto& cls : classes) {
    VectorXd mean = VectorXd::Zero(features.rows());
    for (std::size_t f : cls) mean += scale * features.col(static_cast<Index>(f));
    comps.emplace_back(std::move(mean), Covariance::isotropic(features.rows(), sigma_sq));
  }
  std::vector<double> w(classes.size(), 1.0);
  return Mixture::normalized(std::move(comps), std::move(w));
}

WindowEstimate bounds_sparse_dictionary(const DictionaryModel& model, const SubsetSpec& s_init,
                                        const SubsetSpec& s_target, double coherence_bound, double epsilon) {
  require_epsilon(epsilon);
  model.validate();
  if (coherence_bound < model.coherence() - 1e-12) {
    throw std::invalid_argument(
        fmt::format("coherence bound {} below actual coherence {}", coherence_bound, model.coherence()));
  }
  const std::size_t k = model.classes.size();
  if (s_init.indices().back() >= k || s_target.indices().back() >= k) {
    throw std::invalid_argument("class subset out of range");
  }

  std::size_t h_bar = 0;
  for (std::size_t i : s_init.indices()) {
    for (std::size_t j : s_target.indices()) h_bar = std::max(h_bar, model.hamming(i, j));
  }

  WindowEstimate out;
  out.method = WindowMethod::sparse_dictionary;
  out.epsilon = epsilon;
  const double d = static_cast<double>(model.dim());
  const double slack = d * d * coherence_bound;
  const double sigma = std::sqrt(model.sigma_sq);

  const double spread = model.scale * std::sqrt(static_cast<double>(h_bar) + slack) + model.upsilon;
  const double formula = spread > 0.0 ? std::log(1.0 / epsilon) + 0.5 * std::log(2.0) + std::log(spread)
                                      : -std::numeric_limits<double>::infinity();
  out.t_lower = std::max(3.0, formula);

  const auto outside = s_target.complement(k);
  if (!outside) {
    append_diag(out.diagnostics, "t_upper absent: S_target covers all classes");
    return out;
  }
  std::size_t h_low = std::numeric_limits<std::size_t>::max();
  for (std::size_t l : s_target.indices()) {
    for (std::size_t j : outside->indices()) h_low = std::min(h_low, model.hamming(l, j));
  }
  const double gap = static_cast<double>(h_low) - slack;
  if (!(gap > 0.0)) {
    append_diag(out.diagnostics,
                fmt::format("t_upper absent: Hamming gap {} <= d^2 delta = {:.6g}", h_low, slack));
    return out;
  }
  out.t_upper = std::log(model.scale * std::sqrt(gap)) -
                std::log(sigma * std::sqrt(static_cast<double>(model.sparsity) + 1.0)) -
                subgaussian_radius_log(model.dim(), epsilon) - std::log(3.0) - 0.5 * std::log(8.0);
  return out;
}

double eval_master_bound(double epsilon, std::size_t k, double w_bar, const SeparationStats& stats,
                         const AssumptionParams& params) {
  const double kk = static_cast<double>(k);
  const double bracket = stats.r_bar * stats.r_bar + params.m4 * params.m4 +
                         std::sqrt(params.m4) * params.psi_sq * params.psi_sq + std::sqrt(params.m_bar);
  return epsilon * std::sqrt(w_bar) * kk * kk * bracket;
}

}  // namespace cwlab
