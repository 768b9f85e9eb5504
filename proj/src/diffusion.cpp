#include "cwlab/diffusion.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "cwlab/io.hpp"
#include "cwlab/parallel.hpp"

namespace cwlab {

int TrajectoryConfig::resolved_steps() const {
  if (steps) return *steps;
  return std::max(1000, static_cast<int>(std::ceil(500.0 * t_hat)));
}

void TrajectoryConfig::validate() const {
  if (!(t_hat >= 0.0) || !std::isfinite(t_hat)) throw std::invalid_argument("t_hat must be finite and >= 0");
  if (steps && *steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (!(t_floor >= 0.0)) throw std::invalid_argument("t_floor must be >= 0");
  if (t_hat > 0.0 && !(t_floor < t_hat)) {
    throw std::invalid_argument(fmt::format("t_floor {} must be below t_hat {}", t_floor, t_hat));
  }
}

ReverseSchedule::ReverseSchedule(const Mixture& mixture, const TrajectoryConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const double span = cfg_.t_hat - cfg_.t_floor;
  if (cfg_.t_hat == 0.0 || span <= 0.0) return;
  const int n = cfg_.resolved_steps();
  h_ = span / n;
  step_mixtures_.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) step_mixtures_.push_back(evolve(mixture, cfg_.t_hat - i * h_));
}

VectorXd ReverseSchedule::integrate(VectorXd x, Stream& rng) const {
  const Index d = x.size();
  if (!x.allFinite()) throw NumericalError("reverse start point is not finite", 0);
  const double grow = std::exp(h_);
  const double exp_noise = std::sqrt(std::expm1(2.0 * h_));
  const double em_noise = std::sqrt(2.0 * h_);
  const bool euler = cfg_.integrator == Integrator::euler_maruyama;
  const double keep = euler ? 1.0 + h_ : grow;
  const double pull = euler ? 2.0 * h_ : 2.0 * (grow - 1.0);
  const double noise = euler ? em_noise : exp_noise;
  VectorXd s(d);
  for (std::size_t n = 0; n < step_mixtures_.size(); ++n) {
    step_mixtures_[n].score_into(x, s);
    for (Index i = 0; i < d; ++i) x[i] = keep * x[i] + pull * s[i] + noise * rng.normal();
    if (!x.allFinite()) {
      throw NumericalError(fmt::format("non-finite state in reverse trajectory at step {}", n), n);
    }
  }
  return x;
}

VectorXd forward_sample(const Mixture& mixture, const Eigen::Ref<const VectorXd>& x0, double t, Stream& rng) {
  if (x0.size() != mixture.dim()) throw std::invalid_argument("forward_sample: dimension mismatch");
  if (!(t >= 0.0)) throw std::invalid_argument("forward_sample: t must be >= 0");
  if (t == 0.0) return x0;
  const double sd = std::sqrt(-std::expm1(-2.0 * t));
  return std::exp(-t) * x0 + sd * rng.normal_vector(x0.size());
}

VectorXd reverse_integrate(const Mixture& mixture, const Eigen::Ref<const VectorXd>& x_start,
                           const TrajectoryConfig& cfg, Stream& rng) {
  if (x_start.size() != mixture.dim()) throw std::invalid_argument("reverse_integrate: dimension mismatch");
  return ReverseSchedule(mixture, cfg).integrate(x_start, rng);
}

std::vector<VectorXd> targeted_reverse(const Mixture& mixture, const SubsetSpec& s_init,
                                       const TrajectoryConfig& cfg, std::size_t n, RngKey key) {
  if (n < 1) throw std::invalid_argument("targeted_reverse needs n >= 1");
  const Mixture init = submixture(mixture, s_init);
  const ReverseSchedule schedule(mixture, cfg);
  std::vector<VectorXd> out(n);
  parallel_for(n, [&](std::size_t i) {
    Stream rng = key.at(i);
    const VectorXd x0 = init.sample(rng);
    const VectorXd noised = forward_sample(mixture, x0, cfg.t_hat, rng);
    out[i] = schedule.integrate(noised, rng);
  });
  return out;
}

std::vector<double> membership_classify(const std::vector<VectorXd>& samples, const Mixture& mixture, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("classification radius must be positive");
  const std::size_t k = mixture.size();
  std::vector<double> counts(k + 1, 0.0);
  if (samples.empty()) return counts;
  for (const auto& x : samples) {
    std::size_t best = k;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
      const double dist = (x - mixture.component(i).mean).norm();
      if (dist <= radius && dist < best_dist) {
        best = i;
        best_dist = dist;
      }
    }
    counts[best] += 1.0;
  }
  for (double& c : counts) c /= static_cast<double>(samples.size());
  return counts;
}

std::string OccupancyCurve::to_csv() const {
  std::string out = "t";
  for (std::size_t i = 0; i < clusters(); ++i) out += fmt::format(",cluster_{}", i);
  out += ",unassigned\n";
  for (std::size_t r = 0; r < times.size(); ++r) {
    out += format_real(times[r]);
    for (double p : proportions[r]) out += "," + format_real(p);
    out += "\n";
  }
  return out;
}

OccupancyCurve occupancy_curve(const Mixture& mixture, const SubsetSpec& s_init, const std::vector<double>& t_grid,
                               const TrajectoryConfig& cfg, std::size_t n, double radius, RngKey key) {
  for (std::size_t g = 1; g < t_grid.size(); ++g) {
    if (!(t_grid[g] > t_grid[g - 1])) throw std::invalid_argument("occupancy time grid must be strictly ascending");
  }
  OccupancyCurve curve;
  for (std::size_t g = 0; g < t_grid.size(); ++g) {
    TrajectoryConfig c = cfg;
    c.t_hat = t_grid[g];
    if (c.t_hat <= c.t_floor) c.t_floor = 0.0;
    curve.times.push_back(t_grid[g]);
    curve.proportions.push_back(
        membership_classify(targeted_reverse(mixture, s_init, c, n, key.child(g)), mixture, radius));
  }
  return curve;
}

}  // namespace cwlab
