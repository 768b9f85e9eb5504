#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cwlab/gmm.hpp"
#include "cwlab/rng.hpp"

namespace cwlab {

/// A reverse trajectory produced a non-finite state. The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t step) : std::runtime_error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

enum class Integrator { euler_maruyama, exponential };

struct TrajectoryConfig {
  double t_hat = 0.0;            // noise level; reverse integration runs over [0, t_hat - t_floor]
  std::optional<int> steps;      // default max(1000, ceil(500 * t_hat))
  Integrator integrator = Integrator::euler_maruyama;
  double t_floor = 1e-4;

  int resolved_steps() const;
  void validate() const;
};

/// Evolved mixtures at every step of a uniform reverse grid. Building this
/// once per (mixture, config) keeps per-sample work to score evaluations.
class ReverseSchedule {
 public:
  ReverseSchedule(const Mixture& mixture, const TrajectoryConfig& cfg);

  /// Endpoint of the discretized reverse SDE
  ///   dX = (X + 2 grad ln p_{t_hat - s}(X)) ds + sqrt(2) dB,   s in [0, t_hat - t_floor].
  VectorXd integrate(VectorXd x, Stream& rng) const;

  const TrajectoryConfig& config() const { return cfg_; }
  std::size_t steps() const { return step_mixtures_.size(); }
  double step_size() const { return h_; }

 private:
  TrajectoryConfig cfg_;
  double h_ = 0.0;
  std::vector<Mixture> step_mixtures_;  // mixture at forward time t_hat - s_n
};

/// Exact OU draw: e^{-t} x0 + sqrt(1 - e^{-2t}) xi.
VectorXd forward_sample(const Mixture& mixture, const Eigen::Ref<const VectorXd>& x0, double t, Stream& rng);

VectorXd reverse_integrate(const Mixture& mixture, const Eigen::Ref<const VectorXd>& x_start,
                           const TrajectoryConfig& cfg, Stream& rng);

/// S-targeted reverse process: X ~ p^{s_init}, noise for t_hat, then denoise
/// for t_hat with the full mixture score. Sample i uses stream key.at(i).
std::vector<VectorXd> targeted_reverse(const Mixture& mixture, const SubsetSpec& s_init,
                                       const TrajectoryConfig& cfg, std::size_t n, RngKey key);

/// Per-cluster proportions plus a trailing "unassigned" bucket (size K + 1).
/// A point goes to the nearest mean within `radius`; ties go to the lower index.
std::vector<double> membership_classify(const std::vector<VectorXd>& samples, const Mixture& mixture, double radius);

struct OccupancyCurve {
  std::vector<double> times;
  std::vector<std::vector<double>> proportions;  // rows of K + 1

  std::size_t clusters() const { return proportions.empty() ? 0 : proportions.front().size() - 1; }
  /// Header t,cluster_0,...,cluster_{K-1},unassigned; one row per time.
  std::string to_csv() const;
};

/// targeted_reverse + membership_classify at each grid time. Grid point g
/// uses key.child(g). cfg.t_hat is replaced by the grid time.
OccupancyCurve occupancy_curve(const Mixture& mixture, const SubsetSpec& s_init, const std::vector<double>& t_grid,
                               const TrajectoryConfig& cfg, std::size_t n, double radius, RngKey key);

}  // namespace cwlab
