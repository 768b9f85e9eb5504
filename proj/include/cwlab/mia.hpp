#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cwlab/diffusion.hpp"
#include "cwlab/gmm.hpp"
#include "cwlab/rng.hpp"

namespace cwlab {

struct AttackConfig {
  double t_under = 0.1;       // noising time of the attack, in (0, horizon)
  std::size_t n_samples = 10;  // reconstructions averaged per candidate
  double horizon = 10.0;      // full diffusion horizon of the attacked model

  void validate() const;
};

/// Anything that can noise a point forward and denoise it back.
class DenoisingSampler {
 public:
  virtual ~DenoisingSampler() = default;
  virtual Index dim() const = 0;
  /// Called once before reconstructions at noise level t; not thread safe.
  virtual void prepare(double t) = 0;
  virtual VectorXd forward(const VectorXd& x, double t, Stream& rng) const = 0;
  /// Denoise x_t from noise level t back to data. Requires prepare(t).
  virtual VectorXd reverse(const VectorXd& x_t, double t, Stream& rng) const = 0;
};

/// Exact-score sampler for a Gaussian mixture model. Unless `steps` is set,
/// the reverse grid uses max(100, ceil(t / (0.5 * smallest variance))) steps
/// so the explicit score update stays stable around narrow components.
class MixtureSampler final : public DenoisingSampler {
 public:
  explicit MixtureSampler(Mixture model, std::optional<int> steps = std::nullopt,
                          Integrator integrator = Integrator::exponential);

  Index dim() const override { return model_.dim(); }
  void prepare(double t) override;
  VectorXd forward(const VectorXd& x, double t, Stream& rng) const override;
  VectorXd reverse(const VectorXd& x_t, double t, Stream& rng) const override;

  const Mixture& model() const { return model_; }

 private:
  Mixture model_;
  std::optional<int> steps_;
  Integrator integrator_;
  double min_variance_;
  std::optional<ReverseSchedule> schedule_;
};

/// NoiseDenoise score: mean L2 distance between x and N noise-then-denoise
/// reconstructions. Low scores indicate membership.
double noise_denoise_score(DenoisingSampler& sampler, const VectorXd& x, const AttackConfig& cfg, Stream& rng);

/// Scores for many candidates; candidate c uses key.at(c).
std::vector<double> noise_denoise_scores(DenoisingSampler& sampler, const std::vector<VectorXd>& candidates,
                                         const AttackConfig& cfg, RngKey key);

struct RocSummary {
  double auc = 0.0;
  std::map<double, double> tpr_at_fpr;  // FPR level -> TPR (0.01 and 0.05)
  std::vector<double> fpr;              // ROC points from (0,0) to (1,1)
  std::vector<double> tpr;
};

/// Membership predicted when score <= tau; tau sweeps every distinct score.
/// Trapezoidal AUC is computed in integer counts, so it equals pair counting
/// P(member < nonmember) + 1/2 P(tie) exactly.
RocSummary roc_curve(const std::vector<double>& member_scores, const std::vector<double>& nonmember_scores);

/// Brute-force pair counting, for cross-checking roc_curve.
double auc_pair_count(const std::vector<double>& member_scores, const std::vector<double>& nonmember_scores);

/// Synthetic attack setting: the attacked model, the population distribution
/// nonmembers come from, and the training points members come from.
struct AttackScenario {
  std::string name;
  Mixture model;
  Mixture population;
  std::vector<VectorXd> train;
  std::optional<SubsetSpec> memorized;  // model components planted on training points
};

struct PlantedConfig {
  Index dim = 4;
  std::size_t n_train = 100;
  double population_sd = 4.0;     // population N(0, sd^2 I)
  double memorized_var = 0.04;    // narrow component around each training point
  double memorized_weight = 0.5;  // total weight on memorized components
};

/// Model = memorized_weight * (equal mix of N(x_m, v I) over training points)
///       + (1 - memorized_weight) * population.
AttackScenario planted_memorization_scenario(const PlantedConfig& cfg, RngKey key);

/// Model = population, training points are fresh population draws. Members
/// and nonmembers are identically distributed.
AttackScenario null_scenario(const PlantedConfig& cfg, RngKey key);

/// Noise levels predicted by the window machinery for the planted scenario:
/// `retain` is the empirical t_upper of the memorized components (they stay
/// separated from the population component up to it) and `forget` the
/// empirical t_lower from the first memorized component to the memorized
/// sub-mixture (past it a noised training point no longer identifies itself).
struct RetentionPrediction {
  std::optional<double> retain;
  std::optional<double> forget;
};

RetentionPrediction predict_retention(const AttackScenario& scenario, double epsilon, RngKey key);

struct CandidateScore {
  std::size_t id = 0;
  bool is_member = false;
  double score = 0.0;
};

struct AttackResult {
  std::vector<CandidateScore> candidates;
  RocSummary roc;
  std::size_t n_members = 0;
  std::size_t n_nonmembers = 0;
  std::uint64_t seed = 0;

  /// candidate_id,is_member,score
  std::string scores_csv() const;
  /// auc,tpr_fpr01,tpr_fpr05,n_members,n_nonmembers,seed
  std::string summary_csv() const;
};

/// Members are training points taken in order (cycling), nonmembers fresh
/// population draws. Ids 0..n_members-1 are members.
AttackResult run_attack_experiment(const AttackScenario& scenario, const AttackConfig& cfg, std::size_t n_members,
                                   std::size_t n_nonmembers, RngKey key);

}  // namespace cwlab
