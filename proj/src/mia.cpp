#include "cwlab/mia.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "cwlab/io.hpp"
#include "cwlab/parallel.hpp"
#include "cwlab/windows.hpp"

namespace cwlab {

void AttackConfig::validate() const {
  if (!(t_under > 0.0 && t_under < horizon)) {
    throw std::invalid_argument(fmt::format("attack noise level {} must lie in (0, {})", t_under, horizon));
  }
  if (n_samples < 1) throw std::invalid_argument("attack needs n_samples >= 1");
}

// ---------------------------------------------------------------------------
// MixtureSampler

MixtureSampler::MixtureSampler(Mixture model, std::optional<int> steps, Integrator integrator)
    : model_(std::move(model)), steps_(steps), integrator_(integrator) {
  min_variance_ = std::numeric_limits<double>::infinity();
  for (const auto& c : model_.components()) min_variance_ = std::min(min_variance_, c.cov.min_eigenvalue());
}

void MixtureSampler::prepare(double t) {
  if (schedule_ && schedule_->config().t_hat == t) return;
  TrajectoryConfig cfg;
  cfg.t_hat = t;
  cfg.integrator = integrator_;
  cfg.t_floor = std::min(cfg.t_floor, 0.5 * t);
  cfg.steps = steps_ ? *steps_ : std::max(100, static_cast<int>(std::ceil(t / (0.5 * min_variance_))));
  schedule_.emplace(model_, cfg);
}

VectorXd MixtureSampler::forward(const VectorXd& x, double t, Stream& rng) const {
  return forward_sample(model_, x, t, rng);
}

VectorXd MixtureSampler::reverse(const VectorXd& x_t, double t, Stream& rng) const {
  if (!schedule_ || schedule_->config().t_hat != t) {
    throw std::logic_error("MixtureSampler::reverse called without prepare() for this noise level");
  }
  return schedule_->integrate(x_t, rng);
}

// ---------------------------------------------------------------------------
// Attack

double noise_denoise_score(DenoisingSampler& sampler, const VectorXd& x, const AttackConfig& cfg, Stream& rng) {
  cfg.validate();
  sampler.prepare(cfg.t_under);
  double total = 0.0;
  for (std::size_t i = 0; i < cfg.n_samples; ++i) {
    const VectorXd noised = sampler.forward(x, cfg.t_under, rng);
    total += (sampler.reverse(noised, cfg.t_under, rng) - x).norm();
  }
  return total / static_cast<double>(cfg.n_samples);
}

std::vector<double> noise_denoise_scores(DenoisingSampler& sampler, const std::vector<VectorXd>& candidates,
                                         const AttackConfig& cfg, RngKey key) {
  cfg.validate();
  sampler.prepare(cfg.t_under);
  const DenoisingSampler& shared = sampler;
  std::vector<double> out(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t c) {
    Stream rng = key.at(c);
    double total = 0.0;
    for (std::size_t i = 0; i < cfg.n_samples; ++i) {
      const VectorXd noised = shared.forward(candidates[c], cfg.t_under, rng);
      total += (shared.reverse(noised, cfg.t_under, rng) - candidates[c]).norm();
    }
    out[c] = total / static_cast<double>(cfg.n_samples);
  });
  return out;
}

// ---------------------------------------------------------------------------
// ROC

RocSummary roc_curve(const std::vector<double>& member_scores, const std::vector<double>& nonmember_scores) {
  if (member_scores.empty() || nonmember_scores.empty()) throw std::invalid_argument("ROC needs both score groups");
  std::vector<double> m = member_scores;
  std::vector<double> n = nonmember_scores;
  std::sort(m.begin(), m.end());
  std::sort(n.begin(), n.end());
  std::vector<double> thresholds;
  std::merge(m.begin(), m.end(), n.begin(), n.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const auto pos = static_cast<std::uint64_t>(m.size());
  const auto neg = static_cast<std::uint64_t>(n.size());
  RocSummary roc;
  roc.fpr.push_back(0.0);
  roc.tpr.push_back(0.0);
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t area2 = 0;  // twice the trapezoid area in count units
  std::size_t mi = 0;
  std::size_t ni = 0;
  for (double tau : thresholds) {
    const std::uint64_t tp_prev = tp;
    const std::uint64_t fp_prev = fp;
    while (mi < m.size() && m[mi] <= tau) ++mi, ++tp;
    while (ni < n.size() && n[ni] <= tau) ++ni, ++fp;
    area2 += (fp - fp_prev) * (tp + tp_prev);
    roc.fpr.push_back(static_cast<double>(fp) / static_cast<double>(neg));
    roc.tpr.push_back(static_cast<double>(tp) / static_cast<double>(pos));
  }
  roc.auc = static_cast<double>(area2) / static_cast<double>(2 * pos * neg);
  for (double level : {0.01, 0.05}) {
    double best = 0.0;
    for (std::size_t i = 0; i < roc.fpr.size(); ++i) {
      if (roc.fpr[i] <= level) best = std::max(best, roc.tpr[i]);
    }
    roc.tpr_at_fpr[level] = best;
  }
  return roc;
}

double auc_pair_count(const std::vector<double>& member_scores, const std::vector<double>& nonmember_scores) {
  if (member_scores.empty() || nonmember_scores.empty()) throw std::invalid_argument("AUC needs both score groups");
  std::uint64_t twice = 0;
  for (double a : member_scores) {
    for (double b : nonmember_scores) twice += a < b ? 2 : (a == b ? 1 : 0);
  }
  return static_cast<double>(twice) /
         static_cast<double>(2 * static_cast<std::uint64_t>(member_scores.size()) * nonmember_scores.size());
}

// ---------------------------------------------------------------------------
// Scenarios

namespace {

Mixture population_of(const PlantedConfig& cfg) {
  return Mixture({GaussianComponent(VectorXd::Zero(cfg.dim), Covariance::isotropic(cfg.dim, cfg.population_sd * cfg.population_sd))},
                 {1.0});
}

std::vector<VectorXd> draw_train(const Mixture& population, std::size_t n, RngKey key) {
  std::vector<VectorXd> train;
  for (std::size_t i = 0; i < n; ++i) {
    Stream rng = key.at(i);
    train.push_back(population.sample(rng));
  }
  return train;
}

}  // namespace

AttackScenario planted_memorization_scenario(const PlantedConfig& cfg, RngKey key) {
  if (cfg.n_train < 1) throw std::invalid_argument("planted scenario needs training points");
  if (!(cfg.memorized_weight > 0.0 && cfg.memorized_weight < 1.0)) {
    throw std::invalid_argument("memorized weight must lie in (0, 1)");
  }
  Mixture population = population_of(cfg);
  std::vector<VectorXd> train = draw_train(population, cfg.n_train, key.child(1));

  std::vector<GaussianComponent> comps;
  std::vector<double> weights;
  for (const auto& x : train) {
    comps.emplace_back(x, Covariance::isotropic(cfg.dim, cfg.memorized_var));
    weights.push_back(cfg.memorized_weight / static_cast<double>(cfg.n_train));
  }
  comps.push_back(population.component(0));
  weights.push_back(1.0 - cfg.memorized_weight);
  std::vector<std::size_t> planted(cfg.n_train);
  for (std::size_t i = 0; i < cfg.n_train; ++i) planted[i] = i;
  return {"planted", Mixture::normalized(std::move(comps), std::move(weights)), std::move(population),
          std::move(train), SubsetSpec::of(std::move(planted), cfg.n_train + 1)};
}

AttackScenario null_scenario(const PlantedConfig& cfg, RngKey key) {
  Mixture population = population_of(cfg);
  std::vector<VectorXd> train = draw_train(population, cfg.n_train, key.child(1));
  return {"null", population, population, std::move(train), std::nullopt};
}

RetentionPrediction predict_retention(const AttackScenario& scenario, double epsilon, RngKey key) {
  if (!scenario.memorized) throw std::invalid_argument("scenario has no memorized components");
  EmpiricalTvOptions opts;
  opts.n = 20000;
  opts.key = key;
  const SubsetSpec& planted = *scenario.memorized;
  RetentionPrediction out;
  out.retain = t_upper_empirical(scenario.model, planted, epsilon, 5.0, opts);
  const SubsetSpec first = SubsetSpec::of({planted.indices().front()}, scenario.model.size());
  out.forget = t_lower_empirical(scenario.model, first, planted, epsilon, 20.0, opts);
  return out;
}

std::string AttackResult::scores_csv() const {
  std::string out = "candidate_id,is_member,score\n";
  for (const auto& c : candidates) out += fmt::format("{},{},{}\n", c.id, c.is_member ? 1 : 0, format_real(c.score));
  return out;
}

std::string AttackResult::summary_csv() const {
  return fmt::format("auc,tpr_fpr01,tpr_fpr05,n_members,n_nonmembers,seed\n{},{},{},{},{},{}\n", format_real(roc.auc),
                     format_real(roc.tpr_at_fpr.at(0.01)), format_real(roc.tpr_at_fpr.at(0.05)), n_members,
                     n_nonmembers, seed);
}

AttackResult run_attack_experiment(const AttackScenario& scenario, const AttackConfig& cfg, std::size_t n_members,
                                   std::size_t n_nonmembers, RngKey key) {
  cfg.validate();
  if (n_members < 1 || n_nonmembers < 1) throw std::invalid_argument("attack needs members and nonmembers");
  if (scenario.train.empty()) throw std::invalid_argument("scenario has no training points");

  std::vector<VectorXd> candidates;
  const RngKey draw_key = key.child(2);
  for (std::size_t i = 0; i < n_members; ++i) candidates.push_back(scenario.train[i % scenario.train.size()]);
  for (std::size_t i = 0; i < n_nonmembers; ++i) {
    Stream rng = draw_key.at(i);
    candidates.push_back(scenario.population.sample(rng));
  }

  MixtureSampler sampler(scenario.model);
  const std::vector<double> scores = noise_denoise_scores(sampler, candidates, cfg, key.child(3));

  AttackResult result;
  result.n_members = n_members;
  result.n_nonmembers = n_nonmembers;
  result.seed = key.seed();
  std::vector<double> member_scores(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(n_members));
  std::vector<double> nonmember_scores(scores.begin() + static_cast<std::ptrdiff_t>(n_members), scores.end());
  for (std::size_t c = 0; c < scores.size(); ++c) result.candidates.push_back({c, c < n_members, scores[c]});
  result.roc = roc_curve(member_scores, nonmember_scores);
  return result;
}

}  // namespace cwlab
