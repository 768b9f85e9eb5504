#include "cwlab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "cwlab/diffusion.hpp"
#include "cwlab/divergences.hpp"
#include "cwlab/hierarchy.hpp"
#include "cwlab/mia.hpp"
#include "cwlab/svg.hpp"
#include "cwlab/windows.hpp"

namespace cwlab {
namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config access with unknown-key detection

class Fields {
 public:
  Fields(const Json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) fail("", "must be an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& reason) const {
    throw ConfigError(key.empty() ? fmt::format("{}: {}", where_, reason)
                                  : fmt::format("{}.{}: {}", where_, key, reason));
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return obj_.contains(key) && !obj_.at(key).is_null();
  }

  const Json& raw(const std::string& key) {
    if (!has(key)) fail(key, "is required");
    return obj_.at(key);
  }

  double real(const std::string& key, std::optional<double> fallback = std::nullopt) {
    if (!has(key)) {
      if (!fallback) fail(key, "is required");
      return *fallback;
    }
    const Json& v = obj_.at(key);
    if (!v.is_number()) fail(key, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "must be finite");
    return x;
  }

  double positive(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const double x = real(key, fallback);
    if (!(x > 0.0)) fail(key, "must be positive");
    return x;
  }

  double epsilon(const std::string& key, double fallback) {
    const double x = real(key, fallback);
    if (!(x > 0.0 && x < 1.0)) fail(key, "must lie in (0, 1)");
    return x;
  }

  std::uint64_t integer(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt,
                        std::uint64_t min = 0) {
    std::uint64_t x = 0;
    if (!has(key)) {
      if (!fallback) fail(key, "is required");
      x = *fallback;
    } else {
      const Json& v = obj_.at(key);
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        fail(key, "must be a nonnegative integer");
      }
      x = v.get<std::uint64_t>();
    }
    if (x < min) fail(key, fmt::format("must be at least {}", min));
    return x;
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    if (!has(key)) {
      if (!fallback) fail(key, "is required");
      return *fallback;
    }
    const Json& v = obj_.at(key);
    if (!v.is_string()) fail(key, "must be a string");
    return v.get<std::string>();
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!used_.count(key)) fail(key, "is not a recognized key");
    }
  }

  const std::string& where() const { return where_; }

 private:
  const Json& obj_;
  std::string where_;
  std::set<std::string> used_;
};

Mixture mixture_source(Fields& f, const fs::path& base_dir) {
  const bool inline_doc = f.has("mixture");
  const bool file = f.has("mixture_file");
  if (inline_doc == file) f.fail("mixture", "give exactly one of mixture or mixture_file");
  if (inline_doc) return mixture_from_json(f.raw("mixture"));
  fs::path path = f.text("mixture_file");
  if (path.is_relative()) path = base_dir / path;
  return read_mixture_file(path);
}

SubsetSpec subset_of(Fields& f, const std::string& key, const Json& v, std::size_t k) {
  if (v.is_string() && v.get<std::string>() == "all") return SubsetSpec::all(k);
  if (!v.is_array() || v.empty()) f.fail(key, "must be a nonempty list of component indices or \"all\"");
  std::vector<std::size_t> idx;
  for (const auto& e : v) {
    if (!e.is_number_integer() || e.get<std::int64_t>() < 0) f.fail(key, "indices must be nonnegative integers");
    const auto i = e.get<std::size_t>();
    if (i >= k) f.fail(key, fmt::format("index {} out of range for {} components", i, k));
    idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end());
  if (std::adjacent_find(idx.begin(), idx.end()) != idx.end()) f.fail(key, "indices must be distinct");
  return SubsetSpec::of(std::move(idx), k);
}

SubsetSpec subset(Fields& f, const std::string& key, std::size_t k) { return subset_of(f, key, f.raw(key), k); }

std::vector<double> time_grid(Fields& f, const std::string& key) {
  const Json& g = f.raw(key);
  std::vector<double> out;
  if (g.is_array()) {
    for (const auto& e : g) {
      if (!e.is_number()) f.fail(key, "entries must be numbers");
      out.push_back(e.get<double>());
    }
  } else if (g.is_object()) {
    Fields sub(g, f.where() + "." + key);
    const double start = sub.real("start");
    const double stop = sub.real("stop");
    const auto count = sub.integer("count", std::nullopt, 2);
    sub.finish();
    if (!(stop > start)) sub.fail("stop", "must exceed start");
    for (std::uint64_t i = 0; i < count; ++i) {
      out.push_back(start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
  } else {
    f.fail(key, "must be a list of times or {start, stop, count}");
  }
  if (out.empty()) f.fail(key, "must not be empty");
  for (double t : out) {
    if (!(t >= 0.0 && std::isfinite(t))) f.fail(key, "times must be finite and nonnegative");
  }
  return out;
}

TrajectoryConfig trajectory(Fields& f, const std::string& default_integrator, double default_floor) {
  TrajectoryConfig cfg;
  cfg.t_floor = default_floor;
  if (f.has("steps")) cfg.steps = static_cast<int>(f.integer("steps", std::nullopt, 1));
  const std::string integrator = f.text("integrator", default_integrator);
  if (integrator == "euler_maruyama") {
    cfg.integrator = Integrator::euler_maruyama;
  } else if (integrator == "exponential") {
    cfg.integrator = Integrator::exponential;
  } else {
    f.fail("integrator", "must be euler_maruyama or exponential");
  }
  cfg.t_floor = f.real("t_floor", cfg.t_floor);
  if (cfg.t_floor < 0.0) f.fail("t_floor", "must be nonnegative");
  return cfg;
}

std::string opt_real(const std::optional<double>& v) { return v ? format_real(*v) : ""; }

// ---------------------------------------------------------------------------
// occupancy

struct Threshold {
  std::string label;
  bool lower = true;
  SubsetSpec init;
  SubsetSpec target;
};

RunOutput run_occupancy(Fields& f, const fs::path& base_dir, RngKey key) {
  const Mixture m = mixture_source(f, base_dir);
  const std::size_t k = m.size();
  const SubsetSpec s_init = subset(f, "s_init", k);
  const std::vector<double> grid = time_grid(f, "grid");
  const auto n = f.integer("n", 1000, 1);
  const double radius = f.positive("radius", 5.0);
  const double eps = f.epsilon("epsilon", 0.1);
  TrajectoryConfig traj = trajectory(f, "euler_maruyama", 1e-4);

  std::vector<Threshold> thresholds;
  if (f.has("thresholds")) {
    const Json& list = f.raw("thresholds");
    if (!list.is_array()) f.fail("thresholds", "must be a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      Fields t(list[i], fmt::format("{}.thresholds[{}]", f.where(), i));
      Threshold th;
      th.label = t.text("label");
      const std::string side = t.text("side");
      if (side != "lower" && side != "upper") t.fail("side", "must be lower or upper");
      th.lower = side == "lower";
      th.init = subset(t, "s_init", k);
      th.target = subset(t, "s_target", k);
      t.finish();
      if (!th.init.is_subset_of(th.target)) t.fail("s_init", "must be contained in s_target");
      thresholds.push_back(std::move(th));
    }
  }
  f.finish();

  std::string th_csv = "label,side,s_init,s_target,value\n";
  std::vector<PlotMarker> markers;
  for (const auto& th : thresholds) {
    const WindowEstimate w = bounds_identity(separation_stats(m, th.init, th.target), k, eps);
    const std::optional<double> v = th.lower ? w.t_lower : w.t_upper;
    th_csv += fmt::format("{},{},{},{},{}\n", th.label, th.lower ? "lower" : "upper", th.init.to_string(),
                          th.target.to_string(), opt_real(v));
    if (v) markers.push_back({th.label, *v});
  }

  const OccupancyCurve curve = occupancy_curve(m, s_init, grid, traj, n, radius, key);

  LinePlot plot;
  plot.title = fmt::format("Targeted reverse process from {}", s_init.to_string());
  plot.x_label = "noise time";
  plot.y_label = "proportion";
  plot.y_min = 0.0;
  plot.y_max = 1.0;
  for (std::size_t c = 0; c <= curve.clusters(); ++c) {
    PlotSeries s;
    s.label = c < curve.clusters() ? fmt::format("cluster_{}", c) : "unassigned";
    s.x = curve.times;
    for (const auto& row : curve.proportions) s.y.push_back(row[c]);
    plot.series.push_back(std::move(s));
  }
  plot.vertical_lines = markers;

  RunOutput out;
  out.files.push_back({"occupancy.csv", curve.to_csv()});
  out.files.push_back({"thresholds.csv", th_csv});
  out.files.push_back({"occupancy.svg", render_svg(plot)});
  return out;
}

// ---------------------------------------------------------------------------
// windows

RunOutput run_windows(Fields& f, const fs::path& base_dir, RngKey key) {
  const Mixture m = mixture_source(f, base_dir);
  const std::size_t k = m.size();
  std::vector<std::pair<SubsetSpec, SubsetSpec>> pairs;
  if (f.has("pairs")) {
    const Json& list = f.raw("pairs");
    if (!list.is_array() || list.empty()) f.fail("pairs", "must be a nonempty list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      Fields p(list[i], fmt::format("{}.pairs[{}]", f.where(), i));
      pairs.emplace_back(subset(p, "s_init", k), subset(p, "s_target", k));
      p.finish();
    }
  } else {
    pairs.emplace_back(subset(f, "s_init", k), subset(f, "s_target", k));
  }
  for (const auto& [a, b] : pairs) {
    if (!a.is_subset_of(b)) f.fail("s_init", fmt::format("{} must be contained in {}", a.to_string(), b.to_string()));
  }
  const double eps = f.epsilon("epsilon", 0.1);
  const double horizon = f.positive("horizon", 20.0);
  EmpiricalTvOptions tv;
  tv.n = f.integer("n", 100000, 10000);
  tv.tolerance = f.positive("tolerance", 1e-3);
  std::vector<std::string> methods = {"identity"};
  if (f.has("methods")) {
    methods.clear();
    const Json& list = f.raw("methods");
    if (!list.is_array() || list.empty()) f.fail("methods", "must be a nonempty list");
    for (const auto& e : list) {
      if (!e.is_string()) f.fail("methods", "entries must be strings");
      const auto name = e.get<std::string>();
      if (name != "identity" && name != "wellconditioned" && name != "empirical") {
        f.fail("methods", fmt::format("unknown method '{}'", name));
      }
      methods.push_back(name);
    }
  }
  f.finish();

  std::string csv = window_csv_header();
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& [a, b] = pairs[p];
    const SeparationStats stats = separation_stats(m, a, b);
    for (const auto& method : methods) {
      WindowEstimate w;
      if (method == "identity") {
        w = bounds_identity(stats, k, eps);
      } else if (method == "wellconditioned") {
        w = bounds_wellconditioned(stats, static_cast<std::size_t>(m.dim()), k, eps);
      } else {
        w.epsilon = eps;
        w.method = WindowMethod::empirical;
        w.horizon = horizon;
        tv.key = key.child(p).child(0);
        w.t_lower = t_lower_empirical(m, a, b, eps, horizon, tv);
        if (b.size() == k) {
          w.diagnostics = "t_upper undefined when the target holds every component";
        } else {
          tv.key = key.child(p).child(1);
          w.t_upper = t_upper_empirical(m, b, eps, horizon, tv);
        }
      }
      csv += window_csv_row(w, a, b);
    }
  }
  RunOutput out;
  out.files.push_back({"windows.csv", csv});
  return out;
}

// ---------------------------------------------------------------------------
// hierarchy

RunOutput run_hierarchy(Fields& f, RngKey key) {
  const auto levels = f.integer("levels", 3, 1);
  const double scale = f.positive("scale", 1e6);
  const auto dim = f.integer("dim", 8, 1);
  const double delta = f.real("delta", 0.0);
  const double eps = f.epsilon("epsilon", 0.01);
  const auto leaf = f.integer("leaf", 0);
  const auto n = f.integer("n", 2000, 1);
  const double radius = f.positive("radius", 10.0);
  TrajectoryConfig traj = trajectory(f, "exponential", 0.0);
  f.finish();
  if (levels > 10) f.fail("levels", "must be at most 10");
  if (leaf >= (1ULL << levels)) f.fail("leaf", "out of range for the number of classes");

  auto [tree, mixture] = synthesize_tree(static_cast<int>(levels), scale, static_cast<Index>(dim), delta, key.child(0));
  const TreeReport report = validate_tree(tree, mixture);
  const CriticalSchedule schedule = critical_schedule(tree, leaf, eps);

  std::string verify_csv = "level,t_hat,inside_fraction\n";
  if (schedule.k > 0) {
    for (const auto& v : verify_schedule_empirical(tree, mixture, leaf, schedule, n, radius, key.child(1), traj)) {
      verify_csv += fmt::format("{},{},{}\n", v.level, format_real(v.t_hat), format_real(v.inside_fraction));
    }
  }
  Json tree_doc = tree.to_json();
  tree_doc["mixture"] = mixture_to_json(mixture);
  Json violations = Json::array();
  for (const auto& v : report.violations) violations.push_back(v);
  tree_doc["violations"] = violations;

  RunOutput out;
  out.files.push_back({"tree.json", tree_doc.dump(2) + "\n"});
  out.files.push_back({"schedule.csv", schedule.to_csv()});
  out.files.push_back({"verification.csv", verify_csv});
  return out;
}

// ---------------------------------------------------------------------------
// mia

RunOutput run_mia(Fields& f, RngKey key) {
  const std::string scenario_name = f.text("scenario", "planted");
  if (scenario_name != "planted" && scenario_name != "null") f.fail("scenario", "must be planted or null");
  PlantedConfig pc;
  pc.dim = static_cast<Index>(f.integer("dim", static_cast<std::uint64_t>(pc.dim), 1));
  pc.n_train = f.integer("n_train", pc.n_train, 1);
  pc.population_sd = f.positive("population_sd", pc.population_sd);
  pc.memorized_var = f.positive("memorized_var", pc.memorized_var);
  pc.memorized_weight = f.real("memorized_weight", pc.memorized_weight);
  if (!(pc.memorized_weight > 0.0 && pc.memorized_weight < 1.0)) f.fail("memorized_weight", "must lie in (0, 1)");
  const double eps = f.epsilon("epsilon", 0.3);
  AttackConfig base;
  base.n_samples = f.integer("n_samples", 10, 1);
  base.horizon = f.positive("horizon", 20.0);
  const auto n_members = f.integer("n_members", 500, 1);
  const auto n_nonmembers = f.integer("n_nonmembers", 500, 1);

  const Json& sweep = f.raw("t_under");
  if (!sweep.is_array() || sweep.empty()) f.fail("t_under", "must be a nonempty list of times, \"inside\" or \"far\"");
  bool needs_prediction = false;
  for (const auto& e : sweep) {
    if (e.is_string()) {
      const auto s = e.get<std::string>();
      if (s != "inside" && s != "far") f.fail("t_under", fmt::format("unknown level '{}'", s));
      needs_prediction = true;
    } else if (!e.is_number() || !(e.get<double>() > 0.0 && e.get<double>() < base.horizon)) {
      f.fail("t_under", "numeric entries must lie in (0, horizon)");
    }
  }
  f.finish();
  if (needs_prediction && scenario_name != "planted") {
    f.fail("t_under", "\"inside\" and \"far\" need the planted scenario");
  }

  const AttackScenario scenario = scenario_name == "planted" ? planted_memorization_scenario(pc, key.child(0))
                                                             : null_scenario(pc, key.child(0));
  RunOutput out;
  std::optional<RetentionPrediction> pred;
  if (scenario.memorized) {
    pred = predict_retention(scenario, eps, key.child(1));
    out.files.push_back({"retention.csv", fmt::format("epsilon,retain,forget\n{},{},{}\n", format_real(eps),
                                                      opt_real(pred->retain), opt_real(pred->forget))});
  }

  std::string sweep_csv = "index,level,t_under,auc,tpr_fpr01,tpr_fpr05\n";
  LinePlot roc_plot;
  roc_plot.title = fmt::format("NoiseDenoise ROC ({} scenario)", scenario.name);
  roc_plot.x_label = "false positive rate";
  roc_plot.y_label = "true positive rate";
  roc_plot.y_min = 0.0;
  roc_plot.y_max = 1.0;
  roc_plot.diagonal = true;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    std::string level = "fixed";
    double t = 0.0;
    if (sweep[i].is_string()) {
      level = sweep[i].get<std::string>();
      if (level == "inside") {
        if (!pred->retain) throw ConfigError("mia: no retention window at this epsilon; use numeric t_under");
        t = 0.5 * *pred->retain;
      } else {
        if (!pred->forget) throw ConfigError("mia: forgetting time beyond the search horizon; use numeric t_under");
        t = *pred->forget + 2.0;
      }
      if (!(t < base.horizon)) throw ConfigError(fmt::format("mia: predicted t_under {} exceeds horizon", t));
    } else {
      t = sweep[i].get<double>();
    }
    AttackConfig cfg = base;
    cfg.t_under = t;
    const AttackResult r = run_attack_experiment(scenario, cfg, n_members, n_nonmembers, key.child(2).child(i));
    sweep_csv += fmt::format("{},{},{},{},{},{}\n", i, level, format_real(t), format_real(r.roc.auc),
                             format_real(r.roc.tpr_at_fpr.at(0.01)), format_real(r.roc.tpr_at_fpr.at(0.05)));
    std::string roc_csv = "fpr,tpr\n";
    for (std::size_t p = 0; p < r.roc.fpr.size(); ++p) {
      roc_csv += fmt::format("{},{}\n", format_real(r.roc.fpr[p]), format_real(r.roc.tpr[p]));
    }
    out.files.push_back({fmt::format("scores_{}.csv", i), r.scores_csv()});
    out.files.push_back({fmt::format("summary_{}.csv", i), r.summary_csv()});
    out.files.push_back({fmt::format("roc_{}.csv", i), roc_csv});
    roc_plot.series.push_back({fmt::format("t_under={:.4g} (AUC {:.3f})", t, r.roc.auc), r.roc.fpr, r.roc.tpr});
  }
  out.files.push_back({"sweep.csv", sweep_csv});
  out.files.push_back({"roc.svg", render_svg(roc_plot)});
  return out;
}

// ---------------------------------------------------------------------------
// divergence-audit

RunOutput run_divergence_audit(Fields& f, RngKey key) {
  const auto pairs = f.integer("pairs", 20, 1);
  const auto n = f.integer("n", 20000, 10000);
  const double mean_range = f.positive("mean_range", 3.0);
  const double sd_min = f.positive("sd_min", 0.5);
  const double sd_max = f.positive("sd_max", 2.0);
  f.finish();
  if (sd_max < sd_min) f.fail("sd_max", "must be at least sd_min");

  std::string csv =
      "pair,mean_p,sd_p,mean_q,sd_q,tv_quadrature,tv_mc,tv_mc_se,hellinger_sq,lecam,lecam_se,kl,w2,"
      "lecam_side,hellinger_side,tv_side,sandwich_ok\n";
  const RngKey draw = key.child(0);
  for (std::uint64_t p = 0; p < pairs; ++p) {
    Stream rng = draw.at(p);
    auto gaussian = [&] {
      const double mu = (2.0 * rng.uniform() - 1.0) * mean_range;
      const double sd = sd_min + (sd_max - sd_min) * rng.uniform();
      return GaussianComponent(VectorXd::Constant(1, mu), Covariance::isotropic(1, sd * sd));
    };
    const GaussianComponent a = gaussian();
    const GaussianComponent b = gaussian();
    const Mixture pm({a}, {1.0});
    const Mixture qm({b}, {1.0});
    const double tv_q = tv_quadrature_1d(pm, qm).value;
    const DivergenceEstimate tv_m = tv_mc(pm, qm, n, key.child(1).child(p));
    const double h2 = hellinger_sq_gaussian(a, b);
    const LeCamEstimate lc = lecam_mc(pm, qm, n, key.child(2).child(p));
    const double lc_side = lc.ratio;  // (1 - LC) / 2
    const double h_side = 0.5 * (1.0 - 0.5 * h2);
    const double tv_side = 0.5 * std::sqrt(std::max(0.0, 1.0 - tv_q * tv_q));
    const double slack = 3.0 * lc.ratio_std_error;
    const bool ok = lc_side <= h_side + slack && h_side <= tv_side + 1e-12;
    csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", p, format_real(a.mean[0]),
                       format_real(std::sqrt(a.cov.isotropic_variance())), format_real(b.mean[0]),
                       format_real(std::sqrt(b.cov.isotropic_variance())), format_real(tv_q),
                       format_real(tv_m.value), format_real(tv_m.std_error), format_real(h2),
                       format_real(lc.lc.value), format_real(lc.lc.std_error), format_real(kl_gaussian(a, b)),
                       format_real(w2_gaussian(a, b)), format_real(lc_side), format_real(h_side),
                       format_real(tv_side), ok ? 1 : 0);
  }
  RunOutput out;
  out.files.push_back({"divergences.csv", csv});
  return out;
}

// ---------------------------------------------------------------------------
// recipes

Json fig_mixture() {
  Json comps = Json::array();
  for (double mu : {-15100.0, -14900.0, 14900.0, 15100.0}) comps.push_back({{"mean", {mu}}, {"cov", 1.0}});
  return {{"dim", 1}, {"weights", {0.25, 0.25, 0.25, 0.25}}, {"components", comps}};
}

Json threshold(const char* label, const char* side, Json init, Json target) {
  return {{"label", label}, {"side", side}, {"s_init", std::move(init)}, {"s_target", std::move(target)}};
}

}  // namespace

const std::vector<RecipeInfo>& recipe_list() {
  static const std::vector<RecipeInfo> list = {
      {"reproduce-fig", "cluster occupancy of the 1D four-cluster mixture vs noise time, with thresholds t1..t4"},
      {"hierarchy-demo", "synthesized mixture tree, its critical-time schedule and an empirical check"},
      {"mia-planted", "NoiseDenoise attack on a planted-memorization mixture inside and far above its window"},
      {"divergence-audit", "TV, Hellinger, Le Cam, KL and W2 on random 1D Gaussian pairs"},
  };
  return list;
}

Json recipe_config(std::string_view name) {
  if (name == "reproduce-fig") {
    return {{"kind", "occupancy"},
            {"mixture", fig_mixture()},
            {"s_init", {1}},
            {"grid", {{"start", 0.0}, {"stop", 14.0}, {"count", 29}}},
            {"n", 1000},
            {"steps", 2000},
            {"integrator", "exponential"},
            {"radius", 5.0},
            {"epsilon", 0.1},
            {"thresholds",
             {threshold("t1", "upper", {1}, {1}), threshold("t2", "lower", {1}, {0, 1}),
              threshold("t3", "upper", {1}, {0, 1}), threshold("t4", "lower", {1}, "all")}},
            {"seed", 20240613},
            {"out", "reproduce-fig"}};
  }
  if (name == "hierarchy-demo") {
    return {{"kind", "hierarchy"}, {"levels", 3},   {"scale", 1e6},  {"dim", 8},         {"delta", 0.0},
            {"epsilon", 0.01},     {"leaf", 0},     {"n", 2000},     {"radius", 10.0},   {"seed", 6},
            {"out", "hierarchy-demo"}};
  }
  if (name == "mia-planted") {
    return {{"kind", "mia"},        {"scenario", "planted"}, {"epsilon", 0.3},     {"t_under", {"inside", "far"}},
            {"n_members", 500},     {"n_nonmembers", 500},   {"n_samples", 10},    {"horizon", 20.0},
            {"seed", 72},           {"out", "mia-planted"}};
  }
  if (name == "divergence-audit") {
    return {{"kind", "divergence-audit"}, {"pairs", 20}, {"n", 20000}, {"seed", 4}, {"out", "divergence-audit"}};
  }
  throw ConfigError(fmt::format("unknown recipe '{}'", name));
}

RunOutput run_experiment(const Json& config, const fs::path& base_dir) {
  Fields f(config, "config");
  const std::string kind = f.text("kind");
  const std::uint64_t seed = f.integer("seed");
  if (f.has("out")) f.text("out");
  const RngKey key(seed);

  RunOutput out;
  try {
    if (kind == "occupancy") {
      out = run_occupancy(f, base_dir, key);
    } else if (kind == "windows") {
      out = run_windows(f, base_dir, key);
    } else if (kind == "hierarchy") {
      out = run_hierarchy(f, key);
    } else if (kind == "mia") {
      out = run_mia(f, key);
    } else if (kind == "divergence-audit") {
      out = run_divergence_audit(f, key);
    } else {
      f.fail("kind", "must be one of occupancy, windows, hierarchy, mia, divergence-audit");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("{}: {}", kind, e.what()));
  }

  Json files = Json::array();
  for (const auto& file : out.files) {
    files.push_back({{"name", file.name}, {"fnv1a", fnv1a_hex(file.content)}});
  }
  out.manifest = {{"tool", "cwlab"},
                  {"version", std::string(kVersion)},
                  {"kind", kind},
                  {"seed", seed},
                  {"config_hash", fnv1a_hex(config.dump())},
                  {"config", config},
                  {"files", files}};
  return out;
}

void write_run(const RunOutput& run, const fs::path& dir) {
  for (const auto& file : run.files) write_text_file(dir / file.name, file.content);
  write_text_file(dir / "manifest.json", run.manifest.dump(2) + "\n");
}

std::string config_reference() {
  return R"(Config files are JSON objects. Common keys:
  kind          occupancy | windows | hierarchy | mia | divergence-audit (required)
  seed          unsigned integer (required; there is no clock-based default)
  out           output directory (default: the recipe or config name)

occupancy:    mixture | mixture_file, s_init, grid ([t...] or {start, stop, count}),
              n=1000, steps=max(1000, ceil(500 t)), integrator=euler_maruyama|exponential,
              t_floor=1e-4, radius=5, epsilon=0.1,
              thresholds=[{label, side: lower|upper, s_init, s_target}]
windows:      mixture | mixture_file, s_init + s_target or pairs=[{s_init, s_target}],
              epsilon=0.1, methods=[identity|wellconditioned|empirical] (default [identity]),
              horizon=20, n=100000 (Monte Carlo TV when dim > 1), tolerance=1e-3
hierarchy:    levels=3, scale=1e6, dim=8, delta=0, epsilon=0.01, leaf=0, n=2000, radius=10,
              steps, integrator=exponential, t_floor=0
mia:          scenario=planted|null, t_under=[time | "inside" | "far", ...] (required),
              dim=4, n_train=100, population_sd=4, memorized_var=0.04, memorized_weight=0.5,
              epsilon=0.3, n_samples=10, n_members=500, n_nonmembers=500, horizon=20
divergence-audit: pairs=20, n=20000, mean_range=3, sd_min=0.5, sd_max=2

Subsets are lists of component indices or "all". A mixture is
  {"dim": d, "weights": [...], "components": [{"mean": [...], "cov": ...}]}
where cov is a scalar (isotropic), d variances (diagonal) or a d x d matrix.
)";
}

}  // namespace cwlab
