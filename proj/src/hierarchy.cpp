#include "cwlab/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include <Eigen/QR>
#include <fmt/format.h>

namespace cwlab {
namespace {

// Relative floating-point allowance on top of delta when auditing distances.
constexpr double kDistanceRoundoff = 1e-9;

std::vector<std::size_t> range(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> v;
  for (std::size_t i = begin; i < end; ++i) v.push_back(i);
  return v;
}

}  // namespace

std::size_t MixtureTree::leaf_of(std::size_t i) const {
  for (const auto& n : nodes) {
    if (n.children.empty() && std::binary_search(n.members.begin(), n.members.end(), i)) return n.id;
  }
  throw std::invalid_argument(fmt::format("class {} is not in any leaf", i));
}

std::size_t MixtureTree::lowest_common_ancestor(std::size_t a, std::size_t b) const {
  while (a != b) {
    if (nodes[a].height >= nodes[b].height) {
      a = *nodes[a].parent;
    } else {
      b = *nodes[b].parent;
    }
  }
  return a;
}

std::vector<std::size_t> MixtureTree::path_to_root(std::size_t i) const {
  std::vector<std::size_t> path{leaf_of(i)};
  while (nodes[path.back()].parent) path.push_back(*nodes[path.back()].parent);
  return path;
}

double MixtureTree::nominal_distance(int height) const {
  return scale / std::exp2(static_cast<double>(height) * static_cast<double>(height));
}

Json MixtureTree::to_json() const {
  std::function<Json(std::size_t)> node_json = [&](std::size_t id) {
    const TreeNode& n = nodes[id];
    Json j;
    j["id"] = n.id;
    j["parent"] = n.parent ? Json(*n.parent) : Json(nullptr);
    j["f"] = n.members;
    j["h"] = n.height;
    Json kids = Json::array();
    for (std::size_t c : n.children) kids.push_back(node_json(c));
    j["children"] = kids;
    return j;
  };
  Json doc;
  doc["R"] = scale;
  doc["delta"] = delta;
  doc["levels"] = levels;
  doc["K"] = num_classes;
  doc["root"] = node_json(0);
  return doc;
}

std::pair<MixtureTree, Mixture> synthesize_tree(int levels, double scale, Index dim, double delta, RngKey key) {
  if (levels < 1) throw std::invalid_argument("tree needs at least one level");
  if (!(delta >= 0.0 && delta < 0.01)) throw std::invalid_argument("tree slack delta must lie in [0, 0.01)");
  if (!(scale > 0.0)) throw std::invalid_argument("tree scale R must be positive");
  const std::size_t k = std::size_t{1} << levels;
  if (dim < static_cast<Index>(k)) {
    throw std::invalid_argument(fmt::format("infeasible tree: dimension {} < 2^{} = {} split directions needed", dim,
                                            levels, k));
  }

  // Offsets g_h along each split direction at height h, solved bottom-up so a
  // pair split at height h ends up exactly R / 2^{h^2} apart:
  //   D_h^2 = g_h^2 + 1/2 sum_{h' > h} g_{h'}^2
  MixtureTree tree;
  tree.scale = scale;
  tree.delta = delta;
  tree.levels = levels;
  tree.num_classes = k;
  std::vector<double> gap(static_cast<std::size_t>(levels));
  double deeper = 0.0;
  for (int h = levels - 1; h >= 0; --h) {
    const double target = tree.nominal_distance(h);
    const double g2 = target * target - 0.5 * deeper;
    if (!(g2 > 0.0)) throw std::invalid_argument(fmt::format("infeasible tree: no room for split at height {}", h));
    gap[static_cast<std::size_t>(h)] = std::sqrt(g2);
    deeper += g2;
  }

  // Heap layout: node n has children 2n+1 and 2n+2.
  const std::size_t internal = k - 1;
  const std::size_t total = 2 * k - 1;
  tree.nodes.resize(total);
  for (std::size_t n = 0; n < total; ++n) {
    TreeNode& node = tree.nodes[n];
    node.id = n;
    node.height = static_cast<int>(std::floor(std::log2(static_cast<double>(n + 1))));
    if (n > 0) node.parent = (n - 1) / 2;
    if (n < internal) node.children = {2 * n + 1, 2 * n + 2};
    const std::size_t span = k >> node.height;
    const std::size_t first_at_height = (std::size_t{1} << node.height) - 1;
    const std::size_t begin = (n - first_at_height) * span;
    node.members = range(begin, begin + span);
  }

  Stream rng = key.at(0);
  MatrixXd gaussian(dim, dim);
  for (Index c = 0; c < dim; ++c) {
    for (Index r = 0; r < dim; ++r) gaussian(r, c) = rng.normal();
  }
  const MatrixXd directions = Eigen::HouseholderQR<MatrixXd>(gaussian).householderQ() * MatrixXd::Identity(dim, dim);

  std::vector<GaussianComponent> comps;
  for (std::size_t i = 0; i < k; ++i) {
    VectorXd mean = VectorXd::Zero(dim);
    std::size_t node = 0;
    for (int h = 0; h < levels; ++h) {
      const std::size_t bit = (i >> (levels - 1 - h)) & 1U;
      const double sign = bit ? 1.0 : -1.0;
      mean += sign * 0.5 * gap[static_cast<std::size_t>(h)] * directions.col(static_cast<Index>(node));
      node = 2 * node + 1 + bit;
    }
    comps.emplace_back(std::move(mean), Covariance::isotropic(dim, 1.0));
  }
  Mixture mixture = Mixture::normalized(std::move(comps), std::vector<double>(k, 1.0));

  const TreeReport report = validate_tree(tree, mixture);
  if (!report.ok()) throw std::logic_error("synthesized tree failed validation: " + report.violations.front());
  return {std::move(tree), std::move(mixture)};
}

TreeReport validate_tree(const MixtureTree& tree, const Mixture& mixture) {
  TreeReport report;
  auto fail = [&](std::string msg) { report.violations.push_back(std::move(msg)); };
  const std::size_t k = mixture.size();
  if (tree.num_classes != k) fail(fmt::format("tree has {} classes, mixture {}", tree.num_classes, k));
  if (tree.nodes.empty()) {
    fail("tree has no nodes");
    return report;
  }
  if (tree.root().members != range(0, k)) fail("f(root) is not [K]");

  std::vector<int> leaf_hits(k, 0);
  for (const auto& node : tree.nodes) {
    for (std::size_t c : node.children) {
      const auto& child = tree.nodes[c].members;
      const bool contained = std::includes(node.members.begin(), node.members.end(), child.begin(), child.end());
      if (!contained || child.size() >= node.members.size()) {
        fail(fmt::format("containment: f({}) is not a strict subset of f({})", c, node.id));
      }
    }
    if (node.children.empty()) {
      for (std::size_t i : node.members) {
        if (i < k) ++leaf_hits[i];
      }
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (leaf_hits[i] != 1) fail(fmt::format("partition: class {} appears in {} leaves", i, leaf_hits[i]));
  }
  if (!report.ok()) return report;

  const double slack = std::max(tree.delta, kDistanceRoundoff);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const std::size_t u = tree.lowest_common_ancestor(tree.leaf_of(i), tree.leaf_of(j));
      const double nominal = tree.nominal_distance(tree.nodes[u].height);
      const double dist = (mixture.component(i).mean - mixture.component(j).mean).norm();
      if (std::abs(dist - nominal) > slack * nominal) {
        fail(fmt::format("bracket: pair ({}, {}) at distance {:.9g} outside (1 +- {})*{:.9g} (lca {} height {})", i, j,
                         dist, tree.delta, nominal, u, tree.nodes[u].height));
      }
    }
  }
  return report;
}

std::vector<double> CriticalSchedule::times() const {
  std::vector<double> t;
  for (std::size_t l = 0; l < k; ++l) t.push_back(levels[l].t_chosen);
  return t;
}

std::string CriticalSchedule::to_csv() const {
  std::string out = "level,t_lower,t_upper,t_chosen,gap_ok\n";
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const auto& lv = levels[l];
    out += fmt::format("{},{},{},{},{}\n", l + 1, lv.t_lower ? format_real(*lv.t_lower) : "",
                       lv.t_upper ? format_real(*lv.t_upper) : "inf", l < k ? format_real(lv.t_chosen) : "",
                       lv.gap_ok ? 1 : 0);
  }
  return out;
}

CriticalSchedule critical_schedule(const MixtureTree& tree, std::size_t leaf_class, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (leaf_class >= tree.num_classes) throw std::invalid_argument("leaf class out of range");
  CriticalSchedule sched;
  sched.leaf_class = leaf_class;
  sched.epsilon = epsilon;
  sched.path = tree.path_to_root(leaf_class);

  const double r = tree.scale;
  for (std::size_t l = 0; l < sched.path.size(); ++l) {
    const TreeNode& node = tree.nodes[sched.path[l]];
    ScheduleLevel lv;
    lv.node = node.id;
    lv.height = node.height;
    if (l == 0) {
      lv.t_lower = 0.0;  // initial and target sub-mixtures coincide
    } else {
      // Widest pair between f(u_{l-1}) and f(u_l) is split at u_l itself.
      lv.t_lower = std::log(tree.nominal_distance(node.height)) + std::log(1.0 / epsilon);
    }
    if (node.parent) {
      // Closest outside class is split from f(u_l) at its parent.
      const double gap = tree.nominal_distance(tree.nodes[*node.parent].height);
      const double inner = r * r / (epsilon * epsilon * gap * gap);
      if (inner > 1.0) {
        lv.t_upper = std::log(gap) - std::log(4.0) - 0.5 * std::log(std::log(inner));
      } else {
        lv.t_upper = -std::numeric_limits<double>::infinity();
        lv.diagnostics = fmt::format("ln ln argument {:.6g} <= 1", inner);
      }
    }
    sched.levels.push_back(lv);
  }

  for (std::size_t l = 0; l < sched.levels.size(); ++l) {
    ScheduleLevel& lv = sched.levels[l];
    const double upper = lv.t_upper.value_or(std::numeric_limits<double>::infinity());
    const bool window_ok = upper > *lv.t_lower;
    bool interleave_ok = true;
    if (l + 1 < sched.levels.size()) interleave_ok = *sched.levels[l + 1].t_lower > upper;
    lv.gap_ok = window_ok && interleave_ok;
    if (!window_ok) {
      if (!lv.diagnostics.empty()) lv.diagnostics += "; ";
      lv.diagnostics += fmt::format("empty window: t_upper {:.6g} <= t_lower {:.6g}", upper, *lv.t_lower);
    } else if (!interleave_ok) {
      if (!lv.diagnostics.empty()) lv.diagnostics += "; ";
      lv.diagnostics += "next level's t_lower does not exceed this t_upper";
    }
    // The root window is unbounded above; pick one unit past its lower edge.
    lv.t_chosen = lv.t_upper ? 0.5 * (*lv.t_lower + *lv.t_upper) : *lv.t_lower + 1.0;
  }
  while (sched.k < sched.levels.size() && sched.levels[sched.k].gap_ok) ++sched.k;
  return sched;
}

std::vector<LevelVerification> verify_schedule_empirical(const MixtureTree& tree, const Mixture& mixture,
                                                         std::size_t leaf_class, const CriticalSchedule& schedule,
                                                         std::size_t n, double radius, RngKey key,
                                                         const TrajectoryConfig& base) {
  if (schedule.k == 0) throw std::invalid_argument("schedule has no levels to verify");
  std::vector<LevelVerification> out;
  const SubsetSpec init = SubsetSpec::of({leaf_class}, mixture.size());
  for (std::size_t l = 0; l < schedule.k; ++l) {
    const ScheduleLevel& lv = schedule.levels[l];
    TrajectoryConfig cfg = base;
    cfg.t_hat = lv.t_chosen;
    if (cfg.t_hat <= cfg.t_floor) cfg.t_floor = 0.0;
    const auto samples = targeted_reverse(mixture, init, cfg, n, key.child(l + 1));
    LevelVerification v;
    v.level = l + 1;
    v.t_hat = lv.t_chosen;
    v.shares = membership_classify(samples, mixture, radius);
    for (std::size_t i : tree.nodes[lv.node].members) v.inside_fraction += v.shares[i];
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace cwlab
