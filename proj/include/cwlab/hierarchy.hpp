#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cwlab/diffusion.hpp"
#include "cwlab/gmm.hpp"
#include "cwlab/io.hpp"
#include "cwlab/rng.hpp"

namespace cwlab {

struct TreeNode {
  std::size_t id = 0;
  std::optional<std::size_t> parent;
  std::vector<std::size_t> children;
  std::vector<std::size_t> members;  // f(v), sorted
  int height = 0;                    // distance to the root
};

/// Mixture tree: nodes carry index sets f(v) and heights h(v). Leaf means
/// whose lowest common ancestor has height h sit at distance R / 2^{h^2}
/// (up to the factor 1 +- delta).
struct MixtureTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  double scale = 1.0;           // R
  double delta = 0.0;           // bracket slack, < 0.01
  int levels = 0;               // H', number of splits from root to leaves
  std::size_t num_classes = 0;  // K

  const TreeNode& root() const { return nodes.front(); }
  /// Leaf node whose index set contains class i.
  std::size_t leaf_of(std::size_t i) const;
  std::size_t lowest_common_ancestor(std::size_t a, std::size_t b) const;
  /// Node ids from the leaf holding class i up to the root.
  std::vector<std::size_t> path_to_root(std::size_t i) const;
  /// Nominal distance R / 2^{h^2} for classes split at a node of height h.
  double nominal_distance(int height) const;

  Json to_json() const;
};

/// Binary tree of `levels` splits (K = 2^levels), identity covariances and
/// equal weights. Split directions are a random orthonormal family; the
/// offset along each direction is solved so that every leaf pair lands at
/// exactly R / 2^{h^2}. Throws std::invalid_argument when infeasible.
std::pair<MixtureTree, Mixture> synthesize_tree(int levels, double scale, Index dim, double delta, RngKey key);

struct TreeReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

TreeReport validate_tree(const MixtureTree& tree, const Mixture& mixture);

struct ScheduleLevel {
  std::size_t node = 0;
  int height = 0;
  std::optional<double> t_lower;
  std::optional<double> t_upper;  // absent means +infinity (target is the root)
  double t_chosen = 0.0;
  bool gap_ok = false;
  std::string diagnostics;
};

/// Level l targets the l-th node on the leaf-to-root path. Level 1 is the
/// leaf itself (t_lower = 0); level l >= 2 uses
///   t_lower = ln w(f(u_{l-1}), f(u_l)) + ln(1/eps)
///   t_upper = ln Delta(f(u_l)) - ln 4 - 1/2 ln ln(R^2 / (eps^2 Delta^2)).
/// `k` is the largest prefix whose windows are nonempty and interleave.
struct CriticalSchedule {
  std::size_t leaf_class = 0;
  double epsilon = 0.0;
  std::vector<std::size_t> path;
  std::vector<ScheduleLevel> levels;  // every path node, scheduled or not
  std::size_t k = 0;

  std::vector<double> times() const;
  /// level,t_lower,t_upper,t_chosen,gap_ok
  std::string to_csv() const;
};

CriticalSchedule critical_schedule(const MixtureTree& tree, std::size_t leaf_class, double epsilon);

struct LevelVerification {
  std::size_t level = 0;  // 1-based
  double t_hat = 0.0;
  double inside_fraction = 0.0;  // share classified into f(u_l)
  std::vector<double> shares;    // per class plus unassigned
};

/// Runs the targeted reverse process from {leaf_class} at every scheduled
/// time and classifies the endpoints. Level l uses key.child(l).
std::vector<LevelVerification> verify_schedule_empirical(const MixtureTree& tree, const Mixture& mixture,
                                                         std::size_t leaf_class, const CriticalSchedule& schedule,
                                                         std::size_t n, double radius, RngKey key,
                                                         const TrajectoryConfig& base = {});

}  // namespace cwlab
