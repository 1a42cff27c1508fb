#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <span>
#include <vector>

#include "crowdsense/domain.hpp"

namespace crowdsense::behavior {

inline constexpr double kSpeedEpsilon = 1e-3;  // per frame
inline constexpr double kStdFloor = 1e-6;
inline constexpr std::size_t kFeatureDims = 7;

using Components = std::array<double, kFeatureDims>;

struct BehaviorFeature {
  Vec2 mean_velocity;
  double speed = 0.0;
  Vec2 heading;
  bool heading_degenerate = true;
  Vec2 goal_dir;
  bool goal_degenerate = true;
  Vec2 cluster_flow;

  /// Derives speed and heading from the velocity and unit-normalizes the
  /// goal direction.
  static BehaviorFeature from(Vec2 mean_velocity, Vec2 goal_offset);

  /// (v.x, v.y, speed, heading.x, heading.y, goal_dir.x, goal_dir.y)
  Components components() const;
};

/// z-scored components, tagged with the normalizer state that produced them.
struct FeatureVector {
  Components values{};
  std::uint64_t epoch = 0;
};

/// b^l: time average of the filtered velocity and goal offset over the
/// window. Throws EmptyWindow.
BehaviorFeature local_feature(std::span<const PedestrianState> window);

/// Mean velocity and mean goal direction of a set of features, re-derived.
BehaviorFeature average(std::span<const BehaviorFeature> features);

struct ClusterPoint {
  AgentId id;
  Vec2 position;
  BehaviorFeature feature;
};

struct ClusterOptions {
  int fixed_k = 0;  // 0 selects k automatically
  int max_k = 8;
  double neighbor_radius = 5.0;
  /// Automatic k is the smallest k whose mean squared distance to the
  /// centroid is at most this, in (position / neighbor_radius, heading) space.
  double spread_limit = 1.0;
  /// Smaller clusters are dissolved into the nearest remaining one.
  int min_cluster_size = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Cluster {
  int id = 0;
  std::vector<AgentId> members;  // sorted
  std::array<double, 4> centroid{};
  Vec2 mean_flow;
};

/// k-means over (position / neighbor_radius, heading) with seeded
/// k-means++ initialization. Points are processed in id order, so the result
/// does not depend on input order.
std::vector<Cluster> assign_clusters(std::span<const ClusterPoint> points,
                                     const ClusterOptions& options);

/// One frame's sample of b^g: mean over the cluster excluding `self`, or
/// `self` alone for a singleton.
BehaviorFeature cluster_sample(const AgentId& self, const Cluster& cluster,
                               const std::map<AgentId, BehaviorFeature>& locals);

/// b^g: average of per-frame cluster samples over the global window.
inline BehaviorFeature global_feature(std::span<const BehaviorFeature> samples) {
  return average(samples);
}

struct NormalizerOptions {
  int window = 125;     // frames of statistics kept
  int warmup = 25;      // frames before normalize() is allowed
  /// Std floors for velocity components (fraction of mean speed) and for
  /// direction components (absolute); kStdFloor always applies.
  double velocity_floor = 0.0;
  double direction_floor = 0.0;
};

/// Per-component mean and std of b^l over all agents in the last `window`
/// frames.
class Normalizer {
 public:
  explicit Normalizer(NormalizerOptions options = {});

  void add_frame(std::span<const BehaviorFeature> features);
  bool warmed_up() const { return frames_seen_ >= static_cast<std::uint64_t>(options_.warmup); }
  std::uint64_t epoch() const { return frames_seen_; }
  const Components& mean() const { return mean_; }
  const Components& stddev() const { return std_; }

  /// Throws NotWarmedUp.
  FeatureVector normalize(const BehaviorFeature& feature) const;

 private:
  struct Moments {
    double count = 0.0;
    Components mean{};
    Components m2{};
  };
  void recompute();

  NormalizerOptions options_;
  std::deque<Moments> frames_;
  std::uint64_t frames_seen_ = 0;
  Components mean_{};
  Components std_{};
};

inline FeatureVector normalize(const BehaviorFeature& f, const Normalizer& n) {
  return n.normalize(f);
}

enum class GlobalScope { Cluster, Crowd };

struct BehaviorConfig {
  int local_window = 25;    // W_l, frames
  int global_window = 125;  // W_g, frames
  GlobalScope scope = GlobalScope::Cluster;
  ClusterOptions clustering;
  double velocity_floor = 0.3;
  double direction_floor = 0.3;

  void validate() const;
};

struct AgentBehavior {
  AgentId id;
  Vec2 position;
  Vec2 velocity;
  BehaviorFeature local;
  BehaviorFeature global;
  FeatureVector bl;
  FeatureVector bg;
  int cluster = 0;
  bool scorable = false;  // full local window and a warmed-up normalizer
};

/// Per-frame feature learning over a stream of crowd beliefs.
class BehaviorEngine {
 public:
  explicit BehaviorEngine(BehaviorConfig config);

  const std::vector<AgentBehavior>& step(const CrowdState& crowd);
  const std::vector<Cluster>& clusters() const { return clusters_; }
  const Normalizer& normalizer() const { return normalizer_; }

 private:
  struct History {
    std::deque<PedestrianState> states;
    std::deque<BehaviorFeature> global_samples;
  };

  BehaviorConfig config_;
  Normalizer normalizer_;
  std::map<AgentId, History> history_;
  std::vector<Cluster> clusters_;
  std::vector<AgentBehavior> out_;
};

}  // namespace crowdsense::behavior
