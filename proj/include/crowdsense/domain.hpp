#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>

#include "crowdsense/errors.hpp"
#include "crowdsense/geometry.hpp"

namespace crowdsense {

using AgentId = std::string;
using Frame = std::int64_t;

struct Observation {
  Frame frame = 0;
  AgentId agent_id;
  Vec2 position;

  bool operator==(const Observation&) const = default;
};

/// Covariance over the stacked state (p.x, p.y, v.x, v.y, g.x, g.y).
using StateCovariance = Eigen::Matrix<double, 6, 6>;
using StateVector = Eigen::Matrix<double, 6, 1>;

/// Filtered belief about one pedestrian: position, per-frame velocity and
/// intermediate goal, with joint uncertainty.
struct PedestrianState {
  Vec2 position;
  Vec2 velocity;
  Vec2 goal;
  StateCovariance covariance = StateCovariance::Identity();

  StateVector mean() const;
  static PedestrianState from_mean(const StateVector& x, const StateCovariance& cov);
};

struct TrackStatus {
  enum class Kind { Active, Coasting, Lost };

  Kind kind = Kind::Active;
  int missed_frames = 0;  // in [1, coast_limit] while Coasting

  static TrackStatus active() { return {Kind::Active, 0}; }
  static TrackStatus coasting(int missed) { return {Kind::Coasting, missed}; }
  static TrackStatus lost() { return {Kind::Lost, 0}; }

  bool operator==(const TrackStatus&) const = default;
};

/// Belief over the whole crowd at one frame. Lost tracks are not kept.
struct CrowdState {
  Frame frame = -1;
  std::map<AgentId, PedestrianState> states;
  std::map<AgentId, TrackStatus> statuses;
};

/// Incremental form of validate_stream for inputs that arrive one
/// observation at a time.
class StreamValidator {
 public:
  /// Throws StreamError; `index` is the observation's position in the stream.
  void check(const Observation& obs, std::size_t index);

 private:
  Frame current_frame_ = 0;
  bool started_ = false;
  std::unordered_set<AgentId> seen_in_frame_;
};

/// Checks finite coordinates, non-decreasing frames and one observation per
/// (frame, agent). Returns the input unchanged.
std::vector<Observation> validate_stream(std::vector<Observation> observations);

struct BoundingBox {
  Vec2 min;
  Vec2 max;
};

struct SceneStatistics {
  double mean_nn_spacing = 0.0;
  BoundingBox bounds;
  double mean_speed = 0.0;  // scene units per frame
};

/// Needs at least two distinct agents and two distinct frames.
SceneStatistics scene_statistics(std::span<const Observation> window);

}  // namespace crowdsense
