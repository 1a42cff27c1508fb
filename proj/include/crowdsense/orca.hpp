#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "crowdsense/geometry.hpp"

namespace crowdsense::orca {

/// Per-agent navigation parameters. Time is measured in frames, so speeds
/// are scene units per frame and the horizon is a frame count.
struct AgentParams {
  double radius = 0.3;
  double max_speed = 1.6 / 25.0;
  double pref_speed = 1.0 / 25.0;
  double time_horizon = 2.0 * 25.0;
  double neighbor_dist = 5.0;
  std::size_t max_neighbors = 10;

  /// Defaults expressed per second, converted with the frame rate.
  static AgentParams defaults_for_fps(double fps);

  /// Throws ConfigError when a field violates its range.
  void validate() const;
};

/// Velocity-space constraint: v is admissible iff dot(v - point, normal) >= 0.
struct HalfPlane {
  Vec2 point;
  Vec2 normal;

  bool contains(Vec2 v, double tolerance = 0.0) const {
    return dot(v - point, normal) >= -tolerance;
  }
  /// Boundary direction with the admissible side on its left.
  Vec2 direction() const { return {normal.y, -normal.x}; }
};

struct Kinematics {
  Vec2 position;
  Vec2 velocity;
  double radius = 0.3;
};

/// Goal-seeking velocity ignoring other agents.
Vec2 preferred_velocity(Vec2 position, Vec2 goal, const AgentParams& params);

inline constexpr double kGoalEpsilon = 1e-9;

/// Indices of at most max_neighbors agents within neighbor_dist of `self`,
/// nearest first; ties broken by index, so callers order crowds by agent id.
std::vector<std::size_t> select_neighbors(std::span<const Kinematics> crowd, std::size_t self,
                                          const AgentParams& params);

/// One reciprocal half-plane per neighbor, in the order given. `dt` is the
/// step used for already-overlapping pairs.
std::vector<HalfPlane> orca_halfplanes(const Kinematics& self,
                                       std::span<const Kinematics> neighbors,
                                       const AgentParams& params, double dt = 1.0);

/// Velocity closest to `v_pref` inside every half-plane and the max_speed
/// disc; when the constraints conflict, the velocity that minimizes the
/// largest violation.
Vec2 solve_velocity(std::span<const HalfPlane> halfplanes, Vec2 v_pref, double max_speed);

struct StepInput {
  std::span<const Kinematics> crowd;
  std::span<const AgentParams> params;
  std::span<const Vec2> preferred;  // one preferred velocity per agent
  double dt = 1.0;
  bool guard = true;
};

/// Jacobi update: every new velocity is solved against the frame-start
/// snapshot, then positions integrate. With `guard` set, velocities of pairs
/// that would end the step interpenetrating are scaled back to their
/// time of contact, so a non-overlapping crowd stays non-overlapping even
/// when the linear program is infeasible.
std::vector<Kinematics> step_crowd(const StepInput& input);

/// Scales velocities in place (factors in [0, 1]) until no pair ends the
/// step closer than both its combined radius and its starting distance.
void guard_step(std::span<const Kinematics> start, std::span<Vec2> velocities, double dt);

}  // namespace crowdsense::orca
