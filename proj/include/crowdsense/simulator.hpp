#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crowdsense/domain.hpp"
#include "crowdsense/orca.hpp"

namespace crowdsense::sim {

enum class ScriptKind { AgainstFlow, UTurn, SpeedOutlier, SuddenRun, PushAndRun };

/// Scripted misbehavior for one agent over frames [begin, end). AgainstFlow
/// and UTurn reverse the agent's goal (at the start, or at `begin`);
/// SpeedOutlier and SuddenRun scale its preferred speed by `multiplier`;
/// PushAndRun rushes the nearest agent for the first half of the range and
/// runs off for the second.
struct AnomalyScript {
  ScriptKind kind = ScriptKind::AgainstFlow;
  AgentId agent_id;
  Frame begin = 0;
  Frame end = 0;
  double multiplier = 1.0;
};

/// Unlabeled change of intent: listed agents reverse their goals at `frame`.
struct GoalChange {
  Frame frame = 0;
  std::vector<AgentId> agents;
};

struct AgentSpec {
  AgentId id;
  Vec2 start;
  Vec2 goal;
  orca::AgentParams params;
};

struct Scenario {
  std::string name;
  std::vector<AgentSpec> agents;  // sorted by id
  Frame duration = 0;
  std::vector<AnomalyScript> scripts;
  std::vector<GoalChange> goal_changes;
  BoundingBox arena;
  double fps = 25.0;
  /// Std of the per-frame preferred-velocity perturbation, as a fraction of
  /// preferred speed.
  double heading_noise = 0.1;

  /// Throws ConfigError on overlapping starts or invalid scripts.
  void validate() const;
};

struct ScenarioOverrides {
  int agents = 0;      // 0 keeps the preset default
  Frame duration = 0;  // 0 keeps the preset default
  double fps = 25.0;
  std::uint64_t seed = 0;
  double heading_noise = 0.1;
  double speed_multiplier = 3.0;  // SpeedOutlier / SuddenRun factor
};

/// Preset names, in the order listed by the CLI.
std::vector<std::string> preset_names();

/// Deterministic in (preset, overrides). Throws UnknownPreset.
Scenario build_scenario(const std::string& preset, const ScenarioOverrides& overrides = {});

struct Simulation {
  std::vector<Observation> trajectories;  // every agent every frame, (frame, id) order
  std::vector<bool> labels;               // aligned with trajectories
};

/// Runs the ORCA crowd; `seed` drives the preferred-velocity perturbation.
Simulation simulate(const Scenario& scenario, std::uint64_t seed);

struct NoiseModel {
  double position_sigma = 0.0;
  double dropout_prob = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Isotropic Gaussian jitter plus independent dropout.
std::vector<Observation> corrupt(std::span<const Observation> trajectories, const NoiseModel& noise);

}  // namespace crowdsense::sim
