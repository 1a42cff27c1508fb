#pragma once

#include <deque>
#include <map>
#include <span>
#include <vector>

#include "crowdsense/domain.hpp"
#include "crowdsense/orca.hpp"

namespace crowdsense::filter {

/// Standard deviations; process terms are per frame.
struct NoiseParams {
  double process_sigma_pos = 0.01;
  double process_sigma_vel = 0.05;
  double process_sigma_goal = 0.1;
  double meas_sigma = 0.05;

  void validate() const;
};

struct FilterConfig {
  int goal_window = 10;          // W_goal, frames
  double goal_lookahead = 25.0;  // tau_g, frames
  int coast_limit = 10;          // frames a track may go unobserved
  /// Pull of the preferred velocity from the current velocity towards the
  /// goal heading at the current speed. 0 gives a constant-velocity model.
  double goal_gain = 0.2;
  /// Speed cap used inside the filter, scene units per frame. Kept separate
  /// from the walkers' max_speed so fast agents are not clipped.
  double max_speed = 0.2;

  void validate() const;
};

/// g = p_latest + mean per-frame displacement over the last goal_window
/// samples times goal_lookahead. Throws InsufficientHistory below 2 samples.
Vec2 infer_goal(std::span<const Vec2> recent, const FilterConfig& config);

/// Everything the motion map needs besides the belief itself.
struct MotionContext {
  std::span<const orca::Kinematics> neighbors;  // frame-start means, self excluded
  orca::AgentParams params;
  FilterConfig config;
  double dt = 1.0;
};

/// Deterministic one-step state transition on the stacked mean.
StateVector motion_map(const StateVector& x, const MotionContext& ctx);

/// Symmetrizes, then lifts negative eigenvalues to zero.
StateCovariance repair_covariance(const StateCovariance& c);

PedestrianState predict(const PedestrianState& belief, const MotionContext& ctx,
                        const NoiseParams& noise);

/// Position-only measurement update (Joseph form).
PedestrianState update(const PedestrianState& belief, Vec2 z, const NoiseParams& noise);

/// Online multi-track estimator. Feed frames in increasing order; skipped
/// frames are coasted through as empty frames.
class Tracker {
 public:
  Tracker(orca::AgentParams params, NoiseParams noise, FilterConfig config);

  /// Observations must all carry `frame` and be validated.
  const CrowdState& estimate_frame(Frame frame, std::span<const Observation> observations);

  const CrowdState& state() const { return crowd_; }
  /// Frames since each live track was created, current frame included.
  int track_age(const AgentId& id) const;

 private:
  struct Track {
    Frame first_frame = 0;
    int observed = 0;
    int frames_since_goal = 0;
    std::deque<std::pair<Frame, Vec2>> recent;  // raw observations, last goal_window
  };

  void step(Frame frame, std::span<const Observation> observations);
  void start_track(const Observation& z);
  void refresh_goal(PedestrianState& s, const Track& t) const;

  orca::AgentParams params_;
  NoiseParams noise_;
  FilterConfig config_;
  CrowdState crowd_;
  std::map<AgentId, Track> tracks_;
};

}  // namespace crowdsense::filter
