#include "crowdsense/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "crowdsense/kernels.hpp"

namespace crowdsense {

namespace {

std::string describe(StreamError::Kind kind, std::size_t index, Frame frame,
                     const std::string& agent) {
  switch (kind) {
    case StreamError::Kind::DuplicateObservation:
      return "duplicate observation for agent '" + agent + "' at frame " + std::to_string(frame);
    case StreamError::Kind::NonMonotoneFrame:
      return "frame index decreases at observation " + std::to_string(index);
    case StreamError::Kind::NonFiniteCoordinate:
      return "non-finite coordinate at observation " + std::to_string(index);
  }
  return "invalid stream";
}

}  // namespace

StreamError::StreamError(Kind kind, std::size_t index, std::int64_t frame, std::string agent_id)
    : Error(describe(kind, index, frame, agent_id)),
      kind_(kind),
      index_(index),
      frame_(frame),
      agent_id_(std::move(agent_id)) {}

StateVector PedestrianState::mean() const {
  StateVector x;
  x << position.x, position.y, velocity.x, velocity.y, goal.x, goal.y;
  return x;
}

PedestrianState PedestrianState::from_mean(const StateVector& x, const StateCovariance& cov) {
  PedestrianState s;
  s.position = {x(0), x(1)};
  s.velocity = {x(2), x(3)};
  s.goal = {x(4), x(5)};
  s.covariance = cov;
  return s;
}

void StreamValidator::check(const Observation& obs, std::size_t index) {
  if (!obs.position.finite()) {
    throw StreamError(StreamError::Kind::NonFiniteCoordinate, index, obs.frame, obs.agent_id);
  }
  if (obs.frame < 0 || (started_ && obs.frame < current_frame_)) {
    throw StreamError(StreamError::Kind::NonMonotoneFrame, index, obs.frame, obs.agent_id);
  }
  if (!started_ || obs.frame != current_frame_) {
    started_ = true;
    current_frame_ = obs.frame;
    seen_in_frame_.clear();
  }
  if (!seen_in_frame_.insert(obs.agent_id).second) {
    throw StreamError(StreamError::Kind::DuplicateObservation, index, obs.frame, obs.agent_id);
  }
}

std::vector<Observation> validate_stream(std::vector<Observation> observations) {
  StreamValidator validator;
  for (std::size_t i = 0; i < observations.size(); ++i) validator.check(observations[i], i);
  return observations;
}

SceneStatistics scene_statistics(std::span<const Observation> window) {
  std::map<Frame, std::vector<const Observation*>> by_frame;
  std::map<AgentId, std::vector<const Observation*>> by_agent;
  for (const auto& obs : window) {
    by_frame[obs.frame].push_back(&obs);
    by_agent[obs.agent_id].push_back(&obs);
  }
  if (by_agent.size() < 2 || by_frame.size() < 2) {
    throw InsufficientData("scene statistics need at least 2 agents and 2 frames");
  }

  SceneStatistics stats;
  stats.bounds.min = {std::numeric_limits<double>::infinity(),
                      std::numeric_limits<double>::infinity()};
  stats.bounds.max = -stats.bounds.min;
  for (const auto& obs : window) {
    stats.bounds.min = {std::min(stats.bounds.min.x, obs.position.x),
                        std::min(stats.bounds.min.y, obs.position.y)};
    stats.bounds.max = {std::max(stats.bounds.max.x, obs.position.x),
                        std::max(stats.bounds.max.y, obs.position.y)};
  }

  // Nearest-neighbor spacing, averaged over every (frame, agent) that has a
  // neighbor in the same frame.
  double nn_sum = 0.0;
  std::size_t nn_count = 0;
  std::vector<double> xs, ys, d2;
  for (const auto& [frame, members] : by_frame) {
    if (members.size() < 2) continue;
    xs.resize(members.size());
    ys.resize(members.size());
    d2.resize(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      xs[i] = members[i]->position.x;
      ys[i] = members[i]->position.y;
    }
    for (std::size_t i = 0; i < members.size(); ++i) {
      kernels::squared_distances(xs, ys, members[i]->position, d2);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < members.size(); ++j) {
        if (j != i) best = std::min(best, d2[j]);
      }
      nn_sum += std::sqrt(best);
      ++nn_count;
    }
  }
  stats.mean_nn_spacing = nn_count > 0 ? nn_sum / static_cast<double>(nn_count) : 0.0;

  double speed_sum = 0.0;
  std::size_t speed_count = 0;
  for (auto& [agent, track] : by_agent) {
    std::sort(track.begin(), track.end(),
              [](const Observation* a, const Observation* b) { return a->frame < b->frame; });
    for (std::size_t i = 1; i < track.size(); ++i) {
      const auto gap = static_cast<double>(track[i]->frame - track[i - 1]->frame);
      speed_sum += norm(track[i]->position - track[i - 1]->position) / gap;
      ++speed_count;
    }
  }
  stats.mean_speed = speed_count > 0 ? speed_sum / static_cast<double>(speed_count) : 0.0;
  return stats;
}

}  // namespace crowdsense
