#include "crowdsense/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace crowdsense {

PipelineConfig PipelineConfig::defaults_for_fps(double fps) {
  if (!(fps > 0.0)) throw ConfigError("fps must be > 0");
  PipelineConfig c;
  c.agent = orca::AgentParams::defaults_for_fps(fps);
  c.filter.goal_lookahead = fps;
  c.filter.max_speed = 5.0 / fps;
  c.behavior.local_window = std::max(1, static_cast<int>(std::lround(fps)));
  c.behavior.global_window = std::max(1, static_cast<int>(std::lround(5.0 * fps)));
  c.behavior.clustering.neighbor_radius = c.agent.neighbor_dist;
  return c;
}

void PipelineConfig::validate() const {
  agent.validate();
  noise.validate();
  filter.validate();
  behavior.validate();
  detector.validate();
}

Pipeline::Pipeline(PipelineConfig config)
    : config_(config),
      tracker_(config.agent, config.noise, config.filter),
      behavior_(config.behavior),
      detector_(config.detector) {
  config_.validate();
}

FrameResult Pipeline::process(Frame frame, std::span<const Observation> observations) {
  const auto start = std::chrono::steady_clock::now();

  const CrowdState& crowd = tracker_.estimate_frame(frame, observations);
  const auto& agents = behavior_.step(crowd);

  std::vector<behavior::FeatureVector> bl;
  std::vector<behavior::FeatureVector> bg;
  std::vector<const behavior::AgentBehavior*> scored;
  for (const auto& a : agents) {
    if (!a.scorable) continue;
    bl.push_back(a.bl);
    bg.push_back(a.bg);
    scored.push_back(&a);
  }
  const auto values = anomaly::anomaly_scores(bl, bg);

  std::vector<anomaly::AgentScore> scores;
  scores.reserve(scored.size());
  for (std::size_t i = 0; i < scored.size(); ++i) scores.push_back({scored[i]->id, values[i]});
  auto detection = detector_.detect(frame, scores, crowd.states.size());

  FrameResult result;
  result.frame = frame;
  result.crowd_size = crowd.states.size();
  result.events = std::move(detection.events);
  result.scores.reserve(scored.size());
  for (std::size_t i = 0; i < scored.size(); ++i) {
    result.scores.push_back(
        {scored[i]->id, values[i], detection.flagged[i], scored[i]->position, scored[i]->velocity});
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace crowdsense
