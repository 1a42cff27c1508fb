#pragma once

#include <span>
#include <vector>

#include "crowdsense/anomaly.hpp"
#include "crowdsense/behavior.hpp"
#include "crowdsense/filter.hpp"
#include "crowdsense/orca.hpp"

namespace crowdsense {

/// Fully resolved per-frame settings for the detection pipeline.
struct PipelineConfig {
  orca::AgentParams agent;
  filter::NoiseParams noise;
  filter::FilterConfig filter;
  behavior::BehaviorConfig behavior;
  anomaly::DetectorConfig detector;

  /// Defaults with every per-second quantity converted through `fps`.
  static PipelineConfig defaults_for_fps(double fps);
  void validate() const;
};

struct FrameScore {
  AgentId agent_id;
  double score = 0.0;
  bool flagged = false;
  Vec2 position;  // filtered
  Vec2 velocity;  // filtered, per frame
};

struct FrameResult {
  Frame frame = 0;
  std::size_t crowd_size = 0;
  std::vector<FrameScore> scores;  // scorable agents, id order
  std::vector<anomaly::AnomalyEvent> events;
  double seconds = 0.0;  // state estimation + features + detection
};

/// Online detector: one call per frame, frames strictly increasing. Output
/// for frame t depends only on observations up to t.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  FrameResult process(Frame frame, std::span<const Observation> observations);

  const CrowdState& crowd() const { return tracker_.state(); }

 private:
  PipelineConfig config_;
  filter::Tracker tracker_;
  behavior::BehaviorEngine behavior_;
  anomaly::Detector detector_;
};

}  // namespace crowdsense
