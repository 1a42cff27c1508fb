#pragma once

#include <deque>
#include <map>
#include <span>
#include <vector>

#include "crowdsense/behavior.hpp"
#include "crowdsense/domain.hpp"

namespace crowdsense::anomaly {

enum class Scope { Local, Global };

struct DetectorConfig {
  double threshold = 3.0;  // normalized feature units
  int hysteresis_m = 3;
  int hysteresis_n = 5;
  double global_fraction = 0.5;

  void validate() const;
};

struct AnomalyEvent {
  Frame frame = 0;
  AgentId agent_id;
  double score = 0.0;
  double threshold_used = 0.0;
  Scope scope = Scope::Local;
};

/// Euclidean distance between b^l and b^g. Throws NormalizationMismatch when
/// the two vectors come from different normalizer states.
double anomaly_score(const behavior::FeatureVector& bl, const behavior::FeatureVector& bg);

/// Batched anomaly_score over aligned lists.
std::vector<double> anomaly_scores(std::span<const behavior::FeatureVector> bl,
                                   std::span<const behavior::FeatureVector> bg);

struct AgentScore {
  AgentId agent_id;
  double score = 0.0;
};

struct Detection {
  std::vector<AnomalyEvent> events;
  std::vector<bool> flagged;  // m-of-n state, aligned with the input scores
};

/// Marks every event Global when the flagged share of the crowd reaches
/// global_fraction, otherwise Local.
void classify_scope(std::span<AnomalyEvent> events, std::size_t crowd_size,
                    const DetectorConfig& config);

/// Per-agent m-of-n hysteresis. An agent is flagged while at least m of its
/// last n scores exceeded the threshold; an event is emitted for a flagged
/// agent whose current score also exceeds it.
class Detector {
 public:
  explicit Detector(DetectorConfig config);

  /// Agents absent from `scores` lose their history.
  Detection detect(Frame frame, std::span<const AgentScore> scores, std::size_t crowd_size);

  const DetectorConfig& config() const { return config_; }

 private:
  DetectorConfig config_;
  std::map<AgentId, std::deque<bool>> recent_;
};

}  // namespace crowdsense::anomaly
