#pragma once

#include <span>
#include <vector>

#include "crowdsense/domain.hpp"
#include "crowdsense/pipeline.hpp"

namespace crowdsense::eval {

struct LabeledScore {
  Frame frame = 0;
  AgentId agent_id;
  double score = 0.0;
  bool label = false;
};

/// Operating point: predict positive when score >= threshold.
struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // +inf for the origin
};

struct Roc {
  std::vector<RocPoint> points;  // (0,0) first, (1,1) last
  double auc = 0.0;
};

/// One step per distinct score, equal scores grouped; trapezoidal AUC.
/// Throws DegenerateLabels unless both classes are present.
Roc roc_curve(std::span<const LabeledScore> scores);

/// Linear interpolation of the crossing fpr = 1 - tpr.
double eer(std::span<const RocPoint> roc);

/// (TP + TN) / total with positives predicted by score > threshold.
double accuracy_at(std::span<const LabeledScore> scores, double threshold);

struct Metrics {
  double auc = 0.0;
  double accuracy = 0.0;
  double eer = 0.0;
  std::vector<RocPoint> roc;
};

Metrics evaluate(std::span<const LabeledScore> scores, double threshold);

/// Event-level matching. Each maximal run of consecutive labeled frames of
/// one agent is an episode; an episode is detected when an event for that
/// agent falls within `tolerance` frames of it, and an event is correct when
/// it falls within `tolerance` frames of some episode of its agent.
struct EventMatch {
  std::size_t episodes = 0;
  std::size_t detected = 0;
  std::size_t events = 0;
  std::size_t correct_events = 0;
  double recall = 0.0;     // detected / episodes, 0 without episodes
  double precision = 0.0;  // correct / events, 0 without events
};

/// `labels` carries the ground truth; its scores are ignored.
EventMatch match_events(std::span<const LabeledScore> labels,
                        std::span<const anomaly::AnomalyEvent> events, Frame tolerance = 12);

struct TimingReport {
  std::vector<double> samples;  // seconds per frame
  double median = 0.0;
  double p95 = 0.0;
  double max = 0.0;

  /// Throws InsufficientData on an empty sample set.
  static TimingReport from(std::vector<double> samples);
};

/// Runs a fresh pipeline over frames [0, frame_count) of a frame-ordered
/// stream, one sample per frame including empty ones.
TimingReport measure_blt(const PipelineConfig& config, std::span<const Observation> stream,
                         Frame frame_count);

}  // namespace crowdsense::eval
