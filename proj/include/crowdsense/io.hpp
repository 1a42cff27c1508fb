#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "crowdsense/anomaly.hpp"
#include "crowdsense/domain.hpp"
#include "crowdsense/evaluation.hpp"
#include "crowdsense/pipeline.hpp"

namespace crowdsense::io {

enum class Format { Csv, Jsonl };

/// "csv" or "jsonl". Throws ConfigError.
Format parse_format(const std::string& name);

struct TrajectoryRecord {
  Observation observation;
  std::optional<bool> label;
};

/// Pull parser over `frame,agent_id,x,y[,label]` CSV (header required) or
/// one JSON object per line. Records are validated as a stream. In CSV a
/// blank line is reported as an end-of-frame marker so a live producer can
/// close a frame without sending the next one.
class TrajectoryReader {
 public:
  TrajectoryReader(std::istream& in, Format format);

  struct Item {
    enum class Kind { Record, FrameEnd, End };
    Kind kind = Kind::End;
    TrajectoryRecord record;
  };

  /// Throws ParseError (1-based line) or StreamError.
  Item next();
  std::size_t line() const { return line_; }

 private:
  void read_header();

  std::istream& in_;
  Format format_;
  std::size_t line_ = 0;
  std::size_t index_ = 0;
  bool has_label_column_ = false;
  bool header_done_ = false;
  StreamValidator validator_;
};

struct Trajectories {
  std::vector<Observation> observations;
  std::vector<std::optional<bool>> labels;  // aligned with observations
};

Trajectories parse_trajectories(std::istream& in, Format format);
Trajectories parse_trajectories(const std::string& text, Format format);

/// Values use 9 significant digits. `labels` is empty or aligned.
void write_trajectories(std::ostream& out, std::span<const Observation> observations,
                        const std::vector<bool>& labels, Format format);

/// `frame,agent_id,label` with label 0 or 1.
void write_labels(std::ostream& out, std::span<const Observation> keys, const std::vector<bool>& labels);

struct LabelRecord {
  Frame frame = 0;
  AgentId agent_id;
  bool label = false;
};

std::vector<LabelRecord> parse_labels(std::istream& in);

/// `{"frame":..,"agent_id":"..","score":..,"threshold":..,"scope":"local|global"}`
std::string event_json(const anomaly::AnomalyEvent& event);

/// One line per scored agent: frame, agent_id, score, threshold, flagged,
/// event, scope (events only), and filtered x, y, vx, vy unless
/// `retain_events_only`.
std::string score_json(Frame frame, const FrameScore& score, double threshold,
                       const anomaly::AnomalyEvent* event, bool retain_events_only);

/// Records read back from detector output.
struct DetectorRecord {
  Frame frame = 0;
  AgentId agent_id;
  double score = 0.0;
  double threshold = 0.0;
  bool event = false;
};

struct DetectorOutput {
  bool verbose = false;  // per-agent score records rather than events only
  std::vector<DetectorRecord> records;
};

/// Reads either output style; the style is taken from the first record.
DetectorOutput parse_detector_output(std::istream& in);

/// `fpr,tpr,threshold`; the origin's threshold prints as inf.
void write_roc(std::ostream& out, std::span<const eval::RocPoint> roc);

/// `frame,seconds`
void write_timing(std::ostream& out, const eval::TimingReport& report);

/// Number rendering shared by the writers: printf("%.9g").
std::string format_number(double value);

}  // namespace crowdsense::io
