#include "crowdsense/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace crowdsense::io {

namespace {

using nlohmann::json;

constexpr const char* kHeader = "frame,agent_id,x,y";
constexpr const char* kHeaderLabeled = "frame,agent_id,x,y,label";
constexpr const char* kLabelsHeader = "frame,agent_id,label";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

Frame to_frame(std::string_view s, std::size_t line) {
  Frame v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty()) {
    throw ParseError(line, "bad frame '" + std::string(s) + "'");
  }
  return v;
}

double to_double(std::string_view s, std::size_t line, const char* what) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty()) {
    throw ParseError(line, std::string("bad ") + what + " '" + std::string(s) + "'");
  }
  return v;
}

bool to_bool(std::string_view s, std::size_t line) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw ParseError(line, "bad label '" + std::string(s) + "'");
}

AgentId to_id(std::string_view s, std::size_t line) {
  if (s.empty()) throw ParseError(line, "empty agent_id");
  return AgentId(s);
}

const json& field(const json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(line, std::string("missing field '") + key + "'");
  return *it;
}

json parse_object(const std::string& text, std::size_t line) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError(line, "malformed JSON");
  if (!j.is_object()) throw ParseError(line, "expected a JSON object");
  return j;
}

double json_number(const json& obj, const char* key, std::size_t line) {
  const json& v = field(obj, key, line);
  if (!v.is_number()) throw ParseError(line, std::string("field '") + key + "' is not a number");
  return v.get<double>();
}

Frame json_frame(const json& obj, std::size_t line) {
  const json& v = field(obj, "frame", line);
  if (!v.is_number_integer()) throw ParseError(line, "field 'frame' is not an integer");
  return v.get<Frame>();
}

AgentId json_id(const json& obj, std::size_t line) {
  const json& v = field(obj, "agent_id", line);
  if (!v.is_string()) throw ParseError(line, "field 'agent_id' is not a string");
  return to_id(v.get<std::string>(), line);
}

bool json_bool(const json& obj, const char* key, std::size_t line) {
  const json& v = field(obj, key, line);
  if (!v.is_boolean()) throw ParseError(line, std::string("field '") + key + "' is not a boolean");
  return v.get<bool>();
}

void check_csv_id(const AgentId& id) {
  if (id.empty() || id.find_first_of(",\n\r") != AgentId::npos) {
    throw ConfigError("agent_id '" + id + "' cannot be written as CSV");
  }
}

}  // namespace

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

Format parse_format(const std::string& name) {
  if (name == "csv") return Format::Csv;
  if (name == "jsonl") return Format::Jsonl;
  throw ConfigError("unknown format '" + name + "' (csv or jsonl)");
}

TrajectoryReader::TrajectoryReader(std::istream& in, Format format) : in_(in), format_(format) {}

void TrajectoryReader::read_header() {
  header_done_ = true;
  if (format_ != Format::Csv) return;
  std::string text;
  if (!std::getline(in_, text)) throw ParseError(1, "missing header");
  ++line_;
  const auto header = trim(text);
  if (header == kHeaderLabeled) {
    has_label_column_ = true;
  } else if (header != kHeader) {
    throw ParseError(line_, "expected header '" + std::string(kHeader) + "[,label]'");
  }
}

TrajectoryReader::Item TrajectoryReader::next() {
  if (!header_done_) read_header();
  std::string text;
  if (!std::getline(in_, text)) return {};
  ++line_;
  if (trim(text).empty()) return {Item::Kind::FrameEnd, {}};

  TrajectoryRecord r;
  if (format_ == Format::Csv) {
    const auto cells = split(text);
    const std::size_t want = has_label_column_ ? 5 : 4;
    if (cells.size() != want) {
      throw ParseError(line_, "expected " + std::to_string(want) + " fields, got " +
                                  std::to_string(cells.size()));
    }
    r.observation.frame = to_frame(cells[0], line_);
    r.observation.agent_id = to_id(cells[1], line_);
    r.observation.position = {to_double(cells[2], line_, "x"), to_double(cells[3], line_, "y")};
    if (has_label_column_) r.label = to_bool(cells[4], line_);
  } else {
    const json j = parse_object(text, line_);
    r.observation.frame = json_frame(j, line_);
    r.observation.agent_id = json_id(j, line_);
    r.observation.position = {json_number(j, "x", line_), json_number(j, "y", line_)};
    if (j.contains("label")) r.label = json_bool(j, "label", line_);
  }
  try {
    validator_.check(r.observation, index_++);
  } catch (const StreamError& e) {
    throw ParseError(line_, e.what());
  }
  return {Item::Kind::Record, std::move(r)};
}

Trajectories parse_trajectories(std::istream& in, Format format) {
  TrajectoryReader reader(in, format);
  Trajectories out;
  while (true) {
    auto item = reader.next();
    if (item.kind == TrajectoryReader::Item::Kind::End) break;
    if (item.kind == TrajectoryReader::Item::Kind::FrameEnd) continue;
    out.observations.push_back(std::move(item.record.observation));
    out.labels.push_back(item.record.label);
  }
  return out;
}

Trajectories parse_trajectories(const std::string& text, Format format) {
  std::istringstream in(text);
  return parse_trajectories(in, format);
}

void write_trajectories(std::ostream& out, std::span<const Observation> observations,
                        const std::vector<bool>& labels, Format format) {
  if (!labels.empty() && labels.size() != observations.size()) {
    throw std::invalid_argument("labels must be empty or aligned with observations");
  }
  const bool labeled = !labels.empty();
  if (format == Format::Csv) {
    out << (labeled ? kHeaderLabeled : kHeader) << '\n';
    for (std::size_t i = 0; i < observations.size(); ++i) {
      const auto& o = observations[i];
      check_csv_id(o.agent_id);
      out << o.frame << ',' << o.agent_id << ',' << format_number(o.position.x) << ','
          << format_number(o.position.y);
      if (labeled) out << ',' << (labels[i] ? 1 : 0);
      out << '\n';
    }
    return;
  }
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& o = observations[i];
    out << "{\"frame\":" << o.frame << ",\"agent_id\":" << json(o.agent_id).dump()
        << ",\"x\":" << format_number(o.position.x) << ",\"y\":" << format_number(o.position.y);
    if (labeled) out << ",\"label\":" << (labels[i] ? "true" : "false");
    out << "}\n";
  }
}

void write_labels(std::ostream& out, std::span<const Observation> keys, const std::vector<bool>& labels) {
  if (keys.size() != labels.size()) throw std::invalid_argument("labels must align with keys");
  out << kLabelsHeader << '\n';
  for (std::size_t i = 0; i < keys.size(); ++i) {
    check_csv_id(keys[i].agent_id);
    out << keys[i].frame << ',' << keys[i].agent_id << ',' << (labels[i] ? 1 : 0) << '\n';
  }
}

std::vector<LabelRecord> parse_labels(std::istream& in) {
  std::string text;
  std::size_t line = 0;
  if (!std::getline(in, text)) throw ParseError(1, "missing header");
  ++line;
  if (trim(text) != kLabelsHeader) {
    throw ParseError(line, "expected header '" + std::string(kLabelsHeader) + "'");
  }
  std::vector<LabelRecord> out;
  while (std::getline(in, text)) {
    ++line;
    if (trim(text).empty()) continue;
    const auto cells = split(text);
    if (cells.size() != 3) throw ParseError(line, "expected 3 fields");
    out.push_back({to_frame(cells[0], line), to_id(cells[1], line), to_bool(cells[2], line)});
  }
  return out;
}

std::string event_json(const anomaly::AnomalyEvent& e) {
  std::string s = "{\"frame\":" + std::to_string(e.frame) + ",\"agent_id\":" + json(e.agent_id).dump() +
                  ",\"score\":" + format_number(e.score) +
                  ",\"threshold\":" + format_number(e.threshold_used) + ",\"scope\":\"" +
                  (e.scope == anomaly::Scope::Global ? "global" : "local") + "\"}";
  return s;
}

std::string score_json(Frame frame, const FrameScore& score, double threshold,
                       const anomaly::AnomalyEvent* event, bool retain_events_only) {
  std::string s = "{\"frame\":" + std::to_string(frame) + ",\"agent_id\":" + json(score.agent_id).dump() +
                  ",\"score\":" + format_number(score.score) + ",\"threshold\":" + format_number(threshold) +
                  ",\"flagged\":" + (score.flagged ? "true" : "false") +
                  ",\"event\":" + (event ? "true" : "false");
  if (event) s += std::string(",\"scope\":\"") + (event->scope == anomaly::Scope::Global ? "global" : "local") + "\"";
  if (!retain_events_only) {
    s += ",\"x\":" + format_number(score.position.x) + ",\"y\":" + format_number(score.position.y) +
         ",\"vx\":" + format_number(score.velocity.x) + ",\"vy\":" + format_number(score.velocity.y);
  }
  return s + "}";
}

DetectorOutput parse_detector_output(std::istream& in) {
  DetectorOutput out;
  std::string text;
  std::size_t line = 0;
  bool first = true;
  while (std::getline(in, text)) {
    ++line;
    if (trim(text).empty()) continue;
    const json j = parse_object(text, line);
    const bool verbose = j.contains("flagged");
    if (first) {
      out.verbose = verbose;
      first = false;
    } else if (verbose != out.verbose) {
      throw ParseError(line, "mixes event records and score records");
    }
    DetectorRecord r;
    r.frame = json_frame(j, line);
    r.agent_id = json_id(j, line);
    r.score = json_number(j, "score", line);
    r.threshold = json_number(j, "threshold", line);
    if (!std::isfinite(r.score)) throw ParseError(line, "non-finite score");
    r.event = verbose ? json_bool(j, "event", line) : true;
    out.records.push_back(std::move(r));
  }
  return out;
}

void write_roc(std::ostream& out, std::span<const eval::RocPoint> roc) {
  out << "fpr,tpr,threshold\n";
  for (const auto& p : roc) {
    out << format_number(p.fpr) << ',' << format_number(p.tpr) << ','
        << (std::isinf(p.threshold) ? std::string("inf") : format_number(p.threshold)) << '\n';
  }
}

void write_timing(std::ostream& out, const eval::TimingReport& report) {
  out << "frame,seconds\n";
  for (std::size_t i = 0; i < report.samples.size(); ++i) {
    out << i << ',' << format_number(report.samples[i]) << '\n';
  }
}

}  // namespace crowdsense::io
