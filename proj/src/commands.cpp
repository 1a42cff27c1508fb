#include "crowdsense/commands.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "crowdsense/pipeline.hpp"
#include "crowdsense/simulator.hpp"

namespace crowdsense::cli {

namespace {

using Key = std::pair<Frame, AgentId>;

void emit(std::ostream& out, const FrameResult& r, const DetectOptions& options, double threshold) {
  if (!options.verbose_scores) {
    for (const auto& e : r.events) out << io::event_json(e) << '\n';
  } else {
    std::map<AgentId, const anomaly::AnomalyEvent*> events;
    for (const auto& e : r.events) events[e.agent_id] = &e;
    for (const auto& s : r.scores) {
      const auto it = events.find(s.agent_id);
      out << io::score_json(r.frame, s, threshold, it == events.end() ? nullptr : it->second,
                            options.retain_events_only)
          << '\n';
    }
  }
  out.flush();
}

std::string describe(const std::vector<Key>& missing, std::size_t total) {
  std::ostringstream s;
  s << total << " detector record(s) have no label:";
  for (const auto& [frame, id] : missing) s << " (" << frame << ", " << id << ")";
  if (total > missing.size()) s << " ...";
  return s.str();
}

}  // namespace

DetectSummary run_detect(std::istream& in, std::ostream& out, const DetectOptions& options) {
  const PipelineConfig cfg = options.config.pipeline();
  Pipeline pipeline(cfg);
  io::TrajectoryReader reader(in, options.format);
  DetectSummary summary;

  std::vector<Observation> pending;
  const auto flush = [&] {
    if (pending.empty()) return;
    const auto r = pipeline.process(pending.front().frame, pending);
    summary.frames += 1;
    summary.events += r.events.size();
    emit(out, r, options, cfg.detector.threshold);
    pending.clear();
  };

  while (true) {
    auto item = reader.next();
    using Kind = io::TrajectoryReader::Item::Kind;
    if (item.kind == Kind::End) break;
    if (item.kind == Kind::FrameEnd) {
      flush();
      continue;
    }
    const Observation& obs = item.record.observation;
    if (!pending.empty() && obs.frame != pending.front().frame) flush();
    summary.observations += 1;
    pending.push_back(std::move(item.record.observation));
  }
  flush();
  return summary;
}

void run_simulate(const SimulateOptions& options, std::ostream& trajectories, std::ostream* labels) {
  const auto settings = options.config.scenario();
  const auto scenario = sim::build_scenario(options.preset, settings.overrides);
  const auto simulation = sim::simulate(scenario, derive_seed(options.config.seed(), 1));
  const auto observed = sim::corrupt(simulation.trajectories, settings.noise);
  io::write_trajectories(trajectories, observed, {}, options.format);
  if (labels) {
    io::write_labels(*labels, simulation.trajectories, simulation.labels);
  }
}

EvalResult run_eval(std::istream& detections, std::istream& labels, const EvalOptions& options) {
  const auto output = io::parse_detector_output(detections);
  const auto truth = io::parse_labels(labels);

  std::map<Key, bool> label_of;
  for (const auto& l : truth) label_of[{l.frame, l.agent_id}] = l.label;

  std::vector<Key> missing;
  std::size_t missing_total = 0;
  for (const auto& r : output.records) {
    if (label_of.contains({r.frame, r.agent_id})) continue;
    if (missing.size() < 10) missing.push_back({r.frame, r.agent_id});
    ++missing_total;
  }
  if (missing_total > 0) throw KeyMismatch(describe(missing, missing_total));

  std::vector<eval::LabeledScore> samples;
  if (output.verbose) {
    for (const auto& r : output.records) {
      samples.push_back({r.frame, r.agent_id, r.score, label_of.at({r.frame, r.agent_id})});
    }
  } else {
    std::map<Key, double> best;
    for (const auto& r : output.records) {
      auto [it, inserted] = best.try_emplace({r.frame, r.agent_id}, r.score);
      if (!inserted) it->second = std::max(it->second, r.score);
    }
    for (const auto& [key, label] : label_of) {
      const auto it = best.find(key);
      samples.push_back({key.first, key.second, it == best.end() ? 0.0 : it->second, label});
    }
  }

  std::vector<eval::LabeledScore> truth_samples;
  for (const auto& [key, label] : label_of) truth_samples.push_back({key.first, key.second, 0.0, label});
  std::vector<anomaly::AnomalyEvent> events;
  for (const auto& r : output.records) {
    if (r.event) events.push_back({r.frame, r.agent_id, r.score, r.threshold, anomaly::Scope::Local});
  }

  EvalResult result;
  result.per_agent_scores = output.verbose;
  result.samples = samples.size();
  result.positives = static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [](const auto& s) { return s.label; }));
  result.threshold = options.threshold;
  result.metrics = eval::evaluate(samples, options.threshold);
  result.events = eval::match_events(truth_samples, events, options.tolerance);
  return result;
}

void write_report(std::ostream& out, const EvalResult& r) {
  using io::format_number;
  out << "input = " << (r.per_agent_scores ? "scores" : "events") << '\n'
      << "samples = " << r.samples << '\n'
      << "positives = " << r.positives << '\n'
      << "threshold = " << format_number(r.threshold) << '\n'
      << "auc = " << format_number(r.metrics.auc) << '\n'
      << "accuracy = " << format_number(r.metrics.accuracy) << '\n'
      << "eer = " << format_number(r.metrics.eer) << '\n'
      << "episodes = " << r.events.episodes << '\n'
      << "episodes_detected = " << r.events.detected << '\n'
      << "events = " << r.events.events << '\n'
      << "events_matched = " << r.events.correct_events << '\n'
      << "episode_recall = " << format_number(r.events.recall) << '\n'
      << "event_precision = " << format_number(r.events.precision) << '\n';
}

BenchResult run_bench(const BenchOptions& options) {
  const auto settings = options.config.scenario();
  const auto scenario = sim::build_scenario(options.preset, settings.overrides);
  const auto simulation = sim::simulate(scenario, derive_seed(options.config.seed(), 1));
  const auto observed = sim::corrupt(simulation.trajectories, settings.noise);
  BenchResult r;
  r.agents = scenario.agents.size();
  r.timing = eval::measure_blt(options.config.pipeline(), observed, scenario.duration);
  return r;
}

std::string bench_summary(const BenchResult& r) {
  using io::format_number;
  return "agents=" + std::to_string(r.agents) + " frames=" + std::to_string(r.timing.samples.size()) +
         " median_ms=" + format_number(r.timing.median * 1e3) + " p95_ms=" + format_number(r.timing.p95 * 1e3) +
         " max_ms=" + format_number(r.timing.max * 1e3);
}

}  // namespace crowdsense::cli
