#pragma once

#include <istream>
#include <ostream>
#include <string>

#include "crowdsense/config.hpp"
#include "crowdsense/evaluation.hpp"
#include "crowdsense/io.hpp"

namespace crowdsense::cli {

struct DetectOptions {
  RunConfig config;
  io::Format format = io::Format::Csv;
  bool verbose_scores = false;
  bool retain_events_only = false;
};

struct DetectSummary {
  std::size_t frames = 0;
  std::size_t observations = 0;
  std::size_t events = 0;
};

/// Reads observations frame by frame and writes one JSON line per event
/// (or per scored agent with verbose_scores). A frame is processed and its
/// output flushed as soon as the frame is known to be complete: at the first
/// record of a later frame, at a blank line, or at end of input.
DetectSummary run_detect(std::istream& in, std::ostream& out, const DetectOptions& options);

struct SimulateOptions {
  std::string preset;
  RunConfig config;
  io::Format format = io::Format::Csv;
};

/// Writes the noisy observation stream and, when `labels` is given, the
/// ground-truth label of every simulated (frame, agent). Throws UnknownPreset.
void run_simulate(const SimulateOptions& options, std::ostream& trajectories, std::ostream* labels);

struct EvalOptions {
  double threshold = 3.0;
  Frame tolerance = 12;  // event-level matching, frames
};

struct EvalResult {
  bool per_agent_scores = false;  // input had a score for every scored agent
  std::size_t samples = 0;
  std::size_t positives = 0;
  double threshold = 0.0;
  eval::Metrics metrics;
  eval::EventMatch events;
};

/// Aligns detector output with labels by (frame, agent). Score records must
/// all have a label; with event-only input every labeled key is a sample and
/// keys without an event score 0. Throws KeyMismatch listing up to 10
/// unmatched keys.
EvalResult run_eval(std::istream& detections, std::istream& labels, const EvalOptions& options);

/// Flat `key = value` report.
void write_report(std::ostream& out, const EvalResult& result);

struct BenchOptions {
  std::string preset = "lane_flow";
  RunConfig config;
};

struct BenchResult {
  std::size_t agents = 0;
  eval::TimingReport timing;
};

/// Simulates the preset, then times the detector over it.
BenchResult run_bench(const BenchOptions& options);

/// `agents=.. frames=.. median_ms=.. p95_ms=.. max_ms=..`
std::string bench_summary(const BenchResult& result);

}  // namespace crowdsense::cli
