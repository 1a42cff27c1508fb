// crowdsense: streaming crowd anomaly detection, simulation, evaluation and
// benchmarking from the command line.
//
// Exit codes: 0 success, 1 input error, 2 usage error.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include "CLI11.hpp"
#include "crowdsense/commands.hpp"
#include "crowdsense/simulator.hpp"

using namespace crowdsense;

namespace {

constexpr int kInputError = 1;
constexpr int kUsageError = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Settings shared by every subcommand; flags win over --set, which wins
// over the config file.
struct Common {
  std::string config_path;
  std::vector<std::string> assignments;
  std::optional<std::string> fps, seed, threshold, local_window, global_window, clusters, coast_frames;
  std::optional<std::string> noise_sigma, dropout;

  void add_to(CLI::App& app, bool scenario_noise) {
    app.add_option("--config", config_path, "key = value settings file");
    app.add_option("--set", assignments, "override one setting, key=value (repeatable)");
    app.add_option("--fps", fps, "frame rate of the stream (default 25)");
    app.add_option("--seed", seed, "seed for all randomness (default 0)");
    app.add_option("--threshold", threshold, "detection threshold, normalized units");
    app.add_option("--local-window", local_window, "local behavior window, seconds");
    app.add_option("--global-window", global_window, "global behavior window, seconds");
    app.add_option("--clusters", clusters, "auto or a fixed cluster count");
    app.add_option("--coast-frames", coast_frames, "frames a track survives unobserved");
    if (scenario_noise) {
      app.add_option("--noise-sigma", noise_sigma, "position noise added to simulated tracks, m");
      app.add_option("--dropout", dropout, "probability of dropping a simulated observation");
    }
  }

  RunConfig resolve() const {
    RunConfig c;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw InputError("cannot open config " + config_path);
      c = RunConfig::parse(in);
    }
    for (const auto& a : assignments) c.set_assignment(a);
    const std::pair<const char*, const std::optional<std::string>*> flags[] = {
        {"fps", &fps},
        {"seed", &seed},
        {"detector.threshold", &threshold},
        {"behavior.local_window", &local_window},
        {"behavior.global_window", &global_window},
        {"behavior.clusters", &clusters},
        {"filter.coast_limit", &coast_frames},
        {"scenario.noise_sigma", &noise_sigma},
        {"scenario.dropout", &dropout},
    };
    for (const auto& [key, value] : flags) {
      if (*value) c.set(key, **value);
    }
    return c;
  }
};

struct Output {
  std::ofstream file;
  std::ostream* stream = &std::cout;

  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file.open(path);
    if (!file) throw InputError("cannot write " + path);
    stream = &file;
  }
};

struct Input {
  std::ifstream file;
  std::istream* stream = &std::cin;

  explicit Input(const std::string& path) {
    if (path.empty() || path == "-") return;
    file.open(path);
    if (!file) throw InputError("cannot open " + path);
    stream = &file;
  }
};

std::string preset_list() {
  std::string s;
  for (const auto& n : sim::preset_names()) s += (s.empty() ? "" : ", ") + n;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  CLI::App app{"Streaming crowd anomaly detection"};
  app.require_subcommand(1);

  Common detect_common, sim_common, eval_common, bench_common;
  std::string input = "-", output, labels, format = "csv", preset, emit_roc;
  bool verbose = false, retain_events_only = false;
  Frame tolerance = 12;

  auto* detect = app.add_subcommand("detect", "stream observations in, anomaly events out");
  detect_common.add_to(*detect, false);
  detect->add_option("--input", input, "trajectory file, - for stdin")->capture_default_str();
  detect->add_option("--output", output, "event file (default stdout)");
  detect->add_option("--format", format, "csv or jsonl")->capture_default_str();
  detect->add_flag("--verbose-scores", verbose, "one record per scored agent and frame");
  detect->add_flag("--retain-events-only", retain_events_only,
                   "never echo positions or velocities in the output");

  auto* simulate = app.add_subcommand("simulate", "write a synthetic crowd and its labels");
  sim_common.add_to(*simulate, true);
  simulate->add_option("--preset", preset, "one of: " + preset_list())->required();
  simulate->add_option("--output", output, "trajectory file (default stdout)");
  simulate->add_option("--labels", labels, "label file frame,agent_id,label");
  simulate->add_option("--format", format, "csv or jsonl")->capture_default_str();

  auto* evaluate = app.add_subcommand("eval", "score detector output against labels");
  eval_common.add_to(*evaluate, false);
  evaluate->add_option("--input", input, "detector output, - for stdin")->capture_default_str();
  evaluate->add_option("--labels", labels, "label file frame,agent_id,label")->required();
  evaluate->add_option("--output", output, "report file (default stdout)");
  evaluate->add_option("--emit-roc", emit_roc, "write the ROC curve as CSV");
  evaluate->add_option("--tolerance", tolerance, "event matching tolerance, frames")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "time the detector on a simulated crowd");
  bench_common.add_to(*bench, true);
  bench->add_option("--preset", preset, "one of: " + preset_list())->default_val("lane_flow");
  bench->add_option("--output", output, "per-frame timing CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (detect->parsed()) {
      cli::DetectOptions o;
      o.config = detect_common.resolve();
      o.format = io::parse_format(format);
      o.verbose_scores = verbose;
      o.retain_events_only = retain_events_only;
      Input in(input);
      Output out(output);
      cli::run_detect(*in.stream, *out.stream, o);
    } else if (simulate->parsed()) {
      cli::SimulateOptions o;
      o.preset = preset;
      o.config = sim_common.resolve();
      o.format = io::parse_format(format);
      Output out(output);
      std::unique_ptr<Output> label_out;
      if (!labels.empty()) label_out = std::make_unique<Output>(labels);
      cli::run_simulate(o, *out.stream, label_out ? label_out->stream : nullptr);
    } else if (evaluate->parsed()) {
      const RunConfig config = eval_common.resolve();
      cli::EvalOptions o;
      o.threshold = config.pipeline().detector.threshold;
      o.tolerance = tolerance;
      if (tolerance < 0) throw UsageError("--tolerance must be >= 0");
      Input in(input);
      Input truth(labels);
      const auto result = cli::run_eval(*in.stream, *truth.stream, o);
      Output out(output);
      cli::write_report(*out.stream, result);
      if (!emit_roc.empty()) {
        Output roc(emit_roc);
        io::write_roc(*roc.stream, result.metrics.roc);
      }
    } else if (bench->parsed()) {
      cli::BenchOptions o;
      o.preset = preset;
      o.config = bench_common.resolve();
      const auto result = cli::run_bench(o);
      Output out(output);
      io::write_timing(*out.stream, result.timing);
      std::cerr << cli::bench_summary(result) << '\n';
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const UnknownPreset& e) {
    std::cerr << "error: " << e.what() << " (known: " << preset_list() << ")\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  std::cout.flush();
  return 0;
}
