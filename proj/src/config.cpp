#include "crowdsense/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <random>

namespace crowdsense {

namespace {

struct Resolved {
  double fps = 25.0;
  std::uint64_t seed = 0;
  PipelineConfig pipeline;
  ScenarioSettings scenario;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double number(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || end != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

long long integer(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || end != v.data() + v.size()) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

int count(const std::string& key, const std::string& v) {
  const long long n = integer(key, v);
  if (n < 0 || n > 1'000'000'000) throw ConfigError(key + ": out of range");
  return static_cast<int>(n);
}

// Seconds to whole frames, at least one.
int frames(const std::string& key, const std::string& v, double fps) {
  const double s = number(key, v);
  if (!(s > 0.0)) throw ConfigError(key + ": must be > 0 seconds");
  return std::max(1, static_cast<int>(std::lround(s * fps)));
}

using Apply = std::function<void(Resolved&, const std::string& key, const std::string& value)>;

struct Entry {
  ConfigKey key;
  Apply apply;
};

const std::vector<Entry>& table() {
  static const std::vector<Entry> t{
      {{"fps", "Hz", "frame rate; converts every per-second quantity"}, [](Resolved&, auto&, auto&) {}},
      {{"seed", "", "seed for every random choice in a run"},
       [](Resolved& r, auto& k, auto& v) {
         const long long s = integer(k, v);
         if (s < 0) throw ConfigError(k + ": must be >= 0");
         r.seed = static_cast<std::uint64_t>(s);
       }},

      {{"orca.radius", "m", "agent radius"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.agent.radius = number(k, v); }},
      {{"orca.pref_speed", "m/s", "preferred walking speed"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.agent.pref_speed = number(k, v) / r.fps; }},
      {{"orca.max_speed", "m/s", "speed cap of the collision-avoidance solve"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.agent.max_speed = number(k, v) / r.fps; }},
      {{"orca.time_horizon", "s", "look-ahead for collision avoidance"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.agent.time_horizon = number(k, v) * r.fps; }},
      {{"orca.neighbor_dist", "m", "neighbor search radius"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.agent.neighbor_dist = number(k, v); }},
      {{"orca.max_neighbors", "", "neighbors considered per agent"},
       [](Resolved& r, auto& k, auto& v) {
         r.pipeline.agent.max_neighbors = static_cast<std::size_t>(count(k, v));
       }},

      {{"noise.process_position", "m", "process noise std on position, per frame"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.noise.process_sigma_pos = number(k, v); }},
      {{"noise.process_velocity", "m/frame", "process noise std on velocity, per frame"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.noise.process_sigma_vel = number(k, v); }},
      {{"noise.process_goal", "m", "process noise std on the goal, per frame"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.noise.process_sigma_goal = number(k, v); }},
      {{"noise.measurement", "m", "observation noise std"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.noise.meas_sigma = number(k, v); }},

      {{"filter.goal_window", "s", "interval between goal re-estimates"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.filter.goal_window = frames(k, v, r.fps); }},
      {{"filter.goal_lookahead", "s", "how far ahead the goal is extrapolated"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.filter.goal_lookahead = number(k, v) * r.fps; }},
      {{"filter.coast_limit", "frames", "frames a track survives without observations"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.filter.coast_limit = count(k, v); }},
      {{"filter.goal_gain", "", "pull of the predicted velocity towards the goal, 0..1"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.filter.goal_gain = number(k, v); }},
      {{"filter.max_speed", "m/s", "speed cap inside the motion model"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.filter.max_speed = number(k, v) / r.fps; }},

      {{"behavior.local_window", "s", "averaging window of local behavior"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.behavior.local_window = frames(k, v, r.fps); }},
      {{"behavior.global_window", "s", "averaging window of global behavior and normalization"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.behavior.global_window = frames(k, v, r.fps); }},
      {{"behavior.scope", "", "global reference: cluster or crowd"},
       [](Resolved& r, auto& k, auto& v) {
         if (v == "cluster") {
           r.pipeline.behavior.scope = behavior::GlobalScope::Cluster;
         } else if (v == "crowd") {
           r.pipeline.behavior.scope = behavior::GlobalScope::Crowd;
         } else {
           throw ConfigError(k + ": expected cluster or crowd");
         }
       }},
      {{"behavior.clusters", "", "auto or a fixed cluster count"},
       [](Resolved& r, auto& k, auto& v) {
         if (v == "auto") {
           r.pipeline.behavior.clustering.fixed_k = 0;
           return;
         }
         const int n = count(k, v);
         if (n < 1) throw ConfigError(k + ": expected auto or a positive count");
         r.pipeline.behavior.clustering.fixed_k = n;
       }},
      {{"behavior.max_clusters", "", "upper bound for automatic cluster count"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.behavior.clustering.max_k = count(k, v); }},
      {{"behavior.cluster_radius", "m", "position scale of the clustering metric"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.behavior.clustering.neighbor_radius = number(k, v); }},
      {{"behavior.spread_limit", "", "mean squared spread accepted by automatic clustering"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.behavior.clustering.spread_limit = number(k, v); }},
      {{"behavior.min_cluster_size", "", "smaller clusters are merged into neighbors"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.behavior.clustering.min_cluster_size = count(k, v); }},
      {{"behavior.velocity_floor", "", "std floor for velocity features, fraction of mean speed"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.behavior.velocity_floor = number(k, v); }},
      {{"behavior.direction_floor", "", "std floor for direction features"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.behavior.direction_floor = number(k, v); }},

      {{"detector.threshold", "", "score threshold in normalized feature units"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.detector.threshold = number(k, v); }},
      {{"detector.hysteresis_m", "frames", "exceedances needed within the last n frames"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.detector.hysteresis_m = count(k, v); }},
      {{"detector.hysteresis_n", "frames", "hysteresis window"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.detector.hysteresis_n = count(k, v); }},
      {{"detector.global_fraction", "", "share of the crowd flagged at once that makes events global"},
       [](Resolved& r, auto& k, auto& v) { r.pipeline.detector.global_fraction = number(k, v); }},

      {{"scenario.agents", "", "crowd size, 0 for the preset default"},
       [](Resolved& r, auto& k, auto& v) { r.scenario.overrides.agents = count(k, v); }},
      {{"scenario.duration", "frames", "length, 0 for the preset default"},
       [](Resolved& r, auto& k, auto& v) { r.scenario.overrides.duration = count(k, v); }},
      {{"scenario.heading_noise", "", "per-frame wobble of preferred velocity, fraction of speed"},
       [](Resolved& r, auto& k, auto& v) { r.scenario.overrides.heading_noise = number(k, v); }},
      {{"scenario.speed_multiplier", "", "speed factor of bikers and runners"},
       [](Resolved& r, auto& k, auto& v) { r.scenario.overrides.speed_multiplier = number(k, v); }},
      {{"scenario.noise_sigma", "m", "tracker position noise added to simulated output"},
       [](Resolved& r, auto& k, auto& v) { r.scenario.noise.position_sigma = number(k, v); }},
      {{"scenario.dropout", "", "probability that an observation is dropped"},
       [](Resolved& r, auto& k, auto& v) { r.scenario.noise.dropout_prob = number(k, v); }},
  };
  return t;
}

Resolved resolve(const std::map<std::string, std::string>& values) {
  Resolved r;
  if (const auto it = values.find("fps"); it != values.end()) {
    r.fps = number("fps", it->second);
    if (!(r.fps > 0.0)) throw ConfigError("fps: must be > 0");
  }
  r.pipeline = PipelineConfig::defaults_for_fps(r.fps);
  r.scenario.overrides.fps = r.fps;
  for (const auto& e : table()) {
    if (const auto it = values.find(e.key.name); it != values.end()) e.apply(r, e.key.name, it->second);
  }
  r.pipeline.behavior.clustering.seed = r.seed;
  r.scenario.overrides.seed = r.seed;
  r.scenario.noise.seed = derive_seed(r.seed, 2);

  r.pipeline.validate();
  r.scenario.noise.validate();
  const auto& o = r.scenario.overrides;
  if (!(o.heading_noise >= 0.0)) throw ConfigError("scenario.heading_noise: must be >= 0");
  if (!(o.speed_multiplier > 0.0)) throw ConfigError("scenario.speed_multiplier: must be > 0");
  return r;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

RunConfig RunConfig::parse(std::istream& in) {
  RunConfig c;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    std::string_view s = text;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ParseError(line, "expected 'key = value'");
    const std::string key(trim(s.substr(0, eq)));
    const std::string value(trim(s.substr(eq + 1)));
    if (key.empty()) throw ParseError(line, "missing key");
    try {
      c.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line) + ": " + e.what());
    }
  }
  return c;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& t = table();
  if (std::none_of(t.begin(), t.end(), [&](const Entry& e) { return e.key.name == key; })) {
    throw ConfigError("unknown key '" + key + "'");
  }
  auto next = values_;
  next[key] = value;
  resolve(next);
  values_ = std::move(next);
}

void RunConfig::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set(std::string(trim(std::string_view(assignment).substr(0, eq))),
      std::string(trim(std::string_view(assignment).substr(eq + 1))));
}

double RunConfig::fps() const { return resolve(values_).fps; }
std::uint64_t RunConfig::seed() const { return resolve(values_).seed; }
PipelineConfig RunConfig::pipeline() const { return resolve(values_).pipeline; }
ScenarioSettings RunConfig::scenario() const { return resolve(values_).scenario; }

const std::vector<ConfigKey>& RunConfig::keys() {
  static const std::vector<ConfigKey> k = [] {
    std::vector<ConfigKey> out;
    for (const auto& e : table()) out.push_back(e.key);
    return out;
  }();
  return k;
}

}  // namespace crowdsense
