#include "crowdsense/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

namespace crowdsense::sim {

namespace {

constexpr double kSpacing = 1.1;
constexpr double kStartJitter = 0.15;
constexpr double kFarAway = 1000.0;

AgentId make_id(int i, int n) {
  const int width = std::max(3, static_cast<int>(std::to_string(std::max(n - 1, 0)).size()));
  std::string digits = std::to_string(i);
  return "p" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;
}

// Jittered grid block, column-major from `origin`, `rows` deep along +y.
std::vector<Vec2> grid(int count, int rows, Vec2 origin, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> j(-kStartJitter, kStartJitter);
  std::vector<Vec2> out;
  for (int i = 0; i < count; ++i) {
    const int col = i / rows;
    const int row = i % rows;
    out.push_back(origin + Vec2{col * kSpacing + j(rng), row * kSpacing + j(rng)});
  }
  return out;
}

struct Builder {
  Scenario s;
  orca::AgentParams base;
  std::mt19937_64 rng;
  int total = 0;

  Builder(const std::string& name, const ScenarioOverrides& o, int default_agents, Frame default_duration)
      : base(orca::AgentParams::defaults_for_fps(o.fps)), rng(o.seed) {
    s.name = name;
    s.fps = o.fps;
    s.heading_noise = o.heading_noise;
    s.duration = o.duration > 0 ? o.duration : default_duration;
    total = o.agents > 0 ? o.agents : default_agents;
  }

  // Walkers differ slightly in comfortable speed.
  void add(Vec2 start, Vec2 goal) {
    std::uniform_real_distribution<double> speed(0.9, 1.1);
    orca::AgentParams p = base;
    p.pref_speed = base.pref_speed * speed(rng);
    s.agents.push_back({make_id(static_cast<int>(s.agents.size()), total), start, goal, p});
  }

  void lane(int count, int rows, Vec2 origin, Vec2 direction) {
    for (const Vec2 p : grid(count, rows, origin, rng)) add(p, p + direction * kFarAway);
  }

  AgentSpec& agent(const AgentId& id) {
    return *std::find_if(s.agents.begin(), s.agents.end(), [&](const auto& a) { return a.id == id; });
  }

  void speed_script(ScriptKind kind, const AgentId& id, Frame begin, double multiplier) {
    auto& a = agent(id);
    a.params.max_speed = std::max(a.params.max_speed, 1.6 * a.params.pref_speed * multiplier);
    s.scripts.push_back({kind, id, begin, s.duration, multiplier});
  }

  Scenario finish() {
    if (!s.agents.empty()) {
      BoundingBox box{s.agents[0].start, s.agents[0].start};
      for (const auto& a : s.agents) {
        box.min = {std::min(box.min.x, a.start.x), std::min(box.min.y, a.start.y)};
        box.max = {std::max(box.max.x, a.start.x), std::max(box.max.y, a.start.y)};
      }
      s.arena = box;
    }
    s.validate();
    return s;
  }
};

int rows_for(int n, int preferred) { return std::max(1, std::min(n, preferred)); }

Scenario lane_flow(const ScenarioOverrides& o) {
  Builder b("lane_flow", o, 10, 300);
  b.lane(b.total, rows_for(b.total, 3), {0, 0}, {1, 0});
  return b.finish();
}

Scenario bidirectional(const ScenarioOverrides& o) {
  Builder b("bidirectional", o, 40, 400);
  const int east = b.total / 2;
  const int west = b.total - east;
  const int rows = rows_for(b.total, 3);
  b.lane(east, rows, {0, 0}, {1, 0});
  const double far_end = (west + rows - 1) / rows * kSpacing + 12.0;
  b.lane(west, rows, {far_end, rows * kSpacing + 1.0}, {-1, 0});
  return b.finish();
}

Scenario crossing(const ScenarioOverrides& o) {
  Builder b("crossing", o, 40, 400);
  const int a = b.total / 2;
  const int rows = rows_for(b.total, 4);
  b.lane(a, rows, {-20, -2}, {1, 0});
  for (const Vec2 p : grid(b.total - a, rows, {-20, -2}, b.rng)) {
    const Vec2 q{p.y, p.x};  // same block mirrored to walk along +y
    b.add(q, q + Vec2{0, kFarAway});
  }
  return b.finish();
}

Scenario circle_swap(const ScenarioOverrides& o) {
  Builder b("circle_swap", o, 20, 600);
  const double radius = std::max(4.0, b.total * 1.0 / (2.0 * M_PI));
  for (int i = 0; i < b.total; ++i) {
    const double a = 2.0 * M_PI * i / b.total;
    const Vec2 p{radius * std::cos(a), radius * std::sin(a)};
    b.add(p, -p);
  }
  return b.finish();
}

Scenario against_flow(const ScenarioOverrides& o) {
  Builder b("against_flow_63", o, 63, 400);
  const int crowd = std::max(1, b.total - 1);
  const int rows = rows_for(crowd, 4);
  b.lane(crowd, rows, {0, 0}, {1, 0});
  const double front = (crowd + rows - 1) / rows * kSpacing + 3.0;
  const Vec2 start{front, 0.5 * (rows - 1) * kSpacing};
  b.add(start, start - Vec2{kFarAway, 0});
  b.s.scripts.push_back({ScriptKind::AgainstFlow, b.s.agents.back().id, 0, b.s.duration, 1.0});
  return b.finish();
}

Scenario biker(const ScenarioOverrides& o) {
  Builder b("biker", o, 40, 400);
  const int rows = rows_for(b.total, 4);
  b.lane(b.total, rows, {0, 0}, {1, 0});
  // Rear of the crowd, middle row, so it has to pass through.
  b.speed_script(ScriptKind::SpeedOutlier, b.s.agents[static_cast<std::size_t>(rows / 2)].id, 0,
                 o.speed_multiplier);
  return b.finish();
}

Scenario sudden_run(const ScenarioOverrides& o) {
  Builder b("sudden_run", o, 40, 400);
  const int rows = rows_for(b.total, 4);
  b.lane(b.total, rows, {0, 0}, {1, 0});
  std::vector<std::size_t> idx(b.s.agents.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), b.rng);
  const std::size_t runners = std::max<std::size_t>(1, idx.size() / 5);
  const Frame begin = std::min<Frame>(150, b.s.duration / 2);
  for (std::size_t k = 0; k < runners; ++k) {
    b.speed_script(ScriptKind::SuddenRun, b.s.agents[idx[k]].id, begin, o.speed_multiplier);
  }
  return b.finish();
}

Scenario u_turn(const ScenarioOverrides& o) {
  Builder b("u_turn", o, 30, 500);
  const int rows = rows_for(b.total, 3);
  b.lane(b.total, rows, {0, 0}, {1, 0});
  const Frame turn = std::min<Frame>(150, b.s.duration / 3);
  const Frame reverse = std::min<Frame>(300, 2 * b.s.duration / 3);
  const AgentId turner = b.s.agents[b.s.agents.size() / 2].id;
  b.s.scripts.push_back({ScriptKind::UTurn, turner, turn, reverse, 1.0});
  GoalChange change{reverse, {}};
  for (const auto& a : b.s.agents) {
    if (a.id != turner) change.agents.push_back(a.id);
  }
  b.s.goal_changes.push_back(change);
  return b.finish();
}

Scenario push_and_run(const ScenarioOverrides& o) {
  Builder b("push_and_run", o, 30, 400);
  const int rows = rows_for(b.total, 3);
  b.lane(b.total, rows, {0, 0}, {1, 0});
  const AgentId pusher = b.s.agents[b.s.agents.size() / 3].id;
  b.speed_script(ScriptKind::PushAndRun, pusher, std::min<Frame>(150, b.s.duration / 2),
                 o.speed_multiplier);
  b.s.scripts.back().end = std::min<Frame>(b.s.scripts.back().begin + 100, b.s.duration);
  return b.finish();
}

using PresetFn = Scenario (*)(const ScenarioOverrides&);

const std::vector<std::pair<std::string, PresetFn>>& presets() {
  static const std::vector<std::pair<std::string, PresetFn>> table{
      {"lane_flow", lane_flow},       {"bidirectional", bidirectional},
      {"crossing", crossing},         {"circle_swap", circle_swap},
      {"against_flow_63", against_flow}, {"biker", biker},
      {"sudden_run", sudden_run},     {"u_turn", u_turn},
      {"push_and_run", push_and_run},
  };
  return table;
}

bool active(const AnomalyScript& s, Frame f) { return s.begin <= f && f < s.end; }

Vec2 reflect_goal(Vec2 p, Vec2 g) { return p - (g - p); }

}  // namespace

void Scenario::validate() const {
  if (duration < 1) throw ConfigError("scenario duration must be >= 1 frame");
  if (!(fps > 0.0)) throw ConfigError("fps must be > 0");
  if (!(heading_noise >= 0.0)) throw ConfigError("heading noise must be >= 0");
  std::set<AgentId> ids;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    agents[i].params.validate();
    if (!ids.insert(agents[i].id).second) throw ConfigError("duplicate agent id " + agents[i].id);
    if (i > 0 && !(agents[i - 1].id < agents[i].id)) throw ConfigError("agents must be sorted by id");
    for (std::size_t j = 0; j < i; ++j) {
      const double gap = norm(agents[i].start - agents[j].start);
      if (gap < agents[i].params.radius + agents[j].params.radius) {
        throw ConfigError("agents " + agents[j].id + " and " + agents[i].id + " start overlapping");
      }
    }
  }
  for (const auto& s : scripts) {
    if (!ids.contains(s.agent_id)) throw ConfigError("script names unknown agent " + s.agent_id);
    if (s.begin < 0 || s.begin >= s.end || s.end > duration) {
      throw ConfigError("script range outside the scenario");
    }
    if (!(s.multiplier > 0.0)) throw ConfigError("script multiplier must be > 0");
  }
  for (const auto& g : goal_changes) {
    if (g.frame < 0 || g.frame >= duration) throw ConfigError("goal change outside the scenario");
    for (const auto& id : g.agents) {
      if (!ids.contains(id)) throw ConfigError("goal change names unknown agent " + id);
    }
  }
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [name, fn] : presets()) out.push_back(name);
  return out;
}

Scenario build_scenario(const std::string& preset, const ScenarioOverrides& overrides) {
  if (!(overrides.fps > 0.0)) throw ConfigError("fps must be > 0");
  if (overrides.agents < 0) throw ConfigError("agent count must be >= 0");
  if (!(overrides.speed_multiplier > 0.0)) throw ConfigError("speed multiplier must be > 0");
  for (const auto& [name, fn] : presets()) {
    if (name == preset) return fn(overrides);
  }
  throw UnknownPreset(preset);
}

Simulation simulate(const Scenario& scenario, std::uint64_t seed) {
  scenario.validate();
  const std::size_t n = scenario.agents.size();
  std::map<AgentId, std::size_t> index;
  std::vector<orca::Kinematics> crowd(n);
  std::vector<orca::AgentParams> params(n);
  std::vector<Vec2> goals(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = scenario.agents[i];
    index[a.id] = i;
    params[i] = a.params;
    goals[i] = a.goal;
    crowd[i] = {a.start, orca::preferred_velocity(a.start, a.goal, a.params), a.params.radius};
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::map<std::size_t, std::size_t> push_targets;  // pusher -> victim

  Simulation out;
  out.trajectories.reserve(n * static_cast<std::size_t>(scenario.duration));
  out.labels.reserve(out.trajectories.capacity());
  std::vector<Vec2> preferred(n);

  for (Frame f = 0; f < scenario.duration; ++f) {
    for (const auto& change : scenario.goal_changes) {
      if (change.frame != f) continue;
      for (const auto& id : change.agents) {
        const std::size_t i = index.at(id);
        goals[i] = reflect_goal(crowd[i].position, goals[i]);
      }
    }
    std::vector<bool> labelled(n, false);
    std::vector<double> speed_factor(n, 1.0);
    for (const auto& s : scenario.scripts) {
      const std::size_t i = index.at(s.agent_id);
      if (s.kind == ScriptKind::UTurn && s.begin == f) {
        goals[i] = reflect_goal(crowd[i].position, goals[i]);
      }
      if (!active(s, f)) continue;
      labelled[i] = true;
      if (s.kind == ScriptKind::SpeedOutlier || s.kind == ScriptKind::SuddenRun) {
        speed_factor[i] = s.multiplier;
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      out.trajectories.push_back({f, scenario.agents[i].id, crowd[i].position});
      out.labels.push_back(labelled[i]);
    }
    if (f + 1 == scenario.duration) break;

    for (std::size_t i = 0; i < n; ++i) {
      const double speed = params[i].pref_speed * speed_factor[i];
      const Vec2 to_goal = goals[i] - crowd[i].position;
      preferred[i] = norm(to_goal) <= speed ? to_goal : normalized(to_goal) * speed;
    }
    for (const auto& s : scenario.scripts) {
      if (s.kind != ScriptKind::PushAndRun || !active(s, f)) continue;
      const std::size_t i = index.at(s.agent_id);
      if (!push_targets.contains(i)) {
        std::size_t nearest = i;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
          const double d = norm(crowd[j].position - crowd[i].position);
          if (j != i && d < best) {
            best = d;
            nearest = j;
          }
        }
        push_targets[i] = nearest;
      }
      const std::size_t victim = push_targets[i];
      const Vec2 toward = normalized(crowd[victim].position - crowd[i].position);
      const bool rushing = f < s.begin + (s.end - s.begin) / 2;
      preferred[i] = rushing ? toward * (1.5 * params[i].pref_speed)
                             : toward * (-s.multiplier * params[i].pref_speed);
    }
    if (scenario.heading_noise > 0.0) {
      for (std::size_t i = 0; i < n; ++i) {
        const double sd = scenario.heading_noise * norm(preferred[i]);
        preferred[i] += Vec2{jitter(rng), jitter(rng)} * sd;
      }
    }
    crowd = orca::step_crowd({crowd, params, preferred, 1.0});
  }
  return out;
}

void NoiseModel::validate() const {
  if (!(position_sigma >= 0.0)) throw ConfigError("position_sigma must be >= 0");
  if (!(dropout_prob >= 0.0 && dropout_prob < 1.0)) throw ConfigError("dropout must be in [0, 1)");
}

std::vector<Observation> corrupt(std::span<const Observation> trajectories, const NoiseModel& noise) {
  noise.validate();
  std::mt19937_64 rng(noise.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Observation> out;
  out.reserve(trajectories.size());
  for (const auto& obs : trajectories) {
    const bool dropped = u(rng) < noise.dropout_prob;
    const Vec2 jitter{g(rng), g(rng)};
    if (dropped) continue;
    Observation o = obs;
    if (noise.position_sigma > 0.0) o.position += jitter * noise.position_sigma;
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace crowdsense::sim
