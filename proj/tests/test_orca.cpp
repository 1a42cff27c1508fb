#include "doctest.h"

#include <cmath>
#include <random>

#include "crowdsense/errors.hpp"
#include "crowdsense/orca.hpp"
#include "oracles.hpp"

using namespace crowdsense;
using namespace crowdsense::orca;

namespace {

AgentParams unit_params() {
  AgentParams p;
  p.radius = 0.5;
  p.pref_speed = 1.0;
  p.max_speed = 2.0;
  p.time_horizon = 2.0;
  p.neighbor_dist = 10.0;
  p.max_neighbors = 10;
  return p;
}

// Goal-seeking preferred velocity that stops exactly on the goal.
Vec2 arriving_velocity(Vec2 p, Vec2 g, const AgentParams& params, double dt) {
  const Vec2 to_goal = g - p;
  if (norm(to_goal) <= params.pref_speed * dt) return to_goal / dt;
  return preferred_velocity(p, g, params);
}

double min_pair_gap(const std::vector<Kinematics>& crowd) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < crowd.size(); ++i) {
    for (std::size_t j = i + 1; j < crowd.size(); ++j) {
      worst = std::min(worst, norm(crowd[i].position - crowd[j].position) -
                                  (crowd[i].radius + crowd[j].radius));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("preferred_velocity examples") {
  AgentParams p = unit_params();
  CHECK(preferred_velocity({0, 0}, {10, 0}, p) == Vec2{1, 0});
  CHECK(preferred_velocity({3, 3}, {3, 3}, p) == Vec2{0, 0});
  p.pref_speed = 0.5;
  const Vec2 v = preferred_velocity({0, 0}, {3, 4}, p);
  CHECK(v.x == doctest::Approx(0.3));
  CHECK(v.y == doctest::Approx(0.4));
}

TEST_CASE("AgentParams validation and per-fps defaults") {
  const auto p = AgentParams::defaults_for_fps(25.0);
  CHECK(p.pref_speed == doctest::Approx(0.04));
  CHECK(p.max_speed == doctest::Approx(0.064));
  CHECK(p.time_horizon == doctest::Approx(50.0));
  CHECK_NOTHROW(p.validate());
  AgentParams bad = p;
  bad.pref_speed = 2 * bad.max_speed;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = p;
  bad.radius = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("orca_halfplanes with no neighbors is empty") {
  CHECK(orca_halfplanes({{0, 0}, {1, 0}, 0.5}, {}, unit_params()).empty());
}

TEST_CASE("stationary neighbor dead ahead pushes the admissible side backwards") {
  const auto params = unit_params();
  const Kinematics self{{0, 0}, {1, 0}, 0.5};
  const Kinematics other{{1.5, 0}, {0, 0}, 0.5};
  const auto planes = orca_halfplanes(self, std::vector<Kinematics>{other}, params);
  REQUIRE(planes.size() == 1);
  CHECK(planes[0].normal.x < 0.0);
  CHECK(norm(planes[0].normal) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(planes[0].contains(self.velocity));

  // Sampling oracle: the current relative motion collides inside the horizon.
  CHECK(oracle::min_separation(self.position, self.velocity, other.position, other.velocity,
                               params.time_horizon) < 1.0);
}

TEST_CASE("reciprocal half-planes admit only collision-free velocity pairs") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto params = unit_params();
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const Kinematics a{{u(rng) * 3, u(rng) * 3}, {u(rng), u(rng)}, 0.5};
    const Kinematics b{{u(rng) * 3, u(rng) * 3}, {u(rng), u(rng)}, 0.5};
    if (norm(a.position - b.position) <= 1.05) continue;  // overlap case is separate
    const auto pa = orca_halfplanes(a, std::vector<Kinematics>{b}, params);
    const auto pb = orca_halfplanes(b, std::vector<Kinematics>{a}, params);
    for (int s = 0; s < 40; ++s) {
      const auto va = oracle::sample_in(pa[0], params.max_speed, rng);
      const auto vb = oracle::sample_in(pb[0], params.max_speed, rng);
      if (!va || !vb) continue;
      CHECK(oracle::min_separation(a.position, *va, b.position, *vb, params.time_horizon) >=
            1.0 - 1e-9);
      ++checked;
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("head-on pair produces half-planes related by a 180 degree rotation") {
  const auto params = unit_params();
  const Kinematics a{{-2, 0.1}, {1, 0}, 0.5};
  const Kinematics b{{2, -0.1}, {-1, 0}, 0.5};
  const auto pa = orca_halfplanes(a, std::vector<Kinematics>{b}, params);
  const auto pb = orca_halfplanes(b, std::vector<Kinematics>{a}, params);
  CHECK(pa[0].point.x == doctest::Approx(-pb[0].point.x).epsilon(1e-12));
  CHECK(pa[0].point.y == doctest::Approx(-pb[0].point.y).epsilon(1e-12));
  CHECK(pa[0].normal.x == doctest::Approx(-pb[0].normal.x).epsilon(1e-12));
  CHECK(pa[0].normal.y == doctest::Approx(-pb[0].normal.y).epsilon(1e-12));
}

TEST_CASE("overlapping agents get a finite one-step pushback constraint") {
  const auto params = unit_params();
  const Kinematics a{{0, 0}, {0, 0}, 0.5};
  const Kinematics b{{0.6, 0}, {0, 0}, 0.5};
  const auto planes = orca_halfplanes(a, std::vector<Kinematics>{b}, params, 1.0);
  REQUIRE(planes.size() == 1);
  CHECK(planes[0].point.finite());
  CHECK(planes[0].normal.x < 0.0);
  const Vec2 v = solve_velocity(planes, {0, 0}, params.max_speed);
  CHECK(v.x < 0.0);
}

TEST_CASE("solve_velocity without constraints clips to the speed disc") {
  CHECK(solve_velocity({}, {0.3, 0.4}, 1.0) == Vec2{0.3, 0.4});
  const Vec2 v = solve_velocity({}, {3, 4}, 1.0);
  CHECK(v.x == doctest::Approx(0.6));
  CHECK(v.y == doctest::Approx(0.8));
}

TEST_CASE("solve_velocity projects onto a single violated boundary") {
  const std::vector<HalfPlane> planes{{{0.2, 0.0}, {-1.0, 0.0}}};  // v.x <= 0.2
  const Vec2 v = solve_velocity(planes, {0.5, 0.3}, 1.0);
  CHECK(v.x == doctest::Approx(0.2));
  CHECK(v.y == doctest::Approx(0.3));
}

TEST_CASE("solve_velocity matches the dense grid oracle on random feasible instances") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    const double max_speed = 0.5 + 0.25 * (u(rng) + 1.0);
    const auto planes = oracle::random_feasible_planes(rng, 5, max_speed, 0.05);
    const Vec2 v_pref{u(rng) * max_speed * 1.2, u(rng) * max_speed * 1.2};
    const Vec2 v = solve_velocity(planes, v_pref, max_speed);
    for (const auto& p : planes) CHECK(p.contains(v, 1e-9));
    CHECK(norm(v) <= max_speed + 1e-9);
    const auto grid = oracle::grid_search(planes, v_pref, max_speed);
    REQUIRE(grid.any_feasible);
    CHECK(norm(v - v_pref) <= grid.best_dist + 1e-12);
    // The argmin can sit in a sharp corner with no grid point nearby, so the
    // comparison is on the objective.
    CHECK(grid.best_dist - norm(v - v_pref) <= 2e-3);
  }
}

TEST_CASE("solve_velocity falls back to least violation when constraints conflict") {
  // v.x >= 0.5 and v.x <= -0.5 cannot both hold; the minimax answer sits at x = 0.
  const std::vector<HalfPlane> planes{{{0.5, 0.0}, {1.0, 0.0}}, {{-0.5, 0.0}, {-1.0, 0.0}}};
  const Vec2 v = solve_velocity(planes, {0.0, 0.2}, 1.0);
  CHECK(std::abs(v.x) < 1e-9);
  CHECK(norm(v) <= 1.0 + 1e-12);
}

TEST_CASE("single agent far from its goal walks straight at preferred speed") {
  const auto params = unit_params();
  std::vector<Kinematics> crowd{{{0, 0}, {0, 0}, 0.5}};
  const std::vector<AgentParams> ps{params};
  for (int s = 0; s < 5; ++s) {
    const std::vector<Vec2> pref{preferred_velocity(crowd[0].position, {100, 0}, params)};
    crowd = step_crowd({crowd, ps, pref, 0.25});
  }
  CHECK(crowd[0].position.x == doctest::Approx(1.25));
  CHECK(crowd[0].position.y == 0.0);
  CHECK(crowd[0].velocity == Vec2{1, 0});
}

TEST_CASE("two-agent corridor swap stays collision free and arrives") {
  auto params = unit_params();
  // Exact alignment is an equilibrium of the reciprocal rule; a small
  // lateral offset decides who passes on which side.
  std::vector<Kinematics> crowd{{{-5, 0.05}, {0, 0}, 0.5}, {{5, 0}, {0, 0}, 0.5}};
  const std::vector<Vec2> goals{{5, 0.05}, {-5, 0}};
  const std::vector<AgentParams> ps(2, params);
  const double dt = 0.1;
  double worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 400; ++s) {
    std::vector<Vec2> pref;
    for (std::size_t i = 0; i < 2; ++i) {
      pref.push_back(arriving_velocity(crowd[i].position, goals[i], params, dt));
    }
    crowd = step_crowd({crowd, ps, pref, dt});
    worst = std::min(worst, min_pair_gap(crowd));
  }
  CHECK(worst >= -1e-6);
  for (std::size_t i = 0; i < 2; ++i) CHECK(norm(crowd[i].position - goals[i]) < params.radius);
}

TEST_CASE("antipodal 8-agent circle swap reaches all goals within 3x straight-line time") {
  auto params = unit_params();
  params.time_horizon = 5.0;
  const double radius = 6.0;
  const double dt = 0.1;
  std::vector<Kinematics> crowd;
  std::vector<Vec2> goals;
  for (int i = 0; i < 8; ++i) {
    const double a = 2.0 * M_PI * i / 8.0;
    crowd.push_back({{radius * std::cos(a), radius * std::sin(a)}, {0, 0}, params.radius});
    goals.push_back(-crowd.back().position);
  }
  const std::vector<AgentParams> ps(8, params);
  const int budget = static_cast<int>(3.0 * (2.0 * radius / params.pref_speed) / dt);
  std::mt19937_64 rng(3);
  // Symmetric rings jam without heading noise on the preferred velocity.
  std::uniform_real_distribution<double> jitter(-0.2, 0.2);
  int arrived_at = -1;
  double worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < budget; ++s) {
    std::vector<Vec2> pref;
    for (std::size_t i = 0; i < 8; ++i) {
      pref.push_back(arriving_velocity(crowd[i].position, goals[i], params, dt) +
                     Vec2{jitter(rng), jitter(rng)});
    }
    crowd = step_crowd({crowd, ps, pref, dt});
    worst = std::min(worst, min_pair_gap(crowd));
    bool all = true;
    for (std::size_t i = 0; i < 8; ++i) all = all && norm(crowd[i].position - goals[i]) < params.radius;
    if (all) {
      arrived_at = s;
      break;
    }
  }
  CHECK(arrived_at >= 0);
  CHECK(worst >= -1e-6);
}

TEST_CASE("step_crowd is point-symmetric and independent of relabeling") {
  const auto params = unit_params();
  const std::vector<Kinematics> crowd{{{-1.5, 0.2}, {1, 0.1}, 0.5}, {{1.5, -0.2}, {-1, -0.1}, 0.5}};
  const std::vector<AgentParams> ps(2, params);
  const std::vector<Vec2> pref{{1, 0}, {-1, 0}};
  const auto next = step_crowd({crowd, ps, pref, 0.1});
  CHECK(next[0].velocity.x == doctest::Approx(-next[1].velocity.x).epsilon(1e-9));
  CHECK(next[0].velocity.y == doctest::Approx(-next[1].velocity.y).epsilon(1e-9));

  const std::vector<Kinematics> swapped{crowd[1], crowd[0]};
  const std::vector<Vec2> pref_swapped{pref[1], pref[0]};
  const auto next_swapped = step_crowd({swapped, ps, pref_swapped, 0.1});
  CHECK(next_swapped[0].velocity == next[1].velocity);
  CHECK(next_swapped[1].velocity == next[0].velocity);

  const auto again = step_crowd({crowd, ps, pref, 0.1});
  CHECK(again[0].velocity == next[0].velocity);
  CHECK(again[1].position == next[1].position);
}

TEST_CASE("select_neighbors keeps the k nearest within range, nearest first") {
  AgentParams params = unit_params();
  params.max_neighbors = 2;
  params.neighbor_dist = 3.0;
  const std::vector<Kinematics> crowd{{{0, 0}, {}, 0.5}, {{2.5, 0}, {}, 0.5}, {{1, 0}, {}, 0.5},
                                      {{0, -1}, {}, 0.5}, {{0, 5}, {}, 0.5}};
  const auto idx = select_neighbors(crowd, 0, params);
  REQUIRE(idx.size() == 2);
  CHECK(idx[0] == 2);  // tie at distance 1 goes to the lower index
  CHECK(idx[1] == 3);
}
