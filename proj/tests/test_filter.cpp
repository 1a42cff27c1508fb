#include "doctest.h"

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "crowdsense/filter.hpp"
#include "oracles.hpp"

using namespace crowdsense;
using namespace crowdsense::filter;

namespace {

bool is_psd(const StateCovariance& c) {
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-9) return false;
  Eigen::SelfAdjointEigenSolver<StateCovariance> eig(c);
  return eig.eigenvalues().minCoeff() >= -1e-9;
}

StateCovariance random_psd(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  StateCovariance a;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) a(i, j) = n(rng);
  return a * a.transpose() * 0.1;
}

orca::AgentParams walker_params() { return orca::AgentParams::defaults_for_fps(25.0); }

}  // namespace

TEST_CASE("infer_goal extrapolates the mean displacement") {
  FilterConfig cfg;
  cfg.goal_lookahead = 3.0;
  const std::vector<Vec2> walk{{0, 0}, {1, 0}, {2, 0}};
  CHECK(infer_goal(walk, cfg) == Vec2{5, 0});

  const std::vector<Vec2> still{{2, 3}, {2, 3}, {2, 3}};
  CHECK(infer_goal(still, cfg) == Vec2{2, 3});

  const std::vector<Vec2> one{{0, 0}};
  CHECK_THROWS_AS(infer_goal(one, cfg), InsufficientHistory);
}

TEST_CASE("infer_goal only looks at the last goal_window samples") {
  FilterConfig cfg;
  cfg.goal_window = 3;
  cfg.goal_lookahead = 1.0;
  const std::vector<Vec2> walk{{-50, 7}, {0, 0}, {1, 0}, {2, 0}};
  CHECK(infer_goal(walk, cfg) == Vec2{3, 0});
}

TEST_CASE("infer_goal on noisy walks is unbiased with the analytic spread") {
  FilterConfig cfg;
  cfg.goal_window = 10;
  cfg.goal_lookahead = 25.0;
  const double sigma = 0.05;
  const Vec2 step{0.04, 0.01};
  const Vec2 truth = step * 9.0 + step * 25.0;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, sigma);
  const int trials = 1000;
  Vec2 mean_err;
  double sq = 0.0;
  for (int k = 0; k < trials; ++k) {
    std::vector<Vec2> walk;
    for (int i = 0; i < 10; ++i) walk.push_back(step * i + Vec2{noise(rng), noise(rng)});
    const Vec2 e = infer_goal(walk, cfg) - truth;
    mean_err += e / trials;
    sq += e.x * e.x / trials;
  }
  CHECK(norm(mean_err) < sigma * 3.0 / std::sqrt(10.0));
  // Goal = (1+a) p_last - a p_first with a = tau / (W - 1).
  const double a = 25.0 / 9.0;
  const double expected_var = sigma * sigma * ((1 + a) * (1 + a) + a * a);
  CHECK(sq == doctest::Approx(expected_var).epsilon(0.1));
}

TEST_CASE("predict without neighbors is a fixed point at the preferred velocity") {
  PedestrianState s;
  s.position = {1, 1};
  s.velocity = {0.04, 0.0};
  s.goal = {5, 1};
  const MotionContext ctx{{}, walker_params(), FilterConfig{}, 1.0};
  const auto next = predict(s, ctx, NoiseParams{});
  CHECK(next.position.x == doctest::Approx(1.04).epsilon(1e-12));
  CHECK(next.position.y == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(next.velocity.x == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(next.velocity.y == doctest::Approx(0.0));
  CHECK(next.goal == s.goal);
}

TEST_CASE("linear regime covariance equals the constant-velocity propagation") {
  std::mt19937_64 rng(5);
  FilterConfig cfg;
  cfg.goal_gain = 0.0;
  NoiseParams zero{0.0, 0.0, 0.0, 0.05};
  StateCovariance f = StateCovariance::Identity();
  f(0, 2) = 1.0;
  f(1, 3) = 1.0;
  for (int trial = 0; trial < 10; ++trial) {
    PedestrianState s;
    s.position = {0.5 * trial, -1.0};
    s.velocity = {0.03, -0.02};
    s.goal = {3.0, 4.0};
    s.covariance = random_psd(rng);
    const MotionContext ctx{{}, walker_params(), cfg, 1.0};
    const auto next = predict(s, ctx, zero);
    const StateCovariance expected = f * s.covariance * f.transpose();
    CHECK((next.covariance - expected).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(is_psd(next.covariance));
  }
}

TEST_CASE("predict with a neighbor dead ahead follows the ORCA solution") {
  const auto params = walker_params();
  FilterConfig cfg;
  PedestrianState s;
  s.position = {0, 0};
  s.velocity = {0.04, 0.0};
  s.goal = {10, 0};
  const std::vector<orca::Kinematics> others{{{1.0, 0.05}, {-0.04, 0.0}, params.radius}};
  const MotionContext ctx{others, params, cfg, 1.0};
  const auto next = predict(s, ctx, NoiseParams{});

  const orca::Kinematics self{s.position, s.velocity, params.radius};
  const auto planes = orca::orca_halfplanes(self, others, params, 1.0);
  const Vec2 expected = orca::solve_velocity(planes, s.velocity, cfg.max_speed);
  CHECK(norm(next.velocity - expected) < 1e-12);
  CHECK(norm(next.velocity - s.velocity) > 1e-4);
}

TEST_CASE("update: exact measurement, textbook fusion and the scalar oracle") {
  PedestrianState s;
  s.position = {1.0, 2.0};
  s.covariance = StateCovariance::Identity();

  NoiseParams exact;
  exact.meas_sigma = 1e-9;
  const auto pinned = update(s, {3.0, -1.0}, exact);
  CHECK(norm(pinned.position - Vec2{3.0, -1.0}) < 1e-6);

  NoiseParams unit;
  unit.meas_sigma = 1.0;
  const auto fused = update(s, {3.0, -1.0}, unit);
  CHECK(fused.covariance(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(fused.covariance(1, 1) == doctest::Approx(0.5).epsilon(1e-12));

  // Stationary 1-D sequence against a hand-rolled scalar filter.
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 0.3);
  NoiseParams noise{1e-3, 1e-3, 1e-3, 0.3};
  PedestrianState b;
  b.covariance = StateCovariance::Identity() * 4.0;
  oracle::ScalarKalman ref{0.0, 4.0};
  for (int k = 0; k < 200; ++k) {
    const double z = 1.5 + n(rng);
    b = update(b, {z, 0.0}, noise);
    ref.update(z, 0.09);
    CHECK(std::abs(b.position.x - ref.mean) < 1e-9);
    CHECK(std::abs(b.covariance(0, 0) - ref.var) < 1e-9);
  }
}

TEST_CASE("update never increases position variance and keeps covariance PSD") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    PedestrianState s;
    s.covariance = random_psd(rng) + StateCovariance::Identity() * 1e-3;
    const auto post = update(s, {n(rng), n(rng)}, NoiseParams{});
    for (int i = 0; i < 2; ++i) CHECK(post.covariance(i, i) <= s.covariance(i, i) + 1e-12);
    CHECK(is_psd(post.covariance));
  }
}

TEST_CASE("repair_covariance lifts negative eigenvalues") {
  StateCovariance c = StateCovariance::Identity();
  c(0, 0) = -0.5;
  c(1, 2) = 1e-3;
  const auto fixed = repair_covariance(c);
  CHECK(is_psd(fixed));
  CHECK(fixed == fixed.transpose());
}

TEST_CASE("Tracker statuses: active, coasting, lost") {
  FilterConfig cfg;
  cfg.coast_limit = 3;
  Tracker tracker(walker_params(), NoiseParams{}, cfg);
  std::vector<Observation> both{{0, "a", {0, 0}}, {0, "b", {3, 0}}};
  tracker.estimate_frame(0, both);
  for (Frame f = 1; f < 5; ++f) {
    both = {{f, "a", {0.04 * f, 0}}, {f, "b", {3, 0.04 * f}}};
    const auto& crowd = tracker.estimate_frame(f, both);
    CHECK(crowd.statuses.at("a") == TrackStatus::active());
    CHECK(crowd.statuses.at("b") == TrackStatus::active());
  }
  for (Frame f = 5; f < 5 + cfg.coast_limit; ++f) {
    const std::vector<Observation> only_a{{f, "a", {0.04 * f, 0}}};
    const auto& crowd = tracker.estimate_frame(f, only_a);
    CHECK(crowd.statuses.at("b") == TrackStatus::coasting(static_cast<int>(f - 4)));
  }
  const Frame last = 5 + cfg.coast_limit;
  const std::vector<Observation> only_a{{last, "a", {0.04 * last, 0}}};
  const auto& crowd = tracker.estimate_frame(last, only_a);
  CHECK_FALSE(crowd.states.contains("b"));
  CHECK_FALSE(crowd.statuses.contains("b"));
  CHECK(crowd.states.size() == crowd.statuses.size());
}

TEST_CASE("Tracker coasts through skipped frames and rejects going backwards") {
  FilterConfig cfg;
  cfg.coast_limit = 2;
  Tracker tracker(walker_params(), NoiseParams{}, cfg);
  const std::vector<Observation> a0{{0, "a", {0, 0}}};
  tracker.estimate_frame(0, a0);
  const std::vector<Observation> a2{{2, "a", {0.08, 0}}};
  const auto& crowd = tracker.estimate_frame(2, a2);
  CHECK(crowd.statuses.at("a") == TrackStatus::active());
  CHECK(tracker.state().frame == 2);
  // Two-point velocity accounts for the gap.
  CHECK(crowd.states.at("a").velocity.x == doctest::Approx(0.04));
  CHECK_THROWS_AS(tracker.estimate_frame(2, a2), StreamError);
}

TEST_CASE("noiseless straight walker is tracked to 1e-6 after 50 frames") {
  Tracker tracker(walker_params(), NoiseParams{}, FilterConfig{});
  const Vec2 start{-3.0, 1.0};
  const Vec2 v{0.037, -0.011};
  for (Frame f = 0; f <= 50; ++f) {
    const std::vector<Observation> z{{f, "w", start + v * static_cast<double>(f)}};
    tracker.estimate_frame(f, z);
  }
  const auto& s = tracker.state().states.at("w");
  CHECK(norm(s.position - (start + v * 50.0)) < 1e-6);
  CHECK(norm(s.velocity - v) < 1e-6);
}

TEST_CASE("covariance stays PSD through a noisy multi-agent run") {
  Tracker tracker(walker_params(), NoiseParams{}, FilterConfig{});
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 0.05);
  std::bernoulli_distribution drop(0.1);
  for (Frame f = 0; f < 200; ++f) {
    std::vector<Observation> obs;
    for (int a = 0; a < 12; ++a) {
      if (drop(rng)) continue;
      const double lane = (a % 2 == 0) ? 1.0 : -1.0;
      const Vec2 p{lane * (-4.0 + 0.04 * f), 0.5 * a};
      obs.push_back({f, "p" + std::to_string(a), p + Vec2{n(rng), n(rng)}});
    }
    const auto& crowd = tracker.estimate_frame(f, obs);
    for (const auto& [id, s] : crowd.states) {
      CAPTURE(id);
      REQUIRE(is_psd(s.covariance));
      REQUIRE(s.position.finite());
    }
  }
}
