#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "crowdsense/domain.hpp"

using namespace crowdsense;

namespace {

StreamError::Kind kind_of(const std::vector<Observation>& obs) {
  try {
    validate_stream(obs);
  } catch (const StreamError& e) {
    return e.kind();
  }
  FAIL("expected a StreamError");
  return StreamError::Kind::DuplicateObservation;
}

}  // namespace

TEST_CASE("validate_stream accepts the empty stream") {
  CHECK(validate_stream({}).empty());
}

TEST_CASE("validate_stream rejects a duplicate (frame, agent)") {
  const std::vector<Observation> obs{{0, "1", {0, 0}}, {0, "1", {1, 1}}};
  try {
    validate_stream(obs);
    FAIL("no error");
  } catch (const StreamError& e) {
    CHECK(e.kind() == StreamError::Kind::DuplicateObservation);
    CHECK(e.frame() == 0);
    CHECK(e.agent_id() == "1");
  }
}

TEST_CASE("validate_stream rejects decreasing frames with the offending index") {
  const std::vector<Observation> obs{{2, "a", {0, 0}}, {1, "a", {0, 0}}};
  try {
    validate_stream(obs);
    FAIL("no error");
  } catch (const StreamError& e) {
    CHECK(e.kind() == StreamError::Kind::NonMonotoneFrame);
    CHECK(e.index() == 1);
  }
}

TEST_CASE("validate_stream rejects non-finite coordinates") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK(kind_of({{0, "a", {0, 0}}, {0, "b", {nan, 0}}}) ==
        StreamError::Kind::NonFiniteCoordinate);
  CHECK(kind_of({{0, "a", {std::numeric_limits<double>::infinity(), 0}}}) ==
        StreamError::Kind::NonFiniteCoordinate);
}

TEST_CASE("validate_stream allows the same agent in successive frames") {
  const std::vector<Observation> obs{{0, "a", {0, 0}}, {0, "b", {1, 0}}, {1, "a", {0, 1}},
                                     {1, "b", {1, 1}}, {3, "a", {0, 2}}};
  const auto out = validate_stream(obs);
  CHECK(out == obs);
  CHECK(validate_stream(out) == out);  // idempotent
}

TEST_CASE("scene_statistics on two static agents") {
  const std::vector<Observation> obs{{0, "a", {0, 0}}, {0, "b", {0, 2}}, {1, "a", {0, 0}},
                                     {1, "b", {0, 2}}};
  const auto s = scene_statistics(obs);
  CHECK(s.mean_nn_spacing == doctest::Approx(2.0));
  CHECK(s.mean_speed == 0.0);
  CHECK(s.bounds.min == Vec2{0, 0});
  CHECK(s.bounds.max == Vec2{0, 2});
}

TEST_CASE("scene_statistics needs two agents and two frames") {
  CHECK_THROWS_AS(scene_statistics(std::vector<Observation>{{0, "a", {0, 0}}, {1, "a", {1, 0}}}),
                  InsufficientData);
  CHECK_THROWS_AS(scene_statistics(std::vector<Observation>{{0, "a", {0, 0}}, {0, "b", {1, 0}}}),
                  InsufficientData);
}

TEST_CASE("scene_statistics nearest-neighbor spacing matches all-pairs brute force") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coord(-10.0, 10.0);
  std::vector<Observation> obs;
  for (Frame f = 0; f < 3; ++f) {
    for (int a = 0; a < 10; ++a) obs.push_back({f, std::to_string(a), {coord(rng), coord(rng)}});
  }

  double expected = 0.0;
  int count = 0;
  for (Frame f = 0; f < 3; ++f) {
    for (int i = 0; i < 10; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < 10; ++j) {
        if (i == j) continue;
        const auto& pi = obs[static_cast<std::size_t>(f * 10 + i)].position;
        const auto& pj = obs[static_cast<std::size_t>(f * 10 + j)].position;
        best = std::min(best, std::hypot(pi.x - pj.x, pi.y - pj.y));
      }
      expected += best;
      ++count;
    }
  }
  expected /= count;
  CHECK(scene_statistics(obs).mean_nn_spacing == doctest::Approx(expected).epsilon(1e-12));

  // Relabeling agents leaves every statistic unchanged.
  auto relabeled = obs;
  for (auto& o : relabeled) o.agent_id = "z" + std::to_string(9 - std::stoi(o.agent_id));
  const auto a = scene_statistics(obs);
  const auto b = scene_statistics(relabeled);
  CHECK(a.mean_nn_spacing == doctest::Approx(b.mean_nn_spacing).epsilon(1e-12));
  CHECK(a.mean_speed == doctest::Approx(b.mean_speed).epsilon(1e-12));
  CHECK(a.bounds.min == b.bounds.min);
  CHECK(a.bounds.max == b.bounds.max);
}

TEST_CASE("PedestrianState mean round-trips through the stacked vector") {
  PedestrianState s;
  s.position = {1, 2};
  s.velocity = {3, 4};
  s.goal = {5, 6};
  const auto back = PedestrianState::from_mean(s.mean(), s.covariance);
  CHECK(back.position == s.position);
  CHECK(back.velocity == s.velocity);
  CHECK(back.goal == s.goal);
}
