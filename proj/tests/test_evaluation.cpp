#include "doctest.h"

#include <cmath>
#include <random>

#include "crowdsense/errors.hpp"
#include "crowdsense/evaluation.hpp"
#include "crowdsense/simulator.hpp"

using namespace crowdsense;
using namespace crowdsense::eval;

namespace {

std::vector<LabeledScore> make(std::initializer_list<std::pair<double, bool>> items) {
  std::vector<LabeledScore> out;
  Frame f = 0;
  for (const auto& [s, l] : items) out.push_back({f++, "a", s, l});
  return out;
}

// Fraction of (positive, negative) pairs ranked correctly, ties count half.
double pairwise_auc(const std::vector<LabeledScore>& s) {
  double good = 0.0;
  double pairs = 0.0;
  for (const auto& p : s) {
    if (!p.label) continue;
    for (const auto& n : s) {
      if (n.label) continue;
      pairs += 1.0;
      good += p.score > n.score ? 1.0 : (p.score == n.score ? 0.5 : 0.0);
    }
  }
  return good / pairs;
}

void check_roc_shape(const Roc& roc) {
  REQUIRE(roc.points.size() >= 2);
  CHECK(roc.points.front().fpr == 0.0);
  CHECK(roc.points.front().tpr == 0.0);
  CHECK(std::isinf(roc.points.front().threshold));
  CHECK(roc.points.back().fpr == 1.0);
  CHECK(roc.points.back().tpr == 1.0);
  for (std::size_t i = 1; i < roc.points.size(); ++i) {
    CHECK(roc.points[i].fpr >= roc.points[i - 1].fpr);
    CHECK(roc.points[i].tpr >= roc.points[i - 1].tpr);
    CHECK(roc.points[i].threshold < roc.points[i - 1].threshold);
  }
}

std::vector<Observation> crowd_stream(int agents, Frame frames) {
  sim::ScenarioOverrides o;
  o.agents = agents;
  o.duration = frames;
  o.seed = 1;
  return sim::simulate(sim::build_scenario("lane_flow", o), 1).trajectories;
}

}  // namespace

TEST_CASE("perfectly separated scores") {
  const auto s = make({{0.1, false}, {0.2, false}, {0.8, true}, {0.9, true}});
  const auto roc = roc_curve(s);
  check_roc_shape(roc);
  CHECK(roc.auc == 1.0);
  bool through_corner = false;
  for (const auto& p : roc.points) through_corner |= (p.fpr == 0.0 && p.tpr == 1.0);
  CHECK(through_corner);
  CHECK(eer(roc.points) == 0.0);
}

TEST_CASE("scores independent of labels give AUC near 0.5") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution coin(0.3);
  std::vector<LabeledScore> s;
  for (int i = 0; i < 10000; ++i) s.push_back({i, "x", u(rng), coin(rng)});
  const auto roc = roc_curve(s);
  check_roc_shape(roc);
  CHECK(std::abs(roc.auc - 0.5) <= 0.05);
}

TEST_CASE("trapezoidal AUC equals the pairwise ranking fraction") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> level(0, 6);  // coarse levels force ties
  std::uniform_int_distribution<int> size(2, 40);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<LabeledScore> s;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) s.push_back({i, "x", level(rng) * 0.25, coin(rng)});
    s[0].label = true;
    s[1].label = false;
    const auto roc = roc_curve(s);
    check_roc_shape(roc);
    CHECK(std::abs(roc.auc - pairwise_auc(s)) <= 1e-9);
  }
}

TEST_CASE("tied scores form a single step") {
  const auto s = make({{0.5, true}, {0.5, false}, {0.5, true}, {0.5, false}});
  const auto roc = roc_curve(s);
  REQUIRE(roc.points.size() == 2);
  CHECK(roc.auc == 0.5);
  CHECK(eer(roc.points) == 0.5);
}

TEST_CASE("single-class input is rejected") {
  CHECK_THROWS_AS(roc_curve(make({{0.1, true}, {0.2, true}})), DegenerateLabels);
  CHECK_THROWS_AS(roc_curve(make({{0.1, false}})), DegenerateLabels);
  CHECK_THROWS_AS(evaluate(make({{0.1, false}, {0.3, false}}), 0.2), DegenerateLabels);
}

TEST_CASE("EER of the diagonal is exactly one half") {
  const std::vector<RocPoint> diagonal{{0, 0, INFINITY}, {0.25, 0.25, 3}, {0.5, 0.5, 2},
                                       {0.75, 0.75, 1}, {1, 1, 0}};
  CHECK(eer(diagonal) == 0.5);
  const std::vector<RocPoint> two{{0, 0, INFINITY}, {1, 1, 0}};
  CHECK(eer(two) == 0.5);
}

TEST_CASE("EER on hand-built curves") {
  // Crossing between (0, 0.6) and (0.4, 1.0): gap goes -0.4 -> 0.4, halfway.
  const std::vector<RocPoint> three{{0, 0, INFINITY}, {0, 0.6, 2}, {0.4, 1.0, 1}, {1, 1, 0}};
  CHECK(eer(three) == doctest::Approx(0.2).epsilon(1e-15));

  // Positives 0.9 0.8 0.3, negatives 0.7 0.2: crossing at fpr = 1/3.
  const auto s = make({{0.9, true}, {0.8, true}, {0.3, true}, {0.7, false}, {0.2, false}});
  CHECK(eer(roc_curve(s).points) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("accuracy at a threshold") {
  const auto pos = make({{0.2, true}, {0.7, true}});
  CHECK(accuracy_at(pos, 0.1) == 1.0);
  const auto neg = make({{0.2, false}, {0.7, false}});
  CHECK(accuracy_at(neg, 0.8) == 1.0);

  // Six samples; at 0.5 the predictions are 0.9, 0.6, 0.55 positive.
  // TP = 2 (0.9, 0.6), FP = 1 (0.55), TN = 2 (0.1, 0.5), FN = 1 (0.3).
  const auto mixed = make({{0.9, true}, {0.6, true}, {0.55, false}, {0.5, false}, {0.3, true}, {0.1, false}});
  CHECK(accuracy_at(mixed, 0.5) == doctest::Approx(4.0 / 6.0));
  // A score equal to the threshold is a negative prediction.
  CHECK(accuracy_at(mixed, 0.55) == doctest::Approx(5.0 / 6.0));
  CHECK(accuracy_at(mixed, 0.0) == doctest::Approx(3.0 / 6.0));
  CHECK(accuracy_at(mixed, 1.0) == doctest::Approx(3.0 / 6.0));

  // Constant between observed scores.
  CHECK(accuracy_at(mixed, 0.56) == accuracy_at(mixed, 0.59));
  CHECK_THROWS_AS(accuracy_at(std::vector<LabeledScore>{}, 0.5), InsufficientData);
}

TEST_CASE("evaluate bundles the metrics") {
  const auto s = make({{0.9, true}, {0.8, true}, {0.3, true}, {0.7, false}, {0.2, false}});
  const auto m = evaluate(s, 0.5);
  CHECK(m.auc == doctest::Approx(pairwise_auc(s)));
  CHECK(m.accuracy == doctest::Approx(accuracy_at(s, 0.5)));
  CHECK(m.eer == doctest::Approx(1.0 / 3.0));
  CHECK(m.roc.size() == 6);
}

TEST_CASE("timing report statistics") {
  const auto r = TimingReport::from({5, 1, 4, 2, 3});
  CHECK(r.median == 3.0);
  CHECK(r.max == 5.0);
  CHECK(r.p95 == doctest::Approx(4.8));
  CHECK(r.samples.size() == 5);
  CHECK_THROWS_AS(TimingReport::from({}), InsufficientData);
}

TEST_CASE("BLT on an empty stream is well formed") {
  const auto cfg = PipelineConfig::defaults_for_fps(25);
  const auto r = measure_blt(cfg, {}, 40);
  CHECK(r.samples.size() == 40);
  CHECK(r.median >= 0.0);
  CHECK(r.median < 1e-3);
  CHECK(r.p95 <= r.max);
}

TEST_CASE("BLT sample counts and scaling with crowd size") {
  const auto cfg = PipelineConfig::defaults_for_fps(25);
  const auto small = crowd_stream(50, 200);
  const auto large = crowd_stream(100, 200);
  const auto a = measure_blt(cfg, small, 200);
  const auto b = measure_blt(cfg, small, 200);
  CHECK(a.samples.size() == b.samples.size());
  const auto c = measure_blt(cfg, large, 200);
  MESSAGE("median 50 agents " << a.median << " s, 100 agents " << c.median << " s");
  CHECK(c.median <= 4.0 * std::min(a.median, b.median));
}

TEST_CASE("event-level matching with temporal tolerance") {
  std::vector<LabeledScore> labels;
  // Agent a: episodes [10, 14] and [40, 41]; agent b: none.
  for (Frame f = 0; f < 60; ++f) {
    labels.push_back({f, "a", 0.0, (f >= 10 && f <= 14) || f == 40 || f == 41});
    labels.push_back({f, "b", 0.0, false});
  }
  const auto ev = [](Frame f, const char* id) { return anomaly::AnomalyEvent{f, id, 2.0, 1.0, anomaly::Scope::Local}; };
  const std::vector<anomaly::AnomalyEvent> events{ev(20, "a"), ev(29, "a"), ev(12, "b"), ev(53, "a")};
  const auto m = match_events(labels, events, 12);
  CHECK(m.episodes == 2);
  CHECK(m.detected == 2);        // 20 near the first, 29 and 53 near the second
  CHECK(m.events == 4);
  CHECK(m.correct_events == 3);  // the event on b has no episode
  CHECK(m.recall == 1.0);
  CHECK(m.precision == 0.75);

  const auto strict = match_events(labels, events, 0);
  CHECK(strict.detected == 0);
  CHECK(strict.precision == 0.0);
  CHECK(match_events(labels, {}, 12).recall == 0.0);
}
