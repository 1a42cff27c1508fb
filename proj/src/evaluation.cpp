#include "crowdsense/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace crowdsense::eval {

Roc roc_curve(std::span<const LabeledScore> scores) {
  std::size_t positives = 0;
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) throw std::invalid_argument("scores must be finite");
    positives += s.label ? 1 : 0;
  }
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw DegenerateLabels("ROC needs at least one positive and one negative label");
  }

  std::vector<const LabeledScore*> order;
  for (const auto& s : scores) order.push_back(&s);
  std::sort(order.begin(), order.end(),
            [](const LabeledScore* a, const LabeledScore* b) { return a->score > b->score; });

  Roc roc;
  roc.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = order[i]->score;
    for (; i < order.size() && order[i]->score == t; ++i) {
      (order[i]->label ? tp : fp) += 1;
    }
    const RocPoint next{static_cast<double>(fp) / negatives, static_cast<double>(tp) / positives, t};
    const RocPoint& prev = roc.points.back();
    roc.auc += (next.fpr - prev.fpr) * (next.tpr + prev.tpr) * 0.5;
    roc.points.push_back(next);
  }
  return roc;
}

double eer(std::span<const RocPoint> roc) {
  if (roc.empty()) throw std::invalid_argument("empty ROC");
  const auto gap = [](const RocPoint& p) { return p.fpr + p.tpr - 1.0; };
  if (gap(roc.front()) >= 0.0) return roc.front().fpr;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    const double hi = gap(roc[i]);
    if (hi < 0.0) continue;
    const double lo = gap(roc[i - 1]);
    const double t = -lo / (hi - lo);
    return roc[i - 1].fpr + t * (roc[i].fpr - roc[i - 1].fpr);
  }
  return roc.back().fpr;
}

double accuracy_at(std::span<const LabeledScore> scores, double threshold) {
  if (scores.empty()) throw InsufficientData("accuracy needs at least one score");
  std::size_t correct = 0;
  for (const auto& s : scores) correct += ((s.score > threshold) == s.label) ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

Metrics evaluate(std::span<const LabeledScore> scores, double threshold) {
  Roc roc = roc_curve(scores);
  Metrics m;
  m.auc = roc.auc;
  m.eer = eer(roc.points);
  m.accuracy = accuracy_at(scores, threshold);
  m.roc = std::move(roc.points);
  return m;
}

EventMatch match_events(std::span<const LabeledScore> labels,
                        std::span<const anomaly::AnomalyEvent> events, Frame tolerance) {
  if (tolerance < 0) throw std::invalid_argument("tolerance must be >= 0");
  std::map<AgentId, std::vector<Frame>> positive;
  for (const auto& l : labels) {
    if (l.label) positive[l.agent_id].push_back(l.frame);
  }
  std::map<AgentId, std::vector<std::pair<Frame, Frame>>> episodes;
  for (auto& [id, frames] : positive) {
    std::sort(frames.begin(), frames.end());
    frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
    auto& runs = episodes[id];
    for (const Frame f : frames) {
      if (!runs.empty() && runs.back().second + 1 == f) {
        runs.back().second = f;
      } else {
        runs.push_back({f, f});
      }
    }
  }

  EventMatch m;
  std::map<AgentId, std::vector<bool>> hit;
  for (const auto& [id, runs] : episodes) {
    m.episodes += runs.size();
    hit[id].assign(runs.size(), false);
  }
  m.events = events.size();
  for (const auto& e : events) {
    const auto it = episodes.find(e.agent_id);
    if (it == episodes.end()) continue;
    bool correct = false;
    for (std::size_t k = 0; k < it->second.size(); ++k) {
      const auto [first, last] = it->second[k];
      if (e.frame >= first - tolerance && e.frame <= last + tolerance) {
        correct = true;
        hit[e.agent_id][k] = true;
      }
    }
    m.correct_events += correct ? 1 : 0;
  }
  for (const auto& [id, flags] : hit) {
    m.detected += static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
  }
  if (m.episodes > 0) m.recall = static_cast<double>(m.detected) / m.episodes;
  if (m.events > 0) m.precision = static_cast<double>(m.correct_events) / m.events;
  return m;
}

namespace {

// Linear interpolation between closest ranks.
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

TimingReport TimingReport::from(std::vector<double> samples) {
  if (samples.empty()) throw InsufficientData("timing report needs at least one sample");
  TimingReport r;
  r.samples = std::move(samples);
  std::vector<double> sorted = r.samples;
  std::sort(sorted.begin(), sorted.end());
  r.median = quantile(sorted, 0.5);
  r.p95 = quantile(sorted, 0.95);
  r.max = sorted.back();
  return r;
}

TimingReport measure_blt(const PipelineConfig& config, std::span<const Observation> stream,
                         Frame frame_count) {
  Pipeline pipeline(config);
  std::vector<double> samples;
  std::size_t i = 0;
  for (Frame f = 0; f < frame_count; ++f) {
    if (i < stream.size() && stream[i].frame < f) {
      throw StreamError(StreamError::Kind::NonMonotoneFrame, i, stream[i].frame,
                        stream[i].agent_id);
    }
    std::size_t j = i;
    while (j < stream.size() && stream[j].frame == f) ++j;
    samples.push_back(pipeline.process(f, stream.subspan(i, j - i)).seconds);
    i = j;
  }
  return TimingReport::from(std::move(samples));
}

}  // namespace crowdsense::eval
