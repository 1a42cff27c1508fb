#include "crowdsense/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "crowdsense/kernels.hpp"

namespace crowdsense::anomaly {

void DetectorConfig::validate() const {
  if (!(threshold > 0.0)) throw ConfigError("threshold must be > 0");
  if (hysteresis_m < 1 || hysteresis_n < hysteresis_m) {
    throw ConfigError("hysteresis needs 1 <= m <= n");
  }
  if (!(global_fraction > 0.0 && global_fraction <= 1.0)) {
    throw ConfigError("global_fraction must be in (0, 1]");
  }
}

double anomaly_score(const behavior::FeatureVector& bl, const behavior::FeatureVector& bg) {
  if (bl.epoch != bg.epoch) throw NormalizationMismatch("features normalized in different epochs");
  double sum = 0.0;
  for (std::size_t d = 0; d < behavior::kFeatureDims; ++d) {
    const double diff = bl.values[d] - bg.values[d];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

std::vector<double> anomaly_scores(std::span<const behavior::FeatureVector> bl,
                                   std::span<const behavior::FeatureVector> bg) {
  if (bl.size() != bg.size()) throw std::invalid_argument("feature lists differ in length");
  const std::size_t n = bl.size();
  constexpr std::size_t dims = behavior::kFeatureDims;
  std::vector<double> a(dims * n), b(dims * n), out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (bl[i].epoch != bg[i].epoch) {
      throw NormalizationMismatch("features normalized in different epochs");
    }
    for (std::size_t d = 0; d < dims; ++d) {
      a[d * n + i] = bl[i].values[d];
      b[d * n + i] = bg[i].values[d];
    }
  }
  kernels::row_distances({a.data(), dims, n, n}, {b.data(), dims, n, n}, out);
  return out;
}

void classify_scope(std::span<AnomalyEvent> events, std::size_t crowd_size,
                    const DetectorConfig& config) {
  if (crowd_size == 0) throw std::invalid_argument("crowd size must be >= 1");
  const double share = static_cast<double>(events.size()) / static_cast<double>(crowd_size);
  const Scope scope = share >= config.global_fraction ? Scope::Global : Scope::Local;
  for (auto& e : events) e.scope = scope;
}

Detector::Detector(DetectorConfig config) : config_(config) { config_.validate(); }

Detection Detector::detect(Frame frame, std::span<const AgentScore> scores,
                           std::size_t crowd_size) {
  std::set<AgentId> present;
  for (const auto& s : scores) present.insert(s.agent_id);
  std::erase_if(recent_, [&](const auto& kv) { return !present.contains(kv.first); });

  Detection out;
  out.flagged.reserve(scores.size());
  for (const auto& s : scores) {
    const bool exceeds = s.score > config_.threshold;
    auto& window = recent_[s.agent_id];
    window.push_back(exceeds);
    while (window.size() > static_cast<std::size_t>(config_.hysteresis_n)) window.pop_front();
    const auto hits = std::count(window.begin(), window.end(), true);
    const bool flagged = hits >= config_.hysteresis_m;
    out.flagged.push_back(flagged);
    if (flagged && exceeds) {
      out.events.push_back({frame, s.agent_id, s.score, config_.threshold, Scope::Local});
    }
  }
  if (!out.events.empty()) classify_scope(out.events, std::max(crowd_size, scores.size()), config_);
  return out;
}

}  // namespace crowdsense::anomaly
