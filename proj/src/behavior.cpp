#include "crowdsense/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "crowdsense/kernels.hpp"

namespace crowdsense::behavior {

namespace {

constexpr double kGoalEpsilon = 1e-9;
constexpr int kMaxIterations = 100;
constexpr std::size_t kClusterDims = 4;

struct KMeansResult {
  std::vector<int> labels;
  std::vector<double> centroids;  // k x kClusterDims, row-major
  std::size_t k = 0;
  double sse = 0.0;
};

// Column-major point table so each clustering dimension is contiguous.
struct PointTable {
  std::vector<double> data;
  std::size_t n = 0;

  kernels::SoaView view() const { return {data.data(), kClusterDims, n, n}; }
  double at(std::size_t c, std::size_t i) const { return data[c * n + i]; }
};

void update_centroids(const PointTable& pts, const std::vector<int>& labels, KMeansResult& r) {
  std::vector<double> sums(r.k * kClusterDims, 0.0);
  std::vector<std::size_t> counts(r.k, 0);
  for (std::size_t i = 0; i < pts.n; ++i) {
    const auto l = static_cast<std::size_t>(labels[i]);
    ++counts[l];
    for (std::size_t c = 0; c < kClusterDims; ++c) sums[l * kClusterDims + c] += pts.at(c, i);
  }
  for (std::size_t l = 0; l < r.k; ++l) {
    if (counts[l] == 0) continue;  // an empty cluster keeps its centroid
    for (std::size_t c = 0; c < kClusterDims; ++c) {
      r.centroids[l * kClusterDims + c] = sums[l * kClusterDims + c] / counts[l];
    }
  }
}

KMeansResult kmeans(const PointTable& pts, std::size_t k, std::mt19937_64& rng) {
  KMeansResult r;
  std::vector<double> min_sq(pts.n);
  r.labels.assign(pts.n, 0);

  // k-means++ seeding: first centre uniform, the rest with probability
  // proportional to squared distance from the chosen ones.
  std::uniform_int_distribution<std::size_t> pick(0, pts.n - 1);
  const auto add_centre = [&](std::size_t i) {
    for (std::size_t c = 0; c < kClusterDims; ++c) r.centroids.push_back(pts.at(c, i));
    ++r.k;
  };
  add_centre(pick(rng));
  while (r.k < k) {
    kernels::nearest_centroid(pts.view(), r.centroids, r.k, r.labels, min_sq);
    const double total = std::accumulate(min_sq.begin(), min_sq.end(), 0.0);
    if (total <= 0.0) break;  // fewer distinct points than k
    std::uniform_real_distribution<double> u(0.0, total);
    const double target = u(rng);
    double acc = 0.0;
    std::size_t chosen = pts.n - 1;
    for (std::size_t i = 0; i < pts.n; ++i) {
      acc += min_sq[i];
      if (acc >= target && min_sq[i] > 0.0) {
        chosen = i;
        break;
      }
    }
    add_centre(chosen);
  }

  std::vector<int> previous;
  for (int it = 0; it < kMaxIterations; ++it) {
    kernels::nearest_centroid(pts.view(), r.centroids, r.k, r.labels, min_sq);
    if (r.labels == previous) break;
    previous = r.labels;
    update_centroids(pts, r.labels, r);
  }
  r.sse = std::accumulate(min_sq.begin(), min_sq.end(), 0.0);
  return r;
}

// Reassigns members of undersized clusters to the nearest kept centroid.
void dissolve_small(const PointTable& pts, std::size_t min_size, KMeansResult& r) {
  std::vector<std::size_t> counts(r.k, 0);
  for (int l : r.labels) ++counts[static_cast<std::size_t>(l)];
  std::vector<double> kept;
  std::vector<int> kept_label;
  for (std::size_t l = 0; l < r.k; ++l) {
    if (counts[l] >= min_size) {
      kept.insert(kept.end(), r.centroids.begin() + l * kClusterDims,
                  r.centroids.begin() + (l + 1) * kClusterDims);
      kept_label.push_back(static_cast<int>(l));
    }
  }
  if (kept_label.size() == r.k) return;
  if (kept_label.empty()) {
    r.labels.assign(pts.n, 0);
    r.k = 1;
    r.centroids.assign(kClusterDims, 0.0);
    update_centroids(pts, r.labels, r);
    return;
  }
  std::vector<int> nearest(pts.n);
  std::vector<double> min_sq(pts.n);
  kernels::nearest_centroid(pts.view(), kept, kept_label.size(), nearest, min_sq);
  for (std::size_t i = 0; i < pts.n; ++i) {
    if (counts[static_cast<std::size_t>(r.labels[i])] < min_size) {
      r.labels[i] = kept_label[static_cast<std::size_t>(nearest[i])];
    }
  }
  update_centroids(pts, r.labels, r);
}

}  // namespace

BehaviorFeature BehaviorFeature::from(Vec2 mean_velocity, Vec2 goal_offset) {
  BehaviorFeature f;
  f.mean_velocity = mean_velocity;
  f.speed = norm(mean_velocity);
  f.heading_degenerate = !(f.speed > kSpeedEpsilon);
  if (!f.heading_degenerate) f.heading = mean_velocity / f.speed;
  const double g = norm(goal_offset);
  f.goal_degenerate = !(g > kGoalEpsilon);
  if (!f.goal_degenerate) f.goal_dir = goal_offset / g;
  return f;
}

Components BehaviorFeature::components() const {
  return {mean_velocity.x, mean_velocity.y, speed, heading.x, heading.y, goal_dir.x, goal_dir.y};
}

BehaviorFeature local_feature(std::span<const PedestrianState> window) {
  if (window.empty()) throw EmptyWindow("local feature needs at least one state");
  Vec2 v;
  Vec2 g;
  for (const auto& s : window) {
    v += s.velocity;
    g += s.goal - s.position;
  }
  const double n = static_cast<double>(window.size());
  return BehaviorFeature::from(v / n, g / n);
}

BehaviorFeature average(std::span<const BehaviorFeature> features) {
  if (features.empty()) throw EmptyWindow("cannot average an empty set of features");
  Vec2 v;
  Vec2 g;
  Vec2 flow;
  for (const auto& f : features) {
    v += f.mean_velocity;
    g += f.goal_dir;
    flow += f.cluster_flow;
  }
  const double n = static_cast<double>(features.size());
  auto out = BehaviorFeature::from(v / n, g / n);
  out.cluster_flow = flow / n;
  return out;
}

void ClusterOptions::validate() const {
  if (fixed_k < 0) throw ConfigError("cluster count must be auto (0) or positive");
  if (max_k < 1) throw ConfigError("max_k must be >= 1");
  if (!(neighbor_radius > 0.0)) throw ConfigError("neighbor_radius must be > 0");
  if (!(spread_limit > 0.0)) throw ConfigError("spread_limit must be > 0");
  if (min_cluster_size < 1) throw ConfigError("min_cluster_size must be >= 1");
}

std::vector<Cluster> assign_clusters(std::span<const ClusterPoint> points,
                                     const ClusterOptions& options) {
  if (points.empty()) return {};
  std::vector<const ClusterPoint*> sorted;
  for (const auto& p : points) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(),
            [](const ClusterPoint* a, const ClusterPoint* b) { return a->id < b->id; });

  PointTable pts;
  pts.n = sorted.size();
  pts.data.resize(kClusterDims * pts.n);
  for (std::size_t i = 0; i < pts.n; ++i) {
    const auto& p = *sorted[i];
    pts.data[0 * pts.n + i] = p.position.x / options.neighbor_radius;
    pts.data[1 * pts.n + i] = p.position.y / options.neighbor_radius;
    pts.data[2 * pts.n + i] = p.feature.heading.x;
    pts.data[3 * pts.n + i] = p.feature.heading.y;
  }

  const std::size_t k_cap = std::min<std::size_t>(static_cast<std::size_t>(options.max_k), pts.n);
  const auto run = [&](std::size_t k) {
    std::seed_seq seq{options.seed, static_cast<std::uint64_t>(k)};
    std::mt19937_64 rng(seq);
    return kmeans(pts, k, rng);
  };

  KMeansResult best;
  if (options.fixed_k > 0) {
    best = run(std::min<std::size_t>(static_cast<std::size_t>(options.fixed_k), pts.n));
  } else {
    for (std::size_t k = 1; k <= k_cap; ++k) {
      best = run(k);
      if (best.sse / static_cast<double>(pts.n) <= options.spread_limit) break;
    }
  }
  if (pts.n >= static_cast<std::size_t>(options.min_cluster_size)) {
    dissolve_small(pts, static_cast<std::size_t>(options.min_cluster_size), best);
  }

  // Number clusters by first member in id order.
  std::vector<int> renumber(best.k, -1);
  std::vector<Cluster> clusters;
  for (std::size_t i = 0; i < pts.n; ++i) {
    const auto l = static_cast<std::size_t>(best.labels[i]);
    if (renumber[l] < 0) {
      renumber[l] = static_cast<int>(clusters.size());
      Cluster c;
      c.id = renumber[l];
      std::copy_n(best.centroids.begin() + l * kClusterDims, kClusterDims, c.centroid.begin());
      clusters.push_back(std::move(c));
    }
    auto& c = clusters[static_cast<std::size_t>(renumber[l])];
    c.members.push_back(sorted[i]->id);
    c.mean_flow += sorted[i]->feature.mean_velocity;
  }
  for (auto& c : clusters) c.mean_flow = c.mean_flow / static_cast<double>(c.members.size());
  return clusters;
}

BehaviorFeature cluster_sample(const AgentId& self, const Cluster& cluster,
                               const std::map<AgentId, BehaviorFeature>& locals) {
  std::vector<BehaviorFeature> mates;
  for (const auto& id : cluster.members) {
    if (id != self || cluster.members.size() == 1) mates.push_back(locals.at(id));
  }
  auto out = average(mates);
  out.cluster_flow = cluster.mean_flow;
  return out;
}

Normalizer::Normalizer(NormalizerOptions options) : options_(options) {
  if (options_.window < 1) throw ConfigError("normalizer window must be >= 1");
  if (options_.warmup < 1) throw ConfigError("normalizer warmup must be >= 1");
  std_.fill(1.0);
}

void Normalizer::add_frame(std::span<const BehaviorFeature> features) {
  Moments m;
  for (const auto& f : features) {
    const auto c = f.components();
    m.count += 1.0;
    for (std::size_t d = 0; d < kFeatureDims; ++d) {
      const double delta = c[d] - m.mean[d];
      m.mean[d] += delta / m.count;
      m.m2[d] += delta * (c[d] - m.mean[d]);
    }
  }
  frames_.push_back(m);
  while (frames_.size() > static_cast<std::size_t>(options_.window)) frames_.pop_front();
  ++frames_seen_;
  recompute();
}

void Normalizer::recompute() {
  Moments total;
  for (const auto& m : frames_) {
    if (m.count == 0.0) continue;
    const double n = total.count + m.count;
    for (std::size_t d = 0; d < kFeatureDims; ++d) {
      const double delta = m.mean[d] - total.mean[d];
      total.mean[d] += delta * m.count / n;
      total.m2[d] += m.m2[d] + delta * delta * total.count * m.count / n;
    }
    total.count = n;
  }
  mean_ = total.mean;
  const double speed_floor = options_.velocity_floor * std::abs(mean_[2]);
  for (std::size_t d = 0; d < kFeatureDims; ++d) {
    const double raw = total.count > 0.0 ? std::sqrt(total.m2[d] / total.count) : 0.0;
    const double floor = d < 3 ? speed_floor : options_.direction_floor;
    std_[d] = std::max({raw, floor, kStdFloor});
  }
}

FeatureVector Normalizer::normalize(const BehaviorFeature& feature) const {
  if (!warmed_up()) throw NotWarmedUp("normalizer has not seen enough frames");
  FeatureVector out;
  out.epoch = frames_seen_;
  const auto c = feature.components();
  for (std::size_t d = 0; d < kFeatureDims; ++d) out.values[d] = (c[d] - mean_[d]) / std_[d];
  return out;
}

void BehaviorConfig::validate() const {
  if (local_window < 1) throw ConfigError("local window must be >= 1 frame");
  if (global_window < 1) throw ConfigError("global window must be >= 1 frame");
  if (!(velocity_floor >= 0.0) || !(direction_floor >= 0.0)) {
    throw ConfigError("normalizer floors must be >= 0");
  }
  clustering.validate();
}

BehaviorEngine::BehaviorEngine(BehaviorConfig config)
    : config_(config),
      normalizer_(NormalizerOptions{config.global_window, config.local_window,
                                    config.velocity_floor, config.direction_floor}) {
  config_.validate();
}

const std::vector<AgentBehavior>& BehaviorEngine::step(const CrowdState& crowd) {
  std::erase_if(history_, [&](const auto& kv) { return !crowd.states.contains(kv.first); });

  std::map<AgentId, BehaviorFeature> locals;
  std::vector<ClusterPoint> points;
  for (const auto& [id, s] : crowd.states) {
    auto& h = history_[id].states;
    h.push_back(s);
    while (h.size() > static_cast<std::size_t>(config_.local_window)) h.pop_front();
    const std::vector<PedestrianState> window(h.begin(), h.end());
    locals[id] = local_feature(window);
    points.push_back({id, s.position, locals[id]});
  }

  if (config_.scope == GlobalScope::Crowd && !points.empty()) {
    Cluster all;
    for (const auto& p : points) {
      all.members.push_back(p.id);
      all.mean_flow += p.feature.mean_velocity;
    }
    all.mean_flow = all.mean_flow / static_cast<double>(points.size());
    clusters_ = {all};
  } else {
    ClusterOptions opts = config_.clustering;
    std::seed_seq seq{opts.seed, static_cast<std::uint64_t>(crowd.frame)};
    std::uint64_t frame_seed[1];
    seq.generate(frame_seed, frame_seed + 1);
    opts.seed = frame_seed[0];
    clusters_ = assign_clusters(points, opts);
  }

  std::map<AgentId, int> membership;
  for (const auto& c : clusters_) {
    for (const auto& id : c.members) {
      membership[id] = c.id;
      locals[id].cluster_flow = c.mean_flow;
    }
  }

  std::vector<BehaviorFeature> frame_features;
  frame_features.reserve(locals.size());
  for (const auto& [id, f] : locals) frame_features.push_back(f);
  normalizer_.add_frame(frame_features);

  out_.clear();
  for (const auto& [id, s] : crowd.states) {
    auto& h = history_[id];
    const int cluster = membership.at(id);
    h.global_samples.push_back(cluster_sample(id, clusters_[static_cast<std::size_t>(cluster)], locals));
    while (h.global_samples.size() > static_cast<std::size_t>(config_.global_window)) {
      h.global_samples.pop_front();
    }
    const std::vector<BehaviorFeature> samples(h.global_samples.begin(), h.global_samples.end());

    AgentBehavior b;
    b.id = id;
    b.position = s.position;
    b.velocity = s.velocity;
    b.local = locals[id];
    b.global = global_feature(samples);
    b.global.cluster_flow = locals[id].cluster_flow;
    b.cluster = cluster;
    b.scorable = normalizer_.warmed_up() &&
                 h.states.size() >= static_cast<std::size_t>(config_.local_window);
    if (normalizer_.warmed_up()) {
      b.bl = normalizer_.normalize(b.local);
      b.bg = normalizer_.normalize(b.global);
    }
    out_.push_back(std::move(b));
  }
  return out_;
}

}  // namespace crowdsense::behavior
