#include "crowdsense/filter.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace crowdsense::filter {

namespace {

constexpr double kJacobianStep = 1e-5;
constexpr double kInitialGoalVariance = 100.0;

Vec2 head(const StateVector& x, int i) { return {x(i), x(i + 1)}; }

StateVector stack(Vec2 p, Vec2 v, Vec2 g) {
  StateVector x;
  x << p.x, p.y, v.x, v.y, g.x, g.y;
  return x;
}

}  // namespace

void NoiseParams::validate() const {
  if (!(process_sigma_pos > 0.0) || !(process_sigma_vel > 0.0) || !(process_sigma_goal > 0.0)) {
    throw ConfigError("process noise sigmas must be > 0");
  }
  if (!(meas_sigma > 0.0)) throw ConfigError("meas_sigma must be > 0");
}

void FilterConfig::validate() const {
  if (goal_window < 2) throw ConfigError("goal_window must be >= 2");
  if (!(goal_lookahead > 0.0)) throw ConfigError("goal_lookahead must be > 0");
  if (coast_limit < 0) throw ConfigError("coast_limit must be >= 0");
  if (!(goal_gain >= 0.0 && goal_gain <= 1.0)) throw ConfigError("goal_gain must be in [0, 1]");
  if (!(max_speed > 0.0)) throw ConfigError("filter max_speed must be > 0");
}

Vec2 infer_goal(std::span<const Vec2> recent, const FilterConfig& config) {
  if (recent.size() < 2) throw InsufficientHistory("goal inference needs at least 2 positions");
  const std::size_t w = std::min(recent.size(), static_cast<std::size_t>(config.goal_window));
  const auto window = recent.subspan(recent.size() - w);
  // The mean of consecutive displacements telescopes to end minus start.
  const Vec2 mean_step = (window.back() - window.front()) / static_cast<double>(w - 1);
  return window.back() + mean_step * config.goal_lookahead;
}

StateVector motion_map(const StateVector& x, const MotionContext& ctx) {
  const Vec2 p = head(x, 0);
  const Vec2 v = head(x, 2);
  const Vec2 g = head(x, 4);
  const Vec2 toward_goal = normalized(g - p) * norm(v);
  const Vec2 v_pref = v + (toward_goal - v) * ctx.config.goal_gain;
  const orca::Kinematics self{p, v, ctx.params.radius};
  const auto planes = orca::orca_halfplanes(self, ctx.neighbors, ctx.params, ctx.dt);
  const Vec2 v_new = orca::solve_velocity(planes, v_pref, ctx.config.max_speed);
  return stack(p + v_new * ctx.dt, v_new, g);
}

StateCovariance repair_covariance(const StateCovariance& c) {
  StateCovariance sym = 0.5 * (c + c.transpose());
  Eigen::SelfAdjointEigenSolver<StateCovariance> eig(sym);
  if (eig.eigenvalues().minCoeff() >= 0.0) return sym;
  const StateVector clamped = eig.eigenvalues().cwiseMax(0.0);
  sym = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (sym + sym.transpose());
}

PedestrianState predict(const PedestrianState& belief, const MotionContext& ctx,
                        const NoiseParams& noise) {
  const StateVector x = belief.mean();
  const StateVector fx = motion_map(x, ctx);

  StateCovariance jac;
  for (int j = 0; j < 6; ++j) {
    StateVector hi = x;
    StateVector lo = x;
    hi(j) += kJacobianStep;
    lo(j) -= kJacobianStep;
    jac.col(j) = (motion_map(hi, ctx) - motion_map(lo, ctx)) / (2.0 * kJacobianStep);
  }

  StateVector q;
  const double qp = noise.process_sigma_pos * noise.process_sigma_pos;
  const double qv = noise.process_sigma_vel * noise.process_sigma_vel;
  const double qg = noise.process_sigma_goal * noise.process_sigma_goal;
  q << qp, qp, qv, qv, qg, qg;
  const StateCovariance cov = jac * belief.covariance * jac.transpose() + StateCovariance(q.asDiagonal());
  return PedestrianState::from_mean(fx, repair_covariance(cov));
}

PedestrianState update(const PedestrianState& belief, Vec2 z, const NoiseParams& noise) {
  Eigen::Matrix<double, 2, 6> h = Eigen::Matrix<double, 2, 6>::Zero();
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  const Eigen::Matrix2d r = Eigen::Matrix2d::Identity() * (noise.meas_sigma * noise.meas_sigma);
  const StateCovariance& p = belief.covariance;

  const Eigen::Matrix2d s = h * p * h.transpose() + r;
  const Eigen::Matrix<double, 6, 2> k = p * h.transpose() * s.inverse();
  const Eigen::Vector2d innovation(z.x - belief.position.x, z.y - belief.position.y);
  const StateVector x = belief.mean() + k * innovation;

  const StateCovariance i_kh = StateCovariance::Identity() - k * h;
  const StateCovariance cov = i_kh * p * i_kh.transpose() + k * r * k.transpose();
  return PedestrianState::from_mean(x, repair_covariance(cov));
}

Tracker::Tracker(orca::AgentParams params, NoiseParams noise, FilterConfig config)
    : params_(params), noise_(noise), config_(config) {
  params_.validate();
  noise_.validate();
  config_.validate();
}

int Tracker::track_age(const AgentId& id) const {
  const auto it = tracks_.find(id);
  if (it == tracks_.end()) return 0;
  return static_cast<int>(crowd_.frame - it->second.first_frame) + 1;
}

const CrowdState& Tracker::estimate_frame(Frame frame, std::span<const Observation> observations) {
  if (crowd_.frame >= 0 && frame <= crowd_.frame) {
    throw StreamError(StreamError::Kind::NonMonotoneFrame, 0, frame, "");
  }
  // Coast through skipped frames while anything is still alive.
  for (Frame f = crowd_.frame + 1; crowd_.frame >= 0 && f < frame && !tracks_.empty(); ++f) {
    step(f, {});
  }
  step(frame, observations);
  return crowd_;
}

void Tracker::refresh_goal(PedestrianState& s, const Track& t) const {
  const auto& [f0, p0] = t.recent.front();
  const auto& [f1, p1] = t.recent.back();
  const double a = config_.goal_lookahead / static_cast<double>(f1 - f0);
  s.goal = p1 + (p1 - p0) * a;
  // g is a linear combination of two raw observations.
  const double var = noise_.meas_sigma * noise_.meas_sigma * ((1.0 + a) * (1.0 + a) + a * a);
  s.covariance.block<2, 4>(4, 0).setZero();
  s.covariance.block<4, 2>(0, 4).setZero();
  s.covariance.block<2, 2>(4, 4) = Eigen::Matrix2d::Identity() * var;
}

void Tracker::start_track(const Observation& z) {
  PedestrianState s;
  s.position = z.position;
  s.goal = z.position;
  const double m2 = noise_.meas_sigma * noise_.meas_sigma;
  StateVector d;
  d << m2, m2, 4.0 * m2, 4.0 * m2, kInitialGoalVariance, kInitialGoalVariance;
  s.covariance = d.asDiagonal();
  crowd_.states[z.agent_id] = s;
  crowd_.statuses[z.agent_id] = TrackStatus::active();
  Track t;
  t.first_frame = z.frame;
  t.observed = 1;
  t.recent.emplace_back(z.frame, z.position);
  tracks_[z.agent_id] = std::move(t);
}

void Tracker::step(Frame frame, std::span<const Observation> observations) {
  std::vector<AgentId> ids;
  std::vector<orca::Kinematics> snapshot;
  for (const auto& [id, s] : crowd_.states) {
    ids.push_back(id);
    snapshot.push_back({s.position, s.velocity, params_.radius});
  }

  std::vector<PedestrianState> predicted(ids.size());
  std::vector<orca::Kinematics> neighbors;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    neighbors.clear();
    for (std::size_t j : orca::select_neighbors(snapshot, i, params_)) neighbors.push_back(snapshot[j]);
    const MotionContext ctx{neighbors, params_, config_, 1.0};
    predicted[i] = predict(crowd_.states[ids[i]], ctx, noise_);
  }
  for (std::size_t i = 0; i < ids.size(); ++i) crowd_.states[ids[i]] = predicted[i];

  std::map<AgentId, const Observation*> seen;
  for (const auto& z : observations) seen[z.agent_id] = &z;

  for (const auto& id : ids) {
    auto& s = crowd_.states[id];
    auto& t = tracks_[id];
    const auto it = seen.find(id);
    if (it == seen.end()) {
      const int missed = crowd_.statuses[id].missed_frames + 1;
      if (missed > config_.coast_limit) {
        crowd_.states.erase(id);
        crowd_.statuses.erase(id);
        tracks_.erase(id);
      } else {
        crowd_.statuses[id] = TrackStatus::coasting(missed);
      }
      continue;
    }

    const Vec2 z = it->second->position;
    t.recent.emplace_back(frame, z);
    while (t.recent.size() > static_cast<std::size_t>(config_.goal_window)) t.recent.pop_front();
    ++t.observed;
    ++t.frames_since_goal;
    crowd_.statuses[id] = TrackStatus::active();

    if (t.observed == 2) {
      // Second sighting: restart from a two-point velocity estimate.
      const auto& [f0, p0] = t.recent.front();
      const double gap = static_cast<double>(frame - f0);
      const double m2 = noise_.meas_sigma * noise_.meas_sigma;
      s.position = z;
      s.velocity = (z - p0) / gap;
      StateVector d;
      d << m2, m2, 2.0 * m2 / (gap * gap), 2.0 * m2 / (gap * gap), 0.0, 0.0;
      s.covariance = d.asDiagonal();
      refresh_goal(s, t);
      t.frames_since_goal = 0;
      continue;
    }

    s = update(s, z, noise_);
    if (t.frames_since_goal >= config_.goal_window) {
      refresh_goal(s, t);
      t.frames_since_goal = 0;
    }
  }

  for (const auto& z : observations) {
    if (!crowd_.states.contains(z.agent_id)) start_track(z);
  }
  crowd_.frame = frame;
}

}  // namespace crowdsense::filter
