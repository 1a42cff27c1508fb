#include "crowdsense/orca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crowdsense/errors.hpp"
#include "crowdsense/kernels.hpp"

namespace crowdsense::orca {

namespace {

constexpr double kParallelEpsilon = 1e-12;

struct Line {
  Vec2 point;
  Vec2 direction;
};

bool violates(const Line& line, Vec2 v) { return det(line.direction, line.point - v) > 0.0; }

// Optimizes along line `line_no` subject to the earlier lines and the disc.
bool solve_on_line(std::span<const Line> lines, std::size_t line_no, double radius, Vec2 opt,
                   bool direction_opt, Vec2& result) {
  const Line& line = lines[line_no];
  const double dot_product = dot(line.point, line.direction);
  const double discriminant = dot_product * dot_product + radius * radius - norm_sq(line.point);
  if (discriminant < 0.0) return false;  // line misses the speed disc

  const double sqrt_disc = std::sqrt(discriminant);
  double t_left = -dot_product - sqrt_disc;
  double t_right = -dot_product + sqrt_disc;

  for (std::size_t i = 0; i < line_no; ++i) {
    const double denominator = det(line.direction, lines[i].direction);
    const double numerator = det(lines[i].direction, line.point - lines[i].point);
    if (std::abs(denominator) <= kParallelEpsilon) {
      if (numerator < 0.0) return false;
      continue;
    }
    const double t = numerator / denominator;
    if (denominator >= 0.0) {
      t_right = std::min(t_right, t);
    } else {
      t_left = std::max(t_left, t);
    }
    if (t_left > t_right) return false;
  }

  if (direction_opt) {
    result = line.point + line.direction * (dot(opt, line.direction) > 0.0 ? t_right : t_left);
  } else {
    const double t = std::clamp(dot(line.direction, opt - line.point), t_left, t_right);
    result = line.point + line.direction * t;
  }
  return true;
}

// Incremental 2D LP. Returns lines.size() on success, otherwise the index of
// the first constraint that could not be satisfied.
std::size_t solve_planar(std::span<const Line> lines, double radius, Vec2 opt, bool direction_opt,
                         Vec2& result) {
  if (direction_opt) {
    result = opt * radius;
  } else if (norm_sq(opt) > radius * radius) {
    result = normalized(opt) * radius;
  } else {
    result = opt;
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (violates(lines[i], result)) {
      const Vec2 previous = result;
      if (!solve_on_line(lines, i, radius, opt, direction_opt, result)) {
        result = previous;
        return i;
      }
    }
  }
  return lines.size();
}

// Infeasible case: minimize the largest signed violation, starting from the
// first failing constraint.
void solve_min_violation(std::span<const Line> lines, std::size_t begin, double radius,
                         Vec2& result) {
  double distance = 0.0;
  std::vector<Line> projected;
  for (std::size_t i = begin; i < lines.size(); ++i) {
    if (det(lines[i].direction, lines[i].point - result) <= distance) continue;
    projected.clear();
    for (std::size_t j = 0; j < i; ++j) {
      Line line;
      const double determinant = det(lines[i].direction, lines[j].direction);
      if (std::abs(determinant) <= kParallelEpsilon) {
        if (dot(lines[i].direction, lines[j].direction) > 0.0) continue;
        line.point = (lines[i].point + lines[j].point) * 0.5;
      } else {
        line.point = lines[i].point +
                     lines[i].direction *
                         (det(lines[j].direction, lines[i].point - lines[j].point) / determinant);
      }
      line.direction = normalized(lines[j].direction - lines[i].direction);
      projected.push_back(line);
    }
    const Vec2 previous = result;
    if (solve_planar(projected, radius, perp_left(lines[i].direction), true, result) <
        projected.size()) {
      // Only floating-point error can make this fail; keep the last answer.
      result = previous;
    }
    distance = det(lines[i].direction, lines[i].point - result);
  }
}

std::vector<std::size_t> nearest_within(std::span<const double> d2, std::size_t self,
                                        const AgentParams& params) {
  const double range_sq = params.neighbor_dist * params.neighbor_dist;
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < d2.size(); ++j) {
    if (j != self && d2[j] < range_sq) idx.push_back(j);
  }
  const auto by_distance = [&](std::size_t a, std::size_t b) {
    return d2[a] != d2[b] ? d2[a] < d2[b] : a < b;
  };
  if (idx.size() > params.max_neighbors) {
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(params.max_neighbors),
                      idx.end(), by_distance);
    idx.resize(params.max_neighbors);
  } else {
    std::sort(idx.begin(), idx.end(), by_distance);
  }
  return idx;
}

}  // namespace

AgentParams AgentParams::defaults_for_fps(double fps) {
  AgentParams p;
  p.radius = 0.3;
  p.pref_speed = 1.0 / fps;
  p.max_speed = 1.6 / fps;
  p.time_horizon = 2.0 * fps;
  p.neighbor_dist = 5.0;
  p.max_neighbors = 10;
  return p;
}

void AgentParams::validate() const {
  if (!(radius > 0.0)) throw ConfigError("radius must be > 0");
  if (!(max_speed > 0.0)) throw ConfigError("max_speed must be > 0");
  if (!(pref_speed > 0.0) || pref_speed > max_speed) {
    throw ConfigError("pref_speed must be in (0, max_speed]");
  }
  if (!(time_horizon > 0.0)) throw ConfigError("time_horizon must be > 0");
  if (!(neighbor_dist > 0.0)) throw ConfigError("neighbor_dist must be > 0");
  if (max_neighbors == 0) throw ConfigError("max_neighbors must be positive");
}

Vec2 preferred_velocity(Vec2 position, Vec2 goal, const AgentParams& params) {
  const Vec2 to_goal = goal - position;
  const double dist = norm(to_goal);
  if (dist < kGoalEpsilon) return {};
  return to_goal * (params.pref_speed / dist);
}

std::vector<std::size_t> select_neighbors(std::span<const Kinematics> crowd, std::size_t self,
                                          const AgentParams& params) {
  std::vector<double> xs(crowd.size()), ys(crowd.size()), d2(crowd.size());
  for (std::size_t i = 0; i < crowd.size(); ++i) {
    xs[i] = crowd[i].position.x;
    ys[i] = crowd[i].position.y;
  }
  kernels::squared_distances(xs, ys, crowd[self].position, d2);
  return nearest_within(d2, self, params);
}

std::vector<HalfPlane> orca_halfplanes(const Kinematics& self,
                                       std::span<const Kinematics> neighbors,
                                       const AgentParams& params, double dt) {
  std::vector<HalfPlane> planes;
  planes.reserve(neighbors.size());
  const double inv_horizon = 1.0 / params.time_horizon;

  for (const auto& other : neighbors) {
    const Vec2 rel_pos = other.position - self.position;
    const Vec2 rel_vel = self.velocity - other.velocity;
    const double dist_sq = norm_sq(rel_pos);
    const double combined_radius = self.radius + other.radius;
    const double combined_radius_sq = combined_radius * combined_radius;

    Vec2 direction;
    Vec2 u;
    if (dist_sq > combined_radius_sq) {
      // Vector from the cut-off circle center to the relative velocity.
      const Vec2 w = rel_vel - rel_pos * inv_horizon;
      const double w_length_sq = norm_sq(w);
      const double dot1 = dot(w, rel_pos);

      if (dot1 < 0.0 && dot1 * dot1 > combined_radius_sq * w_length_sq) {
        const double w_length = std::sqrt(w_length_sq);
        const Vec2 unit_w = w / w_length;
        direction = {unit_w.y, -unit_w.x};
        u = unit_w * (combined_radius * inv_horizon - w_length);
      } else {
        const double leg = std::sqrt(dist_sq - combined_radius_sq);
        if (det(rel_pos, w) > 0.0) {
          direction = Vec2{rel_pos.x * leg - rel_pos.y * combined_radius,
                           rel_pos.x * combined_radius + rel_pos.y * leg} /
                      dist_sq;
        } else {
          direction = -Vec2{rel_pos.x * leg + rel_pos.y * combined_radius,
                            -rel_pos.x * combined_radius + rel_pos.y * leg} /
                      dist_sq;
        }
        u = direction * dot(rel_vel, direction) - rel_vel;
      }
    } else {
      // Already overlapping: resolve within one step instead of the horizon.
      const double inv_dt = 1.0 / dt;
      const Vec2 w = rel_vel - rel_pos * inv_dt;
      const double w_length = norm(w);
      const Vec2 unit_w = w_length > 0.0 ? w / w_length : Vec2{1.0, 0.0};
      direction = {unit_w.y, -unit_w.x};
      u = unit_w * (combined_radius * inv_dt - w_length);
    }
    planes.push_back({self.velocity + u * 0.5, perp_left(direction)});
  }
  return planes;
}

Vec2 solve_velocity(std::span<const HalfPlane> halfplanes, Vec2 v_pref, double max_speed) {
  std::vector<Line> lines;
  lines.reserve(halfplanes.size());
  for (const auto& hp : halfplanes) lines.push_back({hp.point, hp.direction()});

  Vec2 result;
  const std::size_t failed = solve_planar(lines, max_speed, v_pref, false, result);
  if (failed < lines.size()) solve_min_violation(lines, failed, max_speed, result);
  return result;
}

std::vector<Kinematics> step_crowd(const StepInput& input) {
  const std::size_t n = input.crowd.size();
  std::vector<double> xs(n), ys(n), d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = input.crowd[i].position.x;
    ys[i] = input.crowd[i].position.y;
  }

  std::vector<Kinematics> next(input.crowd.begin(), input.crowd.end());
  std::vector<Kinematics> neighbors;
  for (std::size_t i = 0; i < n; ++i) {
    const AgentParams& params = input.params[i];
    kernels::squared_distances(xs, ys, input.crowd[i].position, d2);
    neighbors.clear();
    for (std::size_t j : nearest_within(d2, i, params)) neighbors.push_back(input.crowd[j]);
    const auto planes = orca_halfplanes(input.crowd[i], neighbors, params, input.dt);
    Vec2 v = solve_velocity(planes, input.preferred[i], params.max_speed);
    const double speed = norm(v);
    if (speed > params.max_speed) v *= params.max_speed / speed;
    next[i].velocity = v;
  }
  if (input.guard) {
    std::vector<Vec2> velocities(n);
    for (std::size_t i = 0; i < n; ++i) velocities[i] = next[i].velocity;
    guard_step(input.crowd, velocities, input.dt);
    for (std::size_t i = 0; i < n; ++i) next[i].velocity = velocities[i];
  }
  for (std::size_t i = 0; i < n; ++i) next[i].position += next[i].velocity * input.dt;
  return next;
}

void guard_step(std::span<const Kinematics> start, std::span<Vec2> velocities, double dt) {
  const std::size_t n = start.size();
  std::vector<double> xs(n), ys(n), d2(n);
  double max_reach = 0.0;
  double max_radius = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = start[i].position.x;
    ys[i] = start[i].position.y;
    max_reach = std::max(max_reach, norm(velocities[i]) * dt);
    max_radius = std::max(max_radius, start[i].radius);
  }

  // Broad phase: only pairs that can touch within one step.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  const double reach = 2.0 * (max_radius + max_reach);
  for (std::size_t i = 0; i < n; ++i) {
    kernels::squared_distances(xs, ys, start[i].position, d2);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (d2[j] < reach * reach) pairs.emplace_back(i, j);
    }
  }

  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& [i, j] : pairs) {
      const Vec2 d0 = start[j].position - start[i].position;
      const Vec2 delta = (velocities[j] - velocities[i]) * dt;
      const double combined = start[i].radius + start[j].radius;
      const double c = norm_sq(d0);
      const double end_sq = norm_sq(d0 + delta);
      if (end_sq >= combined * combined || end_sq >= c) continue;

      // Largest fraction of the step that keeps the pair admissible.
      double lambda = 0.0;
      if (c > combined * combined) {
        const double a = norm_sq(delta);
        const double b = dot(d0, delta);
        const double disc = std::max(0.0, b * b - a * (c - combined * combined));
        lambda = std::clamp((-b - std::sqrt(disc)) / a, 0.0, 1.0);
        const double scaled_sq = norm_sq(d0 + delta * lambda);
        if (scaled_sq < combined * combined && scaled_sq < c) lambda = 0.0;  // rounding
      }
      velocities[i] *= lambda;
      velocities[j] *= lambda;
      changed = true;
    }
  }
}

}  // namespace crowdsense::orca
