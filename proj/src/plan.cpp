#include "robosynth/plan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "robosynth/error.hpp"

namespace robosynth {

std::string to_string(GripperAction a) {
  switch (a) {
    case GripperAction::open: return "open";
    case GripperAction::close: return "close";
    default: return "none";
  }
}

double control_cost(std::span<const Waypoint> wps, double lambda_acc) {
  double length = 0.0;
  double acc = 0.0;
  for (std::size_t i = 1; i < wps.size(); ++i) {
    length += (wps[i].pose.position - wps[i - 1].pose.position).norm();
  }
  for (std::size_t i = 2; i < wps.size(); ++i) {
    const Vec3 d2 = wps[i].pose.position - 2.0 * wps[i - 1].pose.position +
                    wps[i - 2].pose.position;
    acc += d2.squaredNorm();
  }
  return length + lambda_acc * acc;
}

void assign_velocities(std::vector<Waypoint>& wps, double dt) {
  const std::size_t n = wps.size();
  if (n < 2) {
    for (auto& w : wps) w.velocity = Vec3::Zero();
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == n ? n - 1 : i + 1;
    wps[i].velocity = (wps[b].pose.position - wps[a].pose.position) / (dt * (b - a));
  }
}

Trajectory make_trajectory(std::vector<Waypoint> wps, double lambda_acc, double dt) {
  assign_velocities(wps, dt);
  Trajectory t;
  t.cost = control_cost(wps, lambda_acc);
  t.waypoints = std::move(wps);
  return t;
}

Trajectory straight_line(const Pose& start, const Vec3& axis, double distance, int n) {
  const double norm = axis.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::invalid_argument, "move direction has zero norm");
  }
  if (!(distance > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "move distance must be positive");
  }
  if (n < 2) throw Error(ErrorCode::invalid_argument, "straight line needs n >= 2");
  const Vec3 step = axis / norm * distance;
  std::vector<Waypoint> wps(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    wps[i].pose = Pose(i + 1 == n ? Vec3(start.position + step) : Vec3(start.position + t * step),
                       start.orientation);
  }
  return make_trajectory(std::move(wps));
}

Trajectory arc_path_around_joint(const Pose& current, const Vec3& joint_axis,
                                 const Vec3& joint_position, int n, double angle_deg) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "arc path needs n >= 1");
  if (std::abs(joint_axis.norm() - 1.0) > 1e-6) {
    throw Error(ErrorCode::invalid_argument, "joint axis must be unit length");
  }
  const double total = deg2rad(angle_deg);
  std::vector<Waypoint> wps(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) {
    const double ang = k == n ? total : total * k / n;
    const Quat r(Eigen::AngleAxisd(ang, joint_axis));
    wps[k - 1].pose = Pose(rotate_about_axis(current.position, joint_axis, joint_position, ang),
                           Quat(r * current.orientation));
  }
  return make_trajectory(std::move(wps));
}

namespace {

bool exempt(const Vec3& p, const PlanConstraints& c) {
  return std::any_of(c.exempt_regions.begin(), c.exempt_regions.end(),
                     [&](const AABB3& b) { return point_in_aabb(p, b); });
}

CollisionHit check_samples(const Pose& pose, std::span<const Vec3> local,
                           const PlanConstraints& c) {
  CollisionHit h;
  if (!c.grid) return h;
  for (const auto& s : local) {
    const Vec3 p = pose.apply(s);
    const Occupancy st = query_occupancy(*c.grid, p);
    const bool blocked = st == Occupancy::occupied ||
                         (st == Occupancy::unknown && c.treat_unknown_as == UnknownPolicy::occupied);
    if (blocked && !exempt(p, c)) {
      h.hit = true;
      h.point = p;
      h.state = st;
      h.reason = st == Occupancy::occupied ? "occupied cell" : "unknown cell";
      return h;
    }
  }
  return h;
}

bool in_workspace(const Vec3& p, const AABB3& ws) {
  return point_in_aabb(p, ws.inflated(1e-9));
}

int dyadic_substeps(double length, double max_step) {
  int count = 1;
  while (length / count > max_step && count < (1 << 12)) count *= 2;
  return count;
}

CollisionHit check_path_with(std::span<const Waypoint> wps, std::span<const Vec3> local,
                             const PlanConstraints& c) {
  CollisionHit h;
  for (const auto& w : wps) {
    if (!in_workspace(w.pose.position, c.workspace)) {
      h.hit = true;
      h.point = w.pose.position;
      h.state = Occupancy::out_of_bounds;
      h.reason = "workspace exit";
      return h;
    }
  }
  if (wps.empty()) return h;
  const double max_step = 0.5 * (c.grid ? c.grid->spec.voxel_size : 0.01);
  for (std::size_t i = 0; i + 1 < wps.size(); ++i) {
    const Pose& a = wps[i].pose;
    const Pose& b = wps[i + 1].pose;
    const int count = dyadic_substeps((b.position - a.position).norm(), max_step);
    for (int s = 0; s < count; ++s) {
      const double t = static_cast<double>(s) / count;
      const Pose p(a.position + t * (b.position - a.position),
                   a.orientation.slerp(t, b.orientation));
      h = check_samples(p, local, c);
      if (h.hit) return h;
    }
  }
  return check_samples(wps.back().pose, local, c);
}

std::vector<Waypoint> resample(const std::vector<Vec3>& poly, const Pose& start, const Pose& goal,
                               int m) {
  std::vector<double> cum(poly.size(), 0.0);
  for (std::size_t i = 1; i < poly.size(); ++i) {
    cum[i] = cum[i - 1] + (poly[i] - poly[i - 1]).norm();
  }
  const double total = cum.back();
  std::vector<Waypoint> out(static_cast<std::size_t>(m));
  std::size_t seg = 0;
  for (int i = 0; i < m; ++i) {
    const double f = m == 1 ? 1.0 : static_cast<double>(i) / (m - 1);
    Vec3 p;
    if (i == 0) {
      p = start.position;
    } else if (i == m - 1) {
      p = goal.position;
    } else {
      const double s = f * total;
      while (seg + 2 < poly.size() && cum[seg + 1] < s) ++seg;
      const double len = cum[seg + 1] - cum[seg];
      const double t = len > 0.0 ? std::clamp((s - cum[seg]) / len, 0.0, 1.0) : 0.0;
      p = poly[seg] + t * (poly[seg + 1] - poly[seg]);
    }
    out[i].pose = Pose(p, start.orientation.slerp(f, goal.orientation));
  }
  return out;
}

}  // namespace

CollisionHit check_pose(const Pose& pose, const PlanConstraints& c) {
  const auto local = gripper_local_samples(c.gripper, 0.5 * c.finger_opening);
  return check_samples(pose, local, c);
}

CollisionHit check_path(std::span<const Waypoint> wps, const PlanConstraints& c) {
  const auto local = gripper_local_samples(c.gripper, 0.5 * c.finger_opening);
  return check_path_with(wps, local, c);
}

Trajectory plan_free_path(const Pose& start, const Pose& goal, const PlanConstraints& c,
                          const PlannerOptions& opt, ExecPolicy policy) {
  if (!c.workspace.valid()) throw Error(ErrorCode::invalid_argument, "degenerate workspace");
  if (!in_workspace(start.position, c.workspace)) {
    throw Error(ErrorCode::precondition_violation, "start pose outside workspace");
  }
  if (!in_workspace(goal.position, c.workspace)) {
    throw Error(ErrorCode::precondition_violation, "goal pose outside workspace");
  }
  if (opt.samples < 1 || opt.waypoints < 2 || opt.control_points < 0) {
    throw Error(ErrorCode::invalid_argument, "bad planner options");
  }

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, opt.sigma);
  const Vec3 d = goal.position - start.position;
  std::vector<std::vector<Waypoint>> cands;
  std::vector<double> costs;
  cands.reserve(static_cast<std::size_t>(opt.samples));
  for (int s = 0; s < opt.samples; ++s) {
    std::vector<Vec3> poly{start.position};
    for (int k = 1; k <= opt.control_points; ++k) {
      Vec3 q = start.position + d * (static_cast<double>(k) / (opt.control_points + 1));
      if (s > 0) q += Vec3(gauss(rng), gauss(rng), gauss(rng));
      poly.push_back(q);
    }
    poly.push_back(goal.position);
    auto wps = resample(poly, start, goal, opt.waypoints);
    costs.push_back(control_cost(wps, opt.lambda_acc));
    cands.push_back(std::move(wps));
  }

  const auto local = gripper_local_samples(c.gripper, 0.5 * c.finger_opening);
  std::vector<std::size_t> order(cands.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return costs[a] < costs[b]; });

  std::size_t chosen = cands.size();
  CollisionHit best_fail;
  if (policy == ExecPolicy::serial) {
    // Reference: evaluate every candidate, then take the cost minimum.
    std::vector<CollisionHit> hits(cands.size());
    for (std::size_t i = 0; i < cands.size(); ++i) hits[i] = check_path_with(cands[i], local, c);
    for (auto i : order) {
      if (!hits[i].hit) {
        chosen = i;
        break;
      }
    }
    best_fail = hits[order.front()];
  } else {
    const std::size_t batch = std::max<std::size_t>(1, opt.batch);
    std::vector<CollisionHit> hits(batch);
    for (std::size_t start_i = 0; start_i < order.size() && chosen == cands.size();
         start_i += batch) {
      const auto n = static_cast<std::int64_t>(std::min(batch, order.size() - start_i));
#pragma omp parallel for schedule(dynamic, 1)
      for (std::int64_t j = 0; j < n; ++j) {
        const auto k = static_cast<std::size_t>(j);
        hits[k] = check_path_with(cands[order[start_i + k]], local, c);
      }
      if (start_i == 0) best_fail = hits[0];
      for (std::int64_t j = 0; j < n; ++j) {
        if (!hits[static_cast<std::size_t>(j)].hit) {
          chosen = order[start_i + static_cast<std::size_t>(j)];
          break;
        }
      }
    }
  }
  if (chosen == cands.size()) {
    std::ostringstream msg;
    msg << "all " << cands.size() << " candidates infeasible; straight line: " << best_fail.reason
        << " at (" << best_fail.point.x() << ", " << best_fail.point.y() << ", "
        << best_fail.point.z() << ")";
    throw Error(ErrorCode::planning_failed, msg.str());
  }
  return make_trajectory(std::move(cands[chosen]), opt.lambda_acc, opt.dt);
}

void write_trajectory(std::ostream& os, const Trajectory& t) {
  os << "# x y z qw qx qy qz vx vy vz action\n";
  for (const auto& w : t.waypoints) {
    for (double v : pose_to_array(w.pose)) os << v << ' ';
    os << w.velocity.x() << ' ' << w.velocity.y() << ' ' << w.velocity.z() << ' '
       << to_string(w.action) << '\n';
  }
  os << "# cost " << t.cost << '\n';
}

}  // namespace robosynth
