#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "robosynth/exec.hpp"
#include "robosynth/geom.hpp"
#include "robosynth/grasp.hpp"
#include "robosynth/volume.hpp"

namespace robosynth {

enum class GripperAction { none, open, close };

std::string to_string(GripperAction a);

struct Waypoint {
  Pose pose;
  Vec3 velocity = Vec3::Zero();
  GripperAction action = GripperAction::none;
};

struct Trajectory {
  std::vector<Waypoint> waypoints;
  double cost = 0.0;
};

enum class UnknownPolicy { free, occupied };

struct PlanConstraints {
  AABB3 workspace;
  std::shared_ptr<const OccupancyGrid> grid;  // null: no obstacles
  UnknownPolicy treat_unknown_as = UnknownPolicy::free;
  std::vector<AABB3> exempt_regions;
  GripperModel gripper;
  double finger_opening = 0.08;  // distance between inner finger faces
};

struct PlannerOptions {
  int samples = 256;
  int control_points = 3;
  double sigma = 0.1;
  int waypoints = 20;
  double lambda_acc = 1.0;
  double dt = 0.1;
  std::uint64_t seed = 0;
  std::size_t batch = 16;  // parallel evaluation granularity
};

/// Path length plus lambda_acc times the summed squared second differences.
double control_cost(std::span<const Waypoint> waypoints, double lambda_acc = 1.0);

/// Central differences over a fixed per-waypoint duration, one-sided at the
/// ends, zero for a single waypoint.
void assign_velocities(std::vector<Waypoint>& waypoints, double dt = 0.1);

Trajectory make_trajectory(std::vector<Waypoint> waypoints, double lambda_acc = 1.0,
                           double dt = 0.1);

Trajectory straight_line(const Pose& start, const Vec3& axis, double distance, int n);

/// Waypoints k = 1..n: `current` rotated about the axis line by k * angle / n.
Trajectory arc_path_around_joint(const Pose& current, const Vec3& joint_axis,
                                 const Vec3& joint_position, int n, double angle_deg);

struct CollisionHit {
  bool hit = false;
  Vec3 point = Vec3::Zero();
  Occupancy state = Occupancy::free;
  std::string reason;
};

/// Gripper collision proxy at one pose against the constraint grid.
CollisionHit check_pose(const Pose& pose, const PlanConstraints& c);

/// Checks every waypoint and the swept gripper between consecutive waypoints
/// (dyadic substeps of at most half a voxel), plus the workspace bound.
CollisionHit check_path(std::span<const Waypoint> waypoints, const PlanConstraints& c);

/// Zeroth-order planner: straight line plus Gaussian-perturbed control-point
/// candidates; returns the feasible candidate of minimum control cost.
Trajectory plan_free_path(const Pose& start, const Pose& goal, const PlanConstraints& c,
                          const PlannerOptions& options = {},
                          ExecPolicy policy = ExecPolicy::parallel);

/// "x y z qw qx qy qz vx vy vz action" per waypoint.
void write_trajectory(std::ostream& os, const Trajectory& t);

}  // namespace robosynth
