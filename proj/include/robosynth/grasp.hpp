#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "robosynth/exec.hpp"
#include "robosynth/geom.hpp"
#include "robosynth/volume.hpp"

namespace robosynth {

/// Parallel-jaw gripper collision proxy. Gripper frame: +z approach,
/// +y jaw closing axis, +x = y cross z (the gripper plane normal). The tip
/// point (midpoint between closed fingertips) is the frame origin.
struct GripperModel {
  double max_width = 0.08;
  double finger_length = 0.06;
  double finger_thickness = 0.01;
  double palm_size = 0.08;
  double palm_depth = 0.04;
  double sample_step = 0.01;
};

/// Lattice samples of palm and fingers in the gripper frame with the inner
/// finger faces at +-half_opening.
std::vector<Vec3> gripper_local_samples(const GripperModel& model, double half_opening);

struct GraspCandidate {
  Pose pose;
  double width = 0.0;
  double base_score = 0.0;
  Vec3 tip_point = Vec3::Zero();

  Vec3 approach() const { return pose.rotation().col(2); }
  Vec3 jaw_axis() const { return pose.rotation().col(1); }
  Vec3 plane_normal() const { return pose.rotation().col(0); }
};

struct GraspPreference {
  std::optional<Vec3> preferred_position;
  std::optional<Vec3> preferred_approach_direction;
  std::optional<Vec3> preferred_plane_normal;
};

struct GraspSamplerOptions {
  int pair_samples = 2000;
  double cone_deg = 30.0;
  int approach_steps = 12;
  std::size_t top_k = 10;
  std::uint64_t seed = 7;
  double finger_margin = 0.005;  // inner finger face offset beyond the contacts
  double min_width = 0.002;
  // Near-duplicate suppression among the returned candidates.
  double nms_distance = 0.01;
  double nms_angle_deg = 15.0;
  GripperModel gripper;
};

/// Seeded antipodal pair sampler. Rejects candidates whose gripper volume
/// hits an occupied cell of `grid` or encloses points of `cloud`. Returns at
/// most top_k candidates sorted by base_score (descending).
std::vector<GraspCandidate> sample_adaptive_grasps(const PointCloud& cloud,
                                                   const OccupancyGrid& grid,
                                                   const GraspSamplerOptions& options = {},
                                                   ExecPolicy policy = ExecPolicy::parallel);

enum class LiftDescription { top, center };

/// Top-down grasp closing across the shorter horizontal extent of `bbox`.
GraspCandidate central_lift_grasp(const AABB3& bbox, LiftDescription description,
                                  const GripperModel& gripper = {});

struct PreferenceWeights {
  double quality = 1.0;
  double position = 1.0;
  double approach = 1.0;
  double plane_normal = 1.0;
  double position_sigma = 0.05;
};

double preference_score(const GraspCandidate& c, const GraspPreference& pref,
                        const PreferenceWeights& w = {});

/// Stable sort by preference_score, descending.
std::vector<GraspCandidate> rank_by_preference(std::span<const GraspCandidate> cands,
                                               const GraspPreference& pref,
                                               const PreferenceWeights& w = {});

/// <p - 0.1a, p - 0.08a, p>
std::vector<Vec3> pre_grasp_trajectory(const Vec3& p, const Vec3& a);

/// "x y z qw qx qy qz width score" per candidate.
void write_candidates(std::ostream& os, std::span<const GraspCandidate> cands);

}  // namespace robosynth
