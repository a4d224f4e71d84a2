#pragma once

#include <array>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace robosynth {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Rigid transform in SE(3). The quaternion is normalized on construction.
struct Pose {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();

  Pose() = default;
  Pose(const Vec3& p, const Quat& q);
  Pose(const Vec3& p, const Mat3& r);

  static Pose identity() { return Pose(); }

  Mat3 rotation() const { return orientation.toRotationMatrix(); }
  Vec3 apply(const Vec3& p) const { return orientation * p + position; }
  Vec3 apply_direction(const Vec3& d) const { return orientation * d; }
};

Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& a);

/// Rotates `point` about the line through `axis_point` with direction
/// `axis_dir` by `angle` radians (right-handed). Throws invalid_argument
/// when |axis_dir| differs from 1 by more than 1e-6.
Vec3 rotate_about_axis(const Vec3& point, const Vec3& axis_dir,
                       const Vec3& axis_point, double angle);

/// Distance from `point` to the infinite line (axis_point, axis_dir).
double distance_to_line(const Vec3& point, const Vec3& axis_dir,
                        const Vec3& axis_point);

/// Angle between two directions in radians, robust near 0 and pi.
double angle_between(const Vec3& a, const Vec3& b);

/// Rotation angle of q_a^-1 q_b in radians.
double rotation_distance(const Quat& a, const Quat& b);

/// Orthonormal frame whose columns are (x, y, z); y and z must be orthogonal
/// unit vectors, x is completed as y cross z.
Mat3 frame_from_yz(const Vec3& y, const Vec3& z);

/// Any unit vector orthogonal to `v`.
Vec3 any_orthogonal(const Vec3& v);

struct AABB3 {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  AABB3() = default;
  AABB3(const Vec3& lo, const Vec3& hi) : min(lo), max(hi) {}

  bool valid() const { return (min.array() <= max.array()).all(); }
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  double volume() const;
  AABB3 inflated(double margin) const;
  void expand(const Vec3& p);
  void expand(const AABB3& other);
};

Vec3 aabb_center(const AABB3& b);
bool point_in_aabb(const Vec3& p, const AABB3& b);
double intersection_volume(const AABB3& a, const AABB3& b);
double iou(const AABB3& a, const AABB3& b);
bool overlaps_xy(const AABB3& a, const AABB3& b, double shrink = 0.0);
AABB3 bounding_box(std::span<const Vec3> points);
/// AABB of the box [-half, half] placed at `pose`.
AABB3 transformed_box(const Pose& pose, const Vec3& half);

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // empty, or one unit normal per point

  bool has_normals() const {
    return !normals.empty() && normals.size() == points.size();
  }
  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

PointCloud cloud_transform(const PointCloud& c, const Pose& t);

/// Flat [x, y, z, qw, qx, qy, qz] serialization used by scene files.
std::array<double, 7> pose_to_array(const Pose& p);
Pose pose_from_array(std::span<const double> a);

}  // namespace robosynth
