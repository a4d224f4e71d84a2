#include "robosynth/geom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "robosynth/error.hpp"

namespace robosynth {

Pose::Pose(const Vec3& p, const Quat& q) : position(p), orientation(q) {
  if (orientation.norm() < 1e-12) {
    throw Error(ErrorCode::invalid_argument, "zero-norm quaternion");
  }
  orientation.normalize();
}

Pose::Pose(const Vec3& p, const Mat3& r) : position(p), orientation(r) {
  orientation.normalize();
}

Pose compose(const Pose& a, const Pose& b) {
  return Pose(a.orientation * b.position + a.position,
              a.orientation * b.orientation);
}

Pose inverse(const Pose& a) {
  const Quat qi = a.orientation.conjugate();
  return Pose(-(qi * a.position), qi);
}

Vec3 rotate_about_axis(const Vec3& point, const Vec3& axis_dir,
                       const Vec3& axis_point, double angle) {
  if (std::abs(axis_dir.norm() - 1.0) > 1e-6) {
    throw Error(ErrorCode::invalid_argument, "rotation axis is not unit length");
  }
  // Rodrigues: v' = v cos + (k x v) sin + k (k.v)(1 - cos)
  const Vec3 v = point - axis_point;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const Vec3 rotated =
      v * c + axis_dir.cross(v) * s + axis_dir * axis_dir.dot(v) * (1.0 - c);
  return axis_point + rotated;
}

double distance_to_line(const Vec3& point, const Vec3& axis_dir,
                        const Vec3& axis_point) {
  const Vec3 d = axis_dir.normalized();
  const Vec3 v = point - axis_point;
  return (v - d * d.dot(v)).norm();
}

double angle_between(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

double rotation_distance(const Quat& a, const Quat& b) {
  return a.angularDistance(b);
}

Mat3 frame_from_yz(const Vec3& y, const Vec3& z) {
  Mat3 r;
  r.col(0) = y.cross(z);
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

Vec3 any_orthogonal(const Vec3& v) {
  const Vec3 n = v.normalized();
  const Vec3 helper = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return n.cross(helper).normalized();
}

double AABB3::volume() const {
  if (!valid()) return 0.0;
  const Vec3 e = extent();
  return e.x() * e.y() * e.z();
}

AABB3 AABB3::inflated(double margin) const {
  return AABB3(min - Vec3::Constant(margin), max + Vec3::Constant(margin));
}

void AABB3::expand(const Vec3& p) {
  min = min.cwiseMin(p);
  max = max.cwiseMax(p);
}

void AABB3::expand(const AABB3& other) {
  if (!other.valid()) return;
  min = min.cwiseMin(other.min);
  max = max.cwiseMax(other.max);
}

Vec3 aabb_center(const AABB3& b) { return b.center(); }

bool point_in_aabb(const Vec3& p, const AABB3& b) {
  return (p.array() >= b.min.array()).all() && (p.array() <= b.max.array()).all();
}

double intersection_volume(const AABB3& a, const AABB3& b) {
  const Vec3 lo = a.min.cwiseMax(b.min);
  const Vec3 hi = a.max.cwiseMin(b.max);
  const Vec3 d = (hi - lo).cwiseMax(Vec3::Zero());
  return d.x() * d.y() * d.z();
}

double iou(const AABB3& a, const AABB3& b) {
  const double inter = intersection_volume(a, b);
  const double uni = a.volume() + b.volume() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

bool overlaps_xy(const AABB3& a, const AABB3& b, double shrink) {
  return a.min.x() + shrink < b.max.x() && b.min.x() + shrink < a.max.x() &&
         a.min.y() + shrink < b.max.y() && b.min.y() + shrink < a.max.y();
}

AABB3 bounding_box(std::span<const Vec3> points) {
  AABB3 box;
  for (const auto& p : points) box.expand(p);
  return box;
}

AABB3 transformed_box(const Pose& pose, const Vec3& half) {
  const Mat3 r = pose.rotation().cwiseAbs();
  const Vec3 e = r * half;
  return AABB3(pose.position - e, pose.position + e);
}

PointCloud cloud_transform(const PointCloud& c, const Pose& t) {
  PointCloud out;
  out.points.reserve(c.points.size());
  for (const auto& p : c.points) out.points.push_back(t.apply(p));
  if (c.has_normals()) {
    out.normals.reserve(c.normals.size());
    for (const auto& n : c.normals) out.normals.push_back(t.apply_direction(n));
  }
  return out;
}

std::array<double, 7> pose_to_array(const Pose& p) {
  const auto& q = p.orientation;
  return {p.position.x(), p.position.y(), p.position.z(),
          q.w(), q.x(), q.y(), q.z()};
}

Pose pose_from_array(std::span<const double> a) {
  if (a.size() == 3) return Pose(Vec3(a[0], a[1], a[2]), Quat::Identity());
  if (a.size() != 7) {
    throw Error(ErrorCode::invalid_argument,
                "pose array must have 7 entries [x,y,z,qw,qx,qy,qz]");
  }
  return Pose(Vec3(a[0], a[1], a[2]), Quat(a[3], a[4], a[5], a[6]));
}

}  // namespace robosynth
