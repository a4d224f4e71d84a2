#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "robosynth/geom.hpp"
#include "robosynth/volume.hpp"

namespace robosynth {

/// Half-open pixel rectangle [u_min, u_max) x [v_min, v_max).
struct PixelBox {
  int u_min = 0;
  int v_min = 0;
  int u_max = 0;
  int v_max = 0;

  int width() const { return u_max - u_min; }
  int height() const { return v_max - v_min; }
  bool empty() const { return u_max <= u_min || v_max <= v_min; }
};

struct Detection2D {
  int view_id = 0;
  std::string label;
  PixelBox box;
  double confidence = 1.0;
  // Optional visible-pixel mask (linear pixel indices) from the simulator
  // oracle. Empty means "box only": foreground is then isolated by depth.
  std::vector<std::uint32_t> mask;
};

struct ObjectPercept {
  std::string name;
  std::string label;
  AABB3 bbox;
  PointCloud cloud;
  std::optional<double> support_surface_z;
  // Simulator part labels: point_part[i] indexes part_names, -1 = unlabeled.
  std::vector<std::string> part_names;
  std::vector<int> point_part;
};

struct PlaneInfo {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;  // plane: normal . x = offset
  int inlier_count = 0;
  Vec3 centroid = Vec3::Zero();
};

struct MatchOptions {
  double iou_threshold = 0.25;
  // Also merge when this fraction of the smaller box lies inside the other
  // (0 disables). Catches slivers from heavily occluded views.
  double containment_threshold = 0.0;
  std::size_t max_pixels_per_box = 5000;
  // Optional ground-truth labeler: world point -> part name ("" = none).
  std::function<std::string(const Vec3&)> part_labeler;
};

struct MatchResult {
  std::vector<ObjectPercept> percepts;
  std::vector<std::string> warnings;
};

/// Back-projects every detection, merges same-label detections whose 3D boxes
/// overlap (IoU >= threshold, transitively) and names instances by ascending x.
MatchResult match_views(std::span<const Detection2D> detections,
                        std::span<const DepthImage> depths,
                        const MatchOptions& options = {});

/// Points of the named part; "" returns the whole cloud.
PointCloud extract_part_cloud(const ObjectPercept& percept, std::string_view part);

/// Bounding box of a part's points ("" = whole percept).
AABB3 part_bbox(const ObjectPercept& percept, std::string_view part);

struct PlaneOptions {
  int iterations = 200;
  double inlier_tolerance = 0.005;
  int min_inliers = 50;
  int max_planes = 8;
  std::uint64_t seed = 12345;
};

/// Sequential RANSAC plane extraction, least-squares refit per plane.
std::vector<PlaneInfo> extract_planes(std::span<const Vec3> points,
                                      const PlaneOptions& options = {});

/// Plane of the percept whose inlier centroid is nearest to `position`, with
/// the normal oriented toward `position`.
PlaneInfo detect_plane_near(const ObjectPercept& percept, const Vec3& position,
                            const PlaneOptions& options = {});

/// Least-squares plane through points (PCA). Normal sign is arbitrary.
PlaneInfo fit_plane(std::span<const Vec3> points);

/// PCA normals over a radius neighborhood, oriented away from `inside`.
PointCloud estimate_normals(const PointCloud& cloud, double radius, const Vec3& inside);

/// "name label bbox(6) points support_z" per line.
void write_percepts(std::ostream& os, std::span<const ObjectPercept> percepts);

}  // namespace robosynth
