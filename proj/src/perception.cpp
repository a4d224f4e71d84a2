#include "robosynth/perception.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "robosynth/error.hpp"
#include "spatial_hash.hpp"

namespace robosynth {

namespace {

const DepthImage* find_view(std::span<const DepthImage> depths, int view_id) {
  for (const auto& d : depths) {
    if (d.view_id == view_id) return &d;
  }
  return nullptr;
}

std::vector<std::uint32_t> foreground_pixels(const Detection2D& det, const DepthImage& img) {
  std::vector<std::uint32_t> pixels;
  const PixelBox& b = det.box;
  if (!det.mask.empty()) {
    for (auto idx : det.mask) {
      const int u = static_cast<int>(idx % img.width);
      const int v = static_cast<int>(idx / img.width);
      if (u >= b.u_min && u < b.u_max && v >= b.v_min && v < b.v_max && img.valid(u, v)) {
        pixels.push_back(idx);
      }
    }
    std::sort(pixels.begin(), pixels.end());
    return pixels;
  }
  // No mask: gate depths around the median of the central third of the box.
  std::vector<double> center;
  const int cu0 = b.u_min + b.width() / 3, cu1 = b.u_max - b.width() / 3;
  const int cv0 = b.v_min + b.height() / 3, cv1 = b.v_max - b.height() / 3;
  for (int v = cv0; v < std::max(cv1, cv0 + 1); ++v)
    for (int u = cu0; u < std::max(cu1, cu0 + 1); ++u)
      if (img.valid(u, v)) center.push_back(img.at(u, v));
  if (center.empty()) return pixels;
  std::nth_element(center.begin(), center.begin() + center.size() / 2, center.end());
  const double median = center[center.size() / 2];
  const double gate =
      std::max(b.width() / img.intrinsics.fx, b.height() / img.intrinsics.fy) * median;
  for (int v = b.v_min; v < b.v_max; ++v)
    for (int u = b.u_min; u < b.u_max; ++u)
      if (img.valid(u, v) && std::abs(img.at(u, v) - median) <= gate)
        pixels.push_back(static_cast<std::uint32_t>(v * img.width + u));
  return pixels;
}

struct DetectionCloud {
  std::size_t det_index;
  std::vector<Vec3> points;
  AABB3 box;
};

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

double support_from_cloud(const std::vector<Vec3>& pts, const AABB3& box) {
  const Vec3 c = box.center();
  const Vec3 h = 0.25 * box.extent();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) {
    if (std::abs(p.x() - c.x()) <= h.x() && std::abs(p.y() - c.y()) <= h.y()) {
      best = std::min(best, p.z());
    }
  }
  return std::isfinite(best) ? best : box.min.z();
}

}  // namespace

MatchResult match_views(std::span<const Detection2D> detections,
                        std::span<const DepthImage> depths, const MatchOptions& options) {
  MatchResult result;
  if (detections.empty()) return result;
  if (depths.empty()) {
    throw Error(ErrorCode::precondition_violation, "match_views needs at least one view");
  }

  // Canonical detection order makes the output independent of input order.
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  auto det_key = [&](std::size_t i) {
    const auto& d = detections[i];
    return std::make_tuple(d.label, d.view_id, d.box.u_min, d.box.v_min, d.box.u_max,
                           d.box.v_max);
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return det_key(a) < det_key(b); });

  std::vector<DetectionCloud> clouds;
  for (std::size_t i : order) {
    const auto& det = detections[i];
    const DepthImage* img = find_view(depths, det.view_id);
    if (img == nullptr) {
      throw Error(ErrorCode::precondition_violation,
                  "detection references unknown view " + std::to_string(det.view_id));
    }
    auto pixels = foreground_pixels(det, *img);
    if (pixels.empty()) {
      result.warnings.push_back("dropped detection '" + det.label + "' in view " +
                                std::to_string(det.view_id) + ": no valid depth pixels");
      continue;
    }
    const std::size_t stride =
        (pixels.size() + options.max_pixels_per_box - 1) / options.max_pixels_per_box;
    DetectionCloud dc{i, {}, {}};
    for (std::size_t k = 0; k < pixels.size(); k += std::max<std::size_t>(stride, 1)) {
      const int u = static_cast<int>(pixels[k] % img->width);
      const int v = static_cast<int>(pixels[k] / img->width);
      const Vec3 p = img->backproject(u, v);
      dc.points.push_back(p);
      dc.box.expand(p);
    }
    clouds.push_back(std::move(dc));
  }

  const int n = static_cast<int>(clouds.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (detections[clouds[a].det_index].label != detections[clouds[b].det_index].label)
        continue;
      const AABB3& ba = clouds[a].box;
      const AABB3& bb = clouds[b].box;
      bool merge = iou(ba, bb) >= options.iou_threshold;
      if (!merge && options.containment_threshold > 0.0) {
        const Vec3 lo = ba.min.cwiseMax(bb.min), hi = ba.max.cwiseMin(bb.max);
        if ((hi.array() >= lo.array()).all()) {
          // pad by 1 mm so flat slivers still have volume
          const Vec3 pad = Vec3::Constant(0.001);
          const double inter = ((hi - lo) + pad).prod();
          const double small = std::min(((ba.max - ba.min) + pad).prod(),
                                        ((bb.max - bb.min) + pad).prod());
          merge = inter >= options.containment_threshold * small;
        }
      }
      if (merge) {
        const int ra = find_root(parent, a), rb = find_root(parent, b);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
      }
    }
  }

  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < n; ++i) groups[find_root(parent, i)].push_back(i);

  std::vector<ObjectPercept> percepts;
  for (const auto& [root, members] : groups) {
    ObjectPercept pc;
    pc.label = detections[clouds[root].det_index].label;
    for (int m : members) {
      for (const auto& p : clouds[m].points) {
        pc.cloud.points.push_back(p);
        pc.bbox.expand(p);
      }
    }
    pc.support_surface_z = support_from_cloud(pc.cloud.points, pc.bbox);
    if (options.part_labeler) {
      pc.point_part.reserve(pc.cloud.size());
      for (const auto& p : pc.cloud.points) {
        const std::string part = options.part_labeler(p);
        if (part.empty()) {
          pc.point_part.push_back(-1);
          continue;
        }
        auto it = std::find(pc.part_names.begin(), pc.part_names.end(), part);
        if (it == pc.part_names.end()) {
          pc.part_names.push_back(part);
          it = pc.part_names.end() - 1;
        }
        pc.point_part.push_back(static_cast<int>(it - pc.part_names.begin()));
      }
    }
    percepts.push_back(std::move(pc));
  }

  // Instance naming: ascending x of the box center per label.
  auto center_key = [](const ObjectPercept& p) {
    const Vec3 c = p.bbox.center();
    return std::make_tuple(p.label, c.x(), c.y(), c.z());
  };
  std::stable_sort(percepts.begin(), percepts.end(),
                   [&](const ObjectPercept& a, const ObjectPercept& b) {
                     return center_key(a) < center_key(b);
                   });
  std::map<std::string, int> label_count;
  for (const auto& p : percepts) ++label_count[p.label];
  std::map<std::string, int> next_index;
  for (auto& p : percepts) {
    p.name = label_count[p.label] == 1 ? p.label
                                       : p.label + "_" + std::to_string(next_index[p.label]++);
  }
  result.percepts = std::move(percepts);
  return result;
}

PointCloud extract_part_cloud(const ObjectPercept& percept, std::string_view part) {
  if (part.empty()) return percept.cloud;
  auto it = std::find(percept.part_names.begin(), percept.part_names.end(), part);
  if (it == percept.part_names.end()) {
    throw Error(ErrorCode::part_not_found,
                "object '" + percept.name + "' has no visible part '" + std::string(part) + "'");
  }
  const int id = static_cast<int>(it - percept.part_names.begin());
  PointCloud out;
  for (std::size_t i = 0; i < percept.cloud.size(); ++i) {
    if (percept.point_part[i] != id) continue;
    out.points.push_back(percept.cloud.points[i]);
    if (percept.cloud.has_normals()) out.normals.push_back(percept.cloud.normals[i]);
  }
  return out;
}

AABB3 part_bbox(const ObjectPercept& percept, std::string_view part) {
  if (part.empty()) return percept.bbox;
  const auto cloud = extract_part_cloud(percept, part);
  return bounding_box(cloud.points);
}

PlaneInfo fit_plane(std::span<const Vec3> points) {
  PlaneInfo plane;
  if (points.size() < 3) {
    throw Error(ErrorCode::no_plane_found, "need at least three points");
  }
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : points) {
    const Vec3 d = p - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  plane.normal = eig.eigenvectors().col(0).normalized();
  plane.offset = plane.normal.dot(centroid);
  plane.centroid = centroid;
  plane.inlier_count = static_cast<int>(points.size());
  return plane;
}

std::vector<PlaneInfo> extract_planes(std::span<const Vec3> points, const PlaneOptions& opt) {
  std::vector<PlaneInfo> planes;
  std::vector<Vec3> remaining(points.begin(), points.end());
  std::mt19937_64 rng(opt.seed);
  while (static_cast<int>(planes.size()) < opt.max_planes &&
         static_cast<int>(remaining.size()) >= opt.min_inliers &&
         remaining.size() >= 3) {
    std::uniform_int_distribution<std::size_t> pick(0, remaining.size() - 1);
    int best_count = 0;
    Vec3 best_n = Vec3::UnitZ();
    double best_d = 0.0;
    for (int it = 0; it < opt.iterations; ++it) {
      const std::size_t i = pick(rng), j = pick(rng), k = pick(rng);
      if (i == j || j == k || i == k) continue;
      const Vec3 n = (remaining[j] - remaining[i]).cross(remaining[k] - remaining[i]);
      if (n.norm() < 1e-12) continue;
      const Vec3 nn = n.normalized();
      const double d = nn.dot(remaining[i]);
      int count = 0;
      for (const auto& p : remaining) {
        if (std::abs(nn.dot(p) - d) <= opt.inlier_tolerance) ++count;
      }
      if (count > best_count) {
        best_count = count;
        best_n = nn;
        best_d = d;
      }
    }
    if (best_count < opt.min_inliers) break;

    std::vector<Vec3> inliers;
    for (const auto& p : remaining)
      if (std::abs(best_n.dot(p) - best_d) <= opt.inlier_tolerance) inliers.push_back(p);
    PlaneInfo plane = fit_plane(inliers);
    // Re-collect inliers against the refined plane.
    std::vector<Vec3> keep, refined;
    for (const auto& p : remaining) {
      if (std::abs(plane.normal.dot(p) - plane.offset) <= opt.inlier_tolerance) {
        refined.push_back(p);
      } else {
        keep.push_back(p);
      }
    }
    if (static_cast<int>(refined.size()) < opt.min_inliers) break;
    plane = fit_plane(refined);
    planes.push_back(plane);
    remaining = std::move(keep);
  }
  return planes;
}

PlaneInfo detect_plane_near(const ObjectPercept& percept, const Vec3& position,
                            const PlaneOptions& options) {
  const auto planes = extract_planes(percept.cloud.points, options);
  if (planes.empty()) {
    throw Error(ErrorCode::no_plane_found,
                "no plane with at least " + std::to_string(options.min_inliers) +
                    " inliers in '" + percept.name + "'");
  }
  const PlaneInfo* best = &planes.front();
  for (const auto& p : planes) {
    if ((p.centroid - position).squaredNorm() < (best->centroid - position).squaredNorm()) {
      best = &p;
    }
  }
  PlaneInfo out = *best;
  if (out.normal.dot(position) - out.offset < 0.0) {
    out.normal = -out.normal;
    out.offset = -out.offset;
  }
  return out;
}

PointCloud estimate_normals(const PointCloud& cloud, double radius, const Vec3& inside) {
  PointCloud out;
  out.points = cloud.points;
  out.normals.resize(cloud.size());
  detail::SpatialHash hash(cloud.points, radius);
  std::vector<std::uint32_t> nbrs;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    hash.radius_neighbors(p, radius, nbrs);
    Vec3 n;
    if (nbrs.size() >= 3) {
      Vec3 c = Vec3::Zero();
      for (auto j : nbrs) c += cloud.points[j];
      c /= static_cast<double>(nbrs.size());
      Mat3 cov = Mat3::Zero();
      for (auto j : nbrs) {
        const Vec3 d = cloud.points[j] - c;
        cov += d * d.transpose();
      }
      Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
      n = eig.eigenvectors().col(0).normalized();
    } else {
      n = (p - inside).normalized();
    }
    if (n.dot(p - inside) < 0.0) n = -n;
    out.normals[i] = n;
  }
  return out;
}

void write_percepts(std::ostream& os, std::span<const ObjectPercept> percepts) {
  os << "# name label xmin ymin zmin xmax ymax zmax points support_z\n";
  for (const auto& p : percepts) {
    os << p.name << ' ' << p.label;
    for (int a = 0; a < 3; ++a) os << ' ' << p.bbox.min[a];
    for (int a = 0; a < 3; ++a) os << ' ' << p.bbox.max[a];
    os << ' ' << p.cloud.size() << ' ';
    if (p.support_surface_z) {
      os << *p.support_surface_z;
    } else {
      os << '-';
    }
    os << '\n';
  }
}

}  // namespace robosynth
