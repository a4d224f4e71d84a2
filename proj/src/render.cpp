#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "robosynth/error.hpp"
#include "robosynth/world.hpp"

namespace robosynth {

namespace {

struct Hit {
  double depth = 0.0;
  int object = -1;
};

Hit cast_pixel(const DepthImage& cam, const std::vector<WorldPrimitive>& prims, int u, int v) {
  const auto& k = cam.intrinsics;
  const Vec3 dir_cam((u + 0.5 - k.cx) / k.fx, (v + 0.5 - k.cy) / k.fy, 1.0);
  const Vec3 origin = cam.extrinsic.position;
  const Vec3 dir = cam.extrinsic.apply_direction(dir_cam);
  Hit best;
  double best_t = std::numeric_limits<double>::infinity();
  for (const auto& wp : prims) {
    const auto t = ray_primitive(wp.prim, origin, dir);
    if (t && *t < best_t) {
      best_t = *t;
      best.object = static_cast<int>(wp.object);
    }
  }
  // dir_cam has unit z, so the ray parameter is the z-depth.
  if (best.object >= 0) best.depth = best_t;
  return best;
}

void render_rows(const DepthImage& cam, const std::vector<WorldPrimitive>& prims,
                 std::vector<double>& depth, std::vector<int>& owner, ExecPolicy policy) {
  const int w = cam.width;
  const int h = cam.height;
  if (policy == ExecPolicy::serial) {
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) {
        const Hit hit = cast_pixel(cam, prims, u, v);
        depth[static_cast<std::size_t>(v) * w + u] = hit.depth;
        owner[static_cast<std::size_t>(v) * w + u] = hit.object;
      }
    return;
  }
#pragma omp parallel for schedule(dynamic, 4)
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const Hit hit = cast_pixel(cam, prims, u, v);
      depth[static_cast<std::size_t>(v) * w + u] = hit.depth;
      owner[static_cast<std::size_t>(v) * w + u] = hit.object;
    }
}

std::optional<PixelBox> project_box(const DepthImage& cam, const AABB3& box) {
  double umin = std::numeric_limits<double>::infinity(), vmin = umin;
  double umax = -umin, vmax = -umin;
  bool behind = false;
  for (int c = 0; c < 8; ++c) {
    const Vec3 corner((c & 1) ? box.max.x() : box.min.x(), (c & 2) ? box.max.y() : box.min.y(),
                      (c & 4) ? box.max.z() : box.min.z());
    const auto p = cam.project(corner);
    if (!p) {
      behind = true;
      continue;
    }
    umin = std::min(umin, p->x());
    umax = std::max(umax, p->x());
    vmin = std::min(vmin, p->y());
    vmax = std::max(vmax, p->y());
  }
  PixelBox b;
  if (behind) {
    b = PixelBox{0, 0, cam.width, cam.height};
  } else {
    b.u_min = std::clamp(static_cast<int>(std::floor(umin)), 0, cam.width);
    b.v_min = std::clamp(static_cast<int>(std::floor(vmin)), 0, cam.height);
    b.u_max = std::clamp(static_cast<int>(std::ceil(umax)), 0, cam.width);
    b.v_max = std::clamp(static_cast<int>(std::ceil(vmax)), 0, cam.height);
  }
  if (b.empty()) return std::nullopt;
  return b;
}

}  // namespace

RenderResult render_views(const WorldState& s, std::span<const DepthImage> cameras,
                          const RenderOptions& options, ExecPolicy policy) {
  if (cameras.empty()) throw Error(ErrorCode::invalid_argument, "render needs at least one camera");
  const auto prims = world_primitives(s);
  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<int> jitter(-options.jitter_px, options.jitter_px);

  RenderResult out;
  for (const auto& tmpl : cameras) {
    check_intrinsics(tmpl.intrinsics);
    DepthImage img = tmpl;
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    img.depth.assign(n, 0.0);
    std::vector<int> owner(n, -1);
    render_rows(img, prims, img.depth, owner, policy);

    for (std::size_t oi = 0; oi < s.objects.size(); ++oi) {
      const auto& o = s.objects[oi];
      if (o.fixture) continue;
      if (!options.labels.empty() &&
          std::find(options.labels.begin(), options.labels.end(), o.label) == options.labels.end())
        continue;
      std::vector<std::uint32_t> mask;
      for (std::size_t i = 0; i < n; ++i) {
        if (owner[i] == static_cast<int>(oi)) mask.push_back(static_cast<std::uint32_t>(i));
      }
      if (mask.empty()) continue;
      auto box = project_box(img, object_aabb(s, o.name));
      if (!box) continue;
      if (options.jitter_px > 0) {
        box->u_min = std::clamp(box->u_min + jitter(rng), 0, img.width - 1);
        box->v_min = std::clamp(box->v_min + jitter(rng), 0, img.height - 1);
        box->u_max = std::clamp(box->u_max + jitter(rng), box->u_min + 1, img.width);
        box->v_max = std::clamp(box->v_max + jitter(rng), box->v_min + 1, img.height);
      }
      Detection2D det;
      det.view_id = img.view_id;
      det.label = o.label;
      det.box = *box;
      det.confidence = 1.0;
      if (options.masks) det.mask = std::move(mask);
      out.detections.push_back(std::move(det));
      out.detected_objects.push_back(o.name);
    }
    out.images.push_back(std::move(img));
  }
  return out;
}

std::function<std::string(const Vec3&)> make_part_labeler(const WorldState& s) {
  struct Entry {
    Primitive prim;
    Pose inv;
    AABB3 box;
    std::string part;
  };
  auto entries = std::make_shared<std::vector<Entry>>();
  for (const auto& wp : world_primitives(s)) {
    const auto& o = s.objects[wp.object];
    if (o.fixture) continue;
    entries->push_back({wp.prim, inverse(wp.prim.pose), primitive_aabb(wp.prim).inflated(0.01),
                        o.parts[wp.part].name});
  }
  return [entries](const Vec3& p) {
    double best = 0.01;
    const std::string* part = nullptr;
    for (const auto& e : *entries) {
      if (!point_in_aabb(p, e.box)) continue;
      const double d = std::abs(primitive_sdf(e.prim, e.inv.apply(p)));
      if (d <= best) {
        best = d;
        part = &e.part;
      }
    }
    return part ? *part : std::string();
  };
}

}  // namespace robosynth
