#include "robosynth/grasp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "robosynth/error.hpp"

namespace robosynth {

namespace {

void sample_box(const Vec3& center, const Vec3& half, double step, std::vector<Vec3>& out) {
  int n[3];
  for (int a = 0; a < 3; ++a) {
    n[a] = std::max(1, static_cast<int>(std::ceil(2.0 * half[a] / step - 1e-9))) + 1;
  }
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        const Vec3 t(static_cast<double>(i) / (n[0] - 1), static_cast<double>(j) / (n[1] - 1),
                     static_cast<double>(k) / (n[2] - 1));
        out.push_back(center - half + 2.0 * half.cwiseProduct(t));
      }
}

struct RawCandidate {
  Pose pose;
  double width;
  double antipodal_cos;
  Vec3 tip;
};

struct Evaluation {
  bool feasible = false;
  double clearance = 0.0;
};

bool has_occupied_neighbor(const OccupancyGrid& grid, const Index3& c) {
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const Index3 n{c[0] + dx, c[1] + dy, c[2] + dz};
        if (n[0] < 0 || n[1] < 0 || n[2] < 0 || n[0] >= grid.spec.dims[0] ||
            n[1] >= grid.spec.dims[1] || n[2] >= grid.spec.dims[2])
          continue;
        if (grid.at(n) == Occupancy::occupied) return true;
      }
  return false;
}

bool inside_gripper(const Vec3& local, double half_opening, const GripperModel& g) {
  const double t = g.finger_thickness;
  // fingers
  if (local.z() >= -g.finger_length && local.z() <= 0.0 && std::abs(local.x()) <= 0.5 * t) {
    const double ay = std::abs(local.y());
    if (ay >= half_opening && ay <= half_opening + t) return true;
  }
  // palm
  const double h = 0.5 * g.palm_size;
  return local.z() < -g.finger_length && local.z() >= -g.finger_length - g.palm_depth &&
         std::abs(local.x()) <= h && std::abs(local.y()) <= h;
}

Evaluation evaluate(const RawCandidate& c, const PointCloud& cloud, const OccupancyGrid& grid,
                    const GraspSamplerOptions& opt) {
  Evaluation ev;
  const double half_opening = 0.5 * c.width + opt.finger_margin;
  const Pose inv = inverse(c.pose);
  for (const auto& p : cloud.points) {
    if (inside_gripper(inv.apply(p), half_opening, opt.gripper)) return ev;
  }
  const auto samples = gripper_local_samples(opt.gripper, half_opening);
  std::size_t crowded = 0;
  for (const auto& s : samples) {
    const auto idx = grid.spec.voxel_of(c.pose.apply(s));
    if (!idx) continue;
    if (grid.at(*idx) == Occupancy::occupied) return ev;
    if (has_occupied_neighbor(grid, *idx)) ++crowded;
  }
  ev.feasible = true;
  ev.clearance = 1.0 - static_cast<double>(crowded) / static_cast<double>(samples.size());
  return ev;
}

std::vector<Evaluation> evaluate_all(const std::vector<RawCandidate>& raw, const PointCloud& cloud,
                                     const OccupancyGrid& grid, const GraspSamplerOptions& opt,
                                     ExecPolicy policy) {
  std::vector<Evaluation> evals(raw.size());
  if (policy == ExecPolicy::serial) {
    for (std::size_t i = 0; i < raw.size(); ++i) evals[i] = evaluate(raw[i], cloud, grid, opt);
  } else {
    const auto n = static_cast<std::int64_t>(raw.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      evals[k] = evaluate(raw[k], cloud, grid, opt);
    }
  }
  return evals;
}

}  // namespace

std::vector<Vec3> gripper_local_samples(const GripperModel& g, double half_opening) {
  std::vector<Vec3> out;
  const double t = g.finger_thickness;
  const Vec3 finger_half(0.5 * t, 0.5 * t, 0.5 * g.finger_length);
  for (double side : {-1.0, 1.0}) {
    sample_box(Vec3(0.0, side * (half_opening + 0.5 * t), -0.5 * g.finger_length), finger_half,
               g.sample_step, out);
  }
  sample_box(Vec3(0.0, 0.0, -g.finger_length - 0.5 * g.palm_depth),
             Vec3(0.5 * g.palm_size, 0.5 * g.palm_size, 0.5 * g.palm_depth), g.sample_step, out);
  return out;
}

std::vector<GraspCandidate> sample_adaptive_grasps(const PointCloud& cloud,
                                                   const OccupancyGrid& grid,
                                                   const GraspSamplerOptions& opt,
                                                   ExecPolicy policy) {
  if (cloud.size() < 2) {
    throw Error(ErrorCode::no_grasp_found, "need at least two points to form a grasp");
  }
  if (!cloud.has_normals()) {
    throw Error(ErrorCode::invalid_argument, "grasp sampling needs per-point normals");
  }
  const double cone_cos = std::cos(deg2rad(opt.cone_deg));
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<std::size_t> pick(0, cloud.size() - 1);

  std::vector<RawCandidate> raw;
  for (int s = 0; s < opt.pair_samples; ++s) {
    const std::size_t i = pick(rng);
    const std::size_t j = pick(rng);
    if (i == j) continue;
    const Vec3 d = cloud.points[j] - cloud.points[i];
    const double w = d.norm();
    if (w < opt.min_width || w > opt.gripper.max_width) continue;
    const Vec3 y = d / w;
    const double cos_i = -cloud.normals[i].dot(y);
    const double cos_j = cloud.normals[j].dot(y);
    const double c = std::min(cos_i, cos_j);
    if (c < cone_cos) continue;
    const Vec3 tip = 0.5 * (cloud.points[i] + cloud.points[j]);
    Vec3 ref = -Vec3::UnitZ() - y * y.dot(-Vec3::UnitZ());
    ref = ref.norm() < 1e-6 ? any_orthogonal(y) : Vec3(ref.normalized());
    for (int k = 0; k < opt.approach_steps; ++k) {
      const double ang = 2.0 * kPi * k / opt.approach_steps;
      Vec3 z = rotate_about_axis(ref, y, Vec3::Zero(), ang);
      z = (z - y * y.dot(z)).normalized();
      raw.push_back({Pose(tip, Quat(frame_from_yz(y, z))), w, c, tip});
    }
  }

  const auto evals = evaluate_all(raw, cloud, grid, opt, policy);
  std::vector<GraspCandidate> feasible;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!evals[i].feasible) continue;
    GraspCandidate gc;
    gc.pose = raw[i].pose;
    gc.width = raw[i].width;
    gc.tip_point = raw[i].tip;
    gc.base_score = std::clamp(0.5 * (1.0 + raw[i].antipodal_cos) * evals[i].clearance, 0.0, 1.0);
    feasible.push_back(gc);
  }
  if (feasible.empty()) {
    throw Error(ErrorCode::no_grasp_found, "no collision-free antipodal grasp");
  }
  std::stable_sort(feasible.begin(), feasible.end(),
                   [](const GraspCandidate& a, const GraspCandidate& b) {
                     return a.base_score > b.base_score;
                   });
  std::vector<GraspCandidate> top;
  const double nms_angle = deg2rad(opt.nms_angle_deg);
  for (const auto& c : feasible) {
    if (top.size() >= opt.top_k) break;
    const bool duplicate = std::any_of(top.begin(), top.end(), [&](const GraspCandidate& s) {
      return (s.tip_point - c.tip_point).norm() < opt.nms_distance &&
             rotation_distance(s.pose.orientation, c.pose.orientation) < nms_angle;
    });
    if (!duplicate) top.push_back(c);
  }
  return top;
}

GraspCandidate central_lift_grasp(const AABB3& bbox, LiftDescription description,
                                  const GripperModel& gripper) {
  if (!bbox.valid()) throw Error(ErrorCode::invalid_argument, "invalid bounding box");
  const Vec3 e = bbox.extent();
  const bool along_x = e.x() <= e.y();
  const double width = along_x ? e.x() : e.y();
  if (width > gripper.max_width) {
    throw Error(ErrorCode::object_too_wide,
                "both horizontal extents exceed the jaw width " +
                    std::to_string(gripper.max_width));
  }
  const Vec3 y = along_x ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 z = -Vec3::UnitZ();
  Vec3 tip = bbox.center();
  if (description == LiftDescription::top) tip.z() = bbox.max.z();
  GraspCandidate gc;
  gc.pose = Pose(tip, Quat(frame_from_yz(y, z)));
  gc.width = std::max(width, 1e-6);
  gc.base_score = 1.0;
  gc.tip_point = tip;
  return gc;
}

double preference_score(const GraspCandidate& c, const GraspPreference& pref,
                        const PreferenceWeights& w) {
  double s = w.quality * c.base_score;
  if (pref.preferred_position) {
    const double d2 = (c.tip_point - *pref.preferred_position).squaredNorm();
    s += w.position * std::exp(-d2 / (2.0 * w.position_sigma * w.position_sigma));
  }
  if (pref.preferred_approach_direction) {
    s += w.approach * std::max(0.0, c.approach().dot(pref.preferred_approach_direction->normalized()));
  }
  if (pref.preferred_plane_normal) {
    s += w.plane_normal * std::abs(c.plane_normal().dot(pref.preferred_plane_normal->normalized()));
  }
  return s;
}

std::vector<GraspCandidate> rank_by_preference(std::span<const GraspCandidate> cands,
                                               const GraspPreference& pref,
                                               const PreferenceWeights& w) {
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) {
    keyed.emplace_back(preference_score(cands[i], pref, w), i);
  }
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<GraspCandidate> out;
  out.reserve(cands.size());
  for (const auto& [score, i] : keyed) out.push_back(cands[i]);
  return out;
}

std::vector<Vec3> pre_grasp_trajectory(const Vec3& p, const Vec3& a) {
  if (!(a.norm() > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "approach vector has zero norm");
  }
  return {p - 0.1 * a, p - 0.08 * a, p};
}

void write_candidates(std::ostream& os, std::span<const GraspCandidate> cands) {
  os << "# x y z qw qx qy qz width score\n";
  for (const auto& c : cands) {
    for (double v : pose_to_array(c.pose)) os << v << ' ';
    os << c.width << ' ' << c.base_score << '\n';
  }
}

}  // namespace robosynth
