#include "robosynth/world.hpp"

#include <algorithm>
#include <cmath>

#include "robosynth/error.hpp"

namespace robosynth {

AABB3 default_workspace() {
  return AABB3(Vec3(-0.5, -0.5, kTableHeight), Vec3(0.2, 0.5, 1.85));
}

std::string to_string(ShapeType t) {
  switch (t) {
    case ShapeType::cylinder: return "cylinder";
    case ShapeType::sphere: return "sphere";
    default: return "box";
  }
}

double primitive_sdf(const Primitive& prim, const Vec3& p) {
  switch (prim.type) {
    case ShapeType::box: {
      const Vec3 q = p.cwiseAbs() - prim.size;
      return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
    }
    case ShapeType::cylinder: {
      const double dx = std::hypot(p.x(), p.y()) - prim.size.x();
      const double dz = std::abs(p.z()) - prim.size.z();
      return std::min(std::max(dx, dz), 0.0) +
             std::hypot(std::max(dx, 0.0), std::max(dz, 0.0));
    }
    case ShapeType::sphere:
      return p.norm() - prim.size.x();
  }
  return 0.0;
}

namespace {

std::optional<double> smallest_positive(double t0, double t1) {
  if (t0 > t1) std::swap(t0, t1);
  if (t0 > 1e-9) return t0;
  if (t1 > 1e-9) return t1;
  return std::nullopt;
}

std::optional<double> ray_box(const Vec3& o, const Vec3& d, const Vec3& h) {
  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (std::abs(o[a]) > h[a]) return std::nullopt;
      continue;
    }
    double t0 = (-h[a] - o[a]) / d[a];
    double t1 = (h[a] - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return std::nullopt;
  }
  return smallest_positive(tmin, tmax);
}

std::optional<double> ray_cylinder(const Vec3& o, const Vec3& d, double r, double hh) {
  std::optional<double> best;
  auto consider = [&](double t) {
    if (t > 1e-9 && (!best || t < *best)) best = t;
  };
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > 1e-18) {
    const double b = 2.0 * (o.x() * d.x() + o.y() * d.y());
    const double c = o.x() * o.x() + o.y() * o.y() - r * r;
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
        const double z = o.z() + t * d.z();
        if (std::abs(z) <= hh) consider(t);
      }
    }
  }
  if (std::abs(d.z()) > 1e-15) {
    for (double zc : {-hh, hh}) {
      const double t = (zc - o.z()) / d.z();
      const double x = o.x() + t * d.x();
      const double y = o.y() + t * d.y();
      if (x * x + y * y <= r * r) consider(t);
    }
  }
  return best;
}

std::optional<double> ray_sphere(const Vec3& o, const Vec3& d, double r) {
  const double a = d.squaredNorm();
  const double b = 2.0 * o.dot(d);
  const double c = o.squaredNorm() - r * r;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  return smallest_positive((-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a));
}

}  // namespace

std::optional<double> ray_primitive(const Primitive& prim, const Vec3& origin, const Vec3& dir) {
  const Quat qi = prim.pose.orientation.conjugate();
  const Vec3 o = qi * (origin - prim.pose.position);
  const Vec3 d = qi * dir;
  switch (prim.type) {
    case ShapeType::box: return ray_box(o, d, prim.size);
    case ShapeType::cylinder: return ray_cylinder(o, d, prim.size.x(), prim.size.z());
    case ShapeType::sphere: return ray_sphere(o, d, prim.size.x());
  }
  return std::nullopt;
}

AABB3 primitive_aabb(const Primitive& prim) {
  switch (prim.type) {
    case ShapeType::box: return transformed_box(prim.pose, prim.size);
    case ShapeType::cylinder:
      return transformed_box(prim.pose, Vec3(prim.size.x(), prim.size.x(), prim.size.z()));
    case ShapeType::sphere:
      return AABB3(prim.pose.position - Vec3::Constant(prim.size.x()),
                   prim.pose.position + Vec3::Constant(prim.size.x()));
  }
  return {};
}

Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 z = (target - eye).normalized();
  const Vec3 x = z.cross(up).normalized();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return Pose(eye, r);
}

std::vector<DepthImage> default_cameras() {
  const Intrinsics k{250.0, 250.0, 160.0, 120.0};
  const std::array<std::pair<Vec3, Vec3>, 4> views{{
      {Vec3(-0.9, 0.0, 1.95), Vec3(0.1, 0.0, 1.15)},
      {Vec3(-0.3, -1.1, 1.75), Vec3(-0.1, 0.0, 1.15)},
      {Vec3(-0.3, 1.1, 1.75), Vec3(-0.1, 0.0, 1.15)},
      {Vec3(-0.45, 0.0, 2.3), Vec3(-0.05, 0.0, 1.05)},
  }};
  std::vector<DepthImage> cams;
  for (std::size_t i = 0; i < views.size(); ++i) {
    DepthImage img;
    img.view_id = static_cast<int>(i);
    img.width = 320;
    img.height = 240;
    img.intrinsics = k;
    img.extrinsic = look_at(views[i].first, views[i].second);
    cams.push_back(img);
  }
  return cams;
}

Pose default_gripper_pose() {
  return Pose(Vec3(-0.3, 0.0, 1.5), Quat(frame_from_yz(Vec3::UnitY(), -Vec3::UnitZ())));
}

const SceneObject& find_object(const WorldState& s, std::string_view name) {
  for (const auto& o : s.objects) {
    if (o.name == name) return o;
  }
  throw Error(ErrorCode::unknown_object, "no object named '" + std::string(name) + "'");
}

SceneObject& find_object(WorldState& s, std::string_view name) {
  return const_cast<SceneObject&>(find_object(static_cast<const WorldState&>(s), name));
}

bool has_object(const WorldState& s, std::string_view name) {
  return std::any_of(s.objects.begin(), s.objects.end(),
                     [&](const SceneObject& o) { return o.name == name; });
}

const Part& find_part(const SceneObject& o, std::string_view part) {
  for (const auto& p : o.parts) {
    if (p.name == part) return p;
  }
  throw Error(ErrorCode::part_not_found,
              "object '" + o.name + "' has no part '" + std::string(part) + "'");
}

Pose joint_transform(const Joint& j, double value) {
  if (j.type == JointType::prismatic) return Pose(j.axis * value, Quat::Identity());
  const Mat3 r = Eigen::AngleAxisd(value, j.axis).toRotationMatrix();
  return Pose(j.position - r * j.position, r);
}

Pose part_frame(const SceneObject& o, const Part& p) {
  if (p.joint < 0) return o.pose;
  const Joint& j = o.joints.at(static_cast<std::size_t>(p.joint));
  return compose(o.pose, joint_transform(j, j.value));
}

std::vector<WorldPrimitive> world_primitives(const WorldState& s) {
  std::vector<WorldPrimitive> out;
  for (std::size_t oi = 0; oi < s.objects.size(); ++oi) {
    const auto& o = s.objects[oi];
    for (std::size_t pi = 0; pi < o.parts.size(); ++pi) {
      const Pose f = part_frame(o, o.parts[pi]);
      for (const auto& prim : o.parts[pi].shapes) {
        Primitive w = prim;
        w.pose = compose(f, prim.pose);
        out.push_back({oi, pi, w});
      }
    }
  }
  return out;
}

namespace {

std::size_t object_index(const WorldState& s, std::string_view name) {
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    if (s.objects[i].name == name) return i;
  }
  throw Error(ErrorCode::unknown_object, "no object named '" + std::string(name) + "'");
}

AABB3 part_box(const SceneObject& o, const Part& p) {
  AABB3 box;
  const Pose f = part_frame(o, p);
  for (const auto& prim : p.shapes) {
    Primitive w = prim;
    w.pose = compose(f, prim.pose);
    box.expand(primitive_aabb(w));
  }
  return box;
}

double primitive_volume(const Primitive& p) {
  switch (p.type) {
    case ShapeType::box: return 8.0 * p.size.x() * p.size.y() * p.size.z();
    case ShapeType::cylinder: return kPi * p.size.x() * p.size.x() * 2.0 * p.size.z();
    case ShapeType::sphere: return 4.0 / 3.0 * kPi * std::pow(p.size.x(), 3);
  }
  return 0.0;
}

// Projected length of a primitive along a world direction.
double extent_along(const Primitive& w, const Vec3& dir) {
  const Vec3 d = w.pose.orientation.conjugate() * dir.normalized();
  switch (w.type) {
    case ShapeType::box: return 2.0 * d.cwiseAbs().dot(w.size);
    case ShapeType::cylinder: {
      const double c = std::abs(d.z());
      return 2.0 * (w.size.z() * c + w.size.x() * std::sqrt(std::max(0.0, 1.0 - c * c)));
    }
    case ShapeType::sphere: return 2.0 * w.size.x();
  }
  return 0.0;
}

bool supported_by(const SceneObject& o, std::string_view support_object) {
  const auto dot = o.resting_on.find('.');
  return dot != std::string::npos && o.resting_on.compare(0, dot, support_object) == 0;
}

// Applies a world-frame rigid motion to an object and everything resting on it.
void carry(WorldState& s, std::size_t idx, const Pose& delta, int depth = 0) {
  if (depth > 32) return;
  auto& o = s.objects[idx];
  o.pose = compose(delta, o.pose);
  const std::string name = o.name;
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    if (i != idx && supported_by(s.objects[i], name)) carry(s, i, delta, depth + 1);
  }
}

bool depends_on(const WorldState& s, std::size_t idx, const std::string& base, int depth = 0) {
  const auto& o = s.objects[idx];
  if (o.name == base) return true;
  if (depth > 32 || o.resting_on.empty()) return false;
  const std::string parent = o.resting_on.substr(0, o.resting_on.find('.'));
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    if (s.objects[i].name == parent) return depends_on(s, i, base, depth + 1);
  }
  return false;
}

}  // namespace

AABB3 object_aabb(const WorldState& s, std::string_view name) {
  const auto& o = find_object(s, name);
  AABB3 box;
  for (const auto& p : o.parts) box.expand(part_box(o, p));
  return box;
}

AABB3 part_aabb(const WorldState& s, std::string_view object, std::string_view part) {
  const auto& o = find_object(s, object);
  return part_box(o, find_part(o, part));
}

std::optional<AABB3> part_interior(const WorldState& s, std::string_view object,
                                   std::string_view part) {
  const auto& o = find_object(s, object);
  const Part& p = find_part(o, part);
  if (!p.interior) return std::nullopt;
  const Pose f = part_frame(o, p);
  const Vec3 c = p.interior->center();
  return transformed_box(Pose(f.apply(c), f.orientation), 0.5 * p.interior->extent());
}

double distance_to_object(const WorldState& s, std::string_view name, const Vec3& q,
                          std::string* nearest_part) {
  const auto& o = find_object(s, name);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : o.parts) {
    const Pose f = part_frame(o, p);
    for (const auto& prim : p.shapes) {
      const Pose w = compose(f, prim.pose);
      const double d = std::max(0.0, primitive_sdf(prim, inverse(w).apply(q)));
      if (d < best) {
        best = d;
        if (nearest_part) *nearest_part = p.name;
      }
    }
  }
  return best;
}

void open_gripper(WorldState& s) { s.gripper.open_fraction = 1.0; }

void close_gripper(WorldState& s) { s.gripper.open_fraction = 0.0; }

void attach(WorldState& s, std::string_view name, const GripperModel& gripper) {
  auto& g = s.gripper;
  if (g.open_fraction > 0.5) {
    throw Error(ErrorCode::sequencing_fault, "attach requires a closed gripper");
  }
  if (g.attached) {
    throw Error(ErrorCode::precondition_violation, "gripper already holds '" + *g.attached + "'");
  }
  const std::size_t idx = object_index(s, name);
  const auto& o = s.objects[idx];
  const Vec3 tip = g.pose.position;
  const Vec3 jaw = g.pose.rotation().col(1);

  double best = std::numeric_limits<double>::infinity();
  const Part* part = nullptr;
  Primitive nearest;
  for (const auto& p : o.parts) {
    const Pose f = part_frame(o, p);
    for (const auto& prim : p.shapes) {
      Primitive w = prim;
      w.pose = compose(f, prim.pose);
      const double d = std::max(0.0, primitive_sdf(prim, inverse(w.pose).apply(tip)));
      if (d < best) {
        best = d;
        part = &p;
        nearest = w;
      }
    }
  }
  if (part == nullptr || best > 0.02) {
    throw Error(ErrorCode::grasp_miss, "gripper tip is not within 2 cm of '" + o.name + "'");
  }
  if (gripper.max_width < extent_along(nearest, jaw) - 0.01) {
    throw Error(ErrorCode::grasp_miss, "'" + o.name + "' is wider than the jaw along the jaw axis");
  }
  if (part->joint >= 0) {
    g.attached = o.name;
    g.attached_part = part->name;
    g.grasp_offset = compose(inverse(g.pose), part_frame(o, *part));
    return;
  }
  if (!o.graspable) {
    throw Error(ErrorCode::grasp_miss, "'" + o.name + "' cannot be moved");
  }
  g.attached = o.name;
  g.attached_part.clear();
  g.grasp_offset = compose(inverse(g.pose), o.pose);
  s.objects[idx].resting_on.clear();
}

void detach(WorldState& s, std::string_view name) {
  auto& g = s.gripper;
  if (!g.attached || *g.attached != name) {
    throw Error(ErrorCode::precondition_violation, "'" + std::string(name) + "' is not attached");
  }
  if (g.open_fraction < 0.5) {
    throw Error(ErrorCode::sequencing_fault, "detach requires an open gripper");
  }
  const bool free_object = g.attached_part.empty();
  g.attached.reset();
  g.attached_part.clear();
  g.grasp_offset = Pose();
  if (free_object) settle(s, name);
}

void settle(WorldState& s, std::string_view name) {
  const std::size_t idx = object_index(s, name);
  const AABB3 box = object_aabb(s, name);
  const double bottom = box.min.z();
  const std::string self = s.objects[idx].name;

  double best_top = -std::numeric_limits<double>::infinity();
  std::string support;
  for (const auto& wp : world_primitives(s)) {
    if (depends_on(s, wp.object, self)) continue;
    const AABB3 pb = primitive_aabb(wp.prim);
    if (!overlaps_xy(box, pb, 0.001)) continue;
    if (pb.max.z() > bottom + 0.01) continue;
    if (pb.max.z() > best_top) {
      best_top = pb.max.z();
      const auto& so = s.objects[wp.object];
      support = so.name + "." + so.parts[wp.part].name;
    }
  }
  if (!std::isfinite(best_top)) best_top = s.table_height;
  carry(s, idx, Pose(Vec3(0.0, 0.0, best_top - bottom), Quat::Identity()));
  s.objects[idx].resting_on = support;
}

void set_joint_value(WorldState& s, std::string_view object, std::size_t joint, double value) {
  const std::size_t idx = object_index(s, object);
  auto& o = s.objects[idx];
  Joint& j = o.joints.at(joint);
  const double v = std::clamp(value, j.lower, j.upper);
  const Pose before = compose(o.pose, joint_transform(j, j.value));
  const Pose after = compose(o.pose, joint_transform(j, v));
  j.value = v;
  const Pose delta = compose(after, inverse(before));
  std::vector<std::string> moving_parts;
  for (const auto& p : o.parts) {
    if (p.joint == static_cast<int>(joint)) moving_parts.push_back(o.name + "." + p.name);
  }
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    const auto& r = s.objects[i].resting_on;
    if (std::find(moving_parts.begin(), moving_parts.end(), r) != moving_parts.end()) {
      carry(s, i, delta);
    }
  }
}

void step_follow(WorldState& state, const Trajectory& t) {
  WorldState s = state;
  const AABB3 limits = s.workspace.inflated(0.05);
  for (const auto& w : t.waypoints) {
    if (!point_in_aabb(w.pose.position, limits)) {
      throw Error(ErrorCode::execution_fault, "waypoint leaves the workspace");
    }
    const Pose prev = s.gripper.pose;
    const Pose next = w.pose;
    if (s.gripper.attached) {
      const std::size_t idx = object_index(s, *s.gripper.attached);
      if (!s.gripper.attached_part.empty()) {
        const auto& o = s.objects[idx];
        const Part& p = find_part(o, s.gripper.attached_part);
        const std::size_t ji = static_cast<std::size_t>(p.joint);
        const Joint& j = o.joints[ji];
        const Vec3 axis = o.pose.apply_direction(j.axis);
        double v = j.value;
        if (j.type == JointType::prismatic) {
          v += (next.position - prev.position).dot(axis);
        } else {
          const Vec3 c = o.pose.apply(j.position);
          Vec3 a = prev.position - c;
          Vec3 b = next.position - c;
          a -= axis * axis.dot(a);
          b -= axis * axis.dot(b);
          if (a.norm() > 1e-9 && b.norm() > 1e-9) v += std::atan2(axis.dot(a.cross(b)), a.dot(b));
        }
        set_joint_value(s, o.name, ji, v);
      } else {
        const Pose target = compose(next, s.gripper.grasp_offset);
        carry(s, idx, compose(target, inverse(s.objects[idx].pose)));
        s.objects[idx].pose = target;
      }
    }
    s.gripper.pose = next;
    if (w.action == GripperAction::open) open_gripper(s);
    if (w.action == GripperAction::close) close_gripper(s);
  }
  state = std::move(s);
}

int link_of_part(const SceneObject& o, std::string_view part) {
  return find_part(o, part).joint + 1;
}

ArticulationTruth articulation_truth(const WorldState& s, std::string_view object) {
  const auto& o = find_object(s, object);
  ArticulationTruth t;
  const std::size_t n = o.joints.size() + 1;
  t.links.resize(n);
  t.link_joint.resize(n);
  std::vector<double> mass(n, 0.0);
  std::vector<Vec3> moment(n, Vec3::Zero());
  for (const auto& p : o.parts) {
    const auto link = static_cast<std::size_t>(p.joint + 1);
    const Pose f = part_frame(o, p);
    for (const auto& prim : p.shapes) {
      const double v = primitive_volume(prim);
      mass[link] += v;
      moment[link] += v * f.apply(prim.pose.position);
    }
  }
  for (std::size_t l = 0; l < n; ++l) {
    LinkTruth& lt = t.links[l];
    lt.centroid = mass[l] > 0.0 ? Vec3(moment[l] / mass[l]) : o.pose.position;
    t.link_joint[l] = static_cast<int>(l) - 1;
    if (l == 0) {
      lt.cls = PartClass::static_part;
      lt.axis_point = lt.centroid;
      lt.axis_direction = Vec3::UnitZ();
      continue;
    }
    const Joint& j = o.joints[l - 1];
    lt.cls = j.type == JointType::revolute ? PartClass::revolute : PartClass::prismatic;
    lt.axis_direction = o.pose.apply_direction(j.axis).normalized();
    lt.axis_point = o.pose.apply(j.position);
  }
  return t;
}

JointInfo joint_info(const WorldState& s, std::string_view object, std::size_t joint) {
  const auto& o = find_object(s, object);
  const Joint& j = o.joints.at(joint);
  JointInfo info;
  info.position = o.pose.apply(j.position);
  info.axis = o.pose.apply_direction(j.axis).normalized();
  info.type = j.type;
  info.lower = j.lower;
  info.upper = j.upper;
  info.value = j.value;
  return info;
}

std::string to_string(TaskType t) {
  switch (t) {
    case TaskType::pick_place: return "pick_place";
    case TaskType::open: return "open";
    case TaskType::close: return "close";
    case TaskType::place_in_drawer: return "place_in_drawer";
    case TaskType::multi_stage: return "multi_stage";
  }
  return "?";
}

TaskType task_type_from_string(const std::string& s) {
  for (TaskType t : {TaskType::pick_place, TaskType::open, TaskType::close,
                     TaskType::place_in_drawer, TaskType::multi_stage}) {
    if (to_string(t) == s) return t;
  }
  throw Error(ErrorCode::invalid_spec, "unknown task type '" + s + "'");
}

namespace {

std::pair<std::string, std::string> split_ref(const std::string& ref) {
  const auto dot = ref.find('.');
  if (dot == std::string::npos) return {ref, ""};
  return {ref.substr(0, dot), ref.substr(dot + 1)};
}

double joint_fraction(const WorldState& s, const TaskSpec& spec) {
  const auto& o = find_object(s, spec.object);
  for (const auto& j : o.joints) {
    if (j.name == spec.joint) {
      const double range = j.upper - j.lower;
      return range > 0.0 ? (j.value - j.lower) / range : 0.0;
    }
  }
  throw Error(ErrorCode::invalid_spec, "object '" + spec.object + "' has no joint '" + spec.joint + "'");
}

bool held(const WorldState& s, const std::string& name) {
  return s.gripper.attached && *s.gripper.attached == name;
}

}  // namespace

bool task_success(const WorldState& s, const TaskSpec& spec) {
  switch (spec.type) {
    case TaskType::pick_place: {
      if (held(s, spec.object)) return false;
      const Vec3 c = object_aabb(s, spec.object).center();
      if (spec.target) return (c - *spec.target).norm() <= spec.tolerance;
      const AABB3 r = object_aabb(s, spec.receptacle);
      const bool inside = c.x() >= r.min.x() && c.x() <= r.max.x() && c.y() >= r.min.y() &&
                          c.y() <= r.max.y();
      return inside && supported_by(find_object(s, spec.object), spec.receptacle);
    }
    case TaskType::open:
      return joint_fraction(s, spec) >= kOpenFraction - 1e-12;
    case TaskType::close:
      return joint_fraction(s, spec) <= kClosedFraction + 1e-12;
    case TaskType::place_in_drawer: {
      if (held(s, spec.object)) return false;
      const auto [obj, part] = split_ref(spec.receptacle);
      const auto interior = part_interior(s, obj, part);
      if (!interior) {
        throw Error(ErrorCode::invalid_spec, "'" + spec.receptacle + "' has no interior");
      }
      return point_in_aabb(object_aabb(s, spec.object).center(), *interior);
    }
    case TaskType::multi_stage:
      if (spec.stages.empty()) throw Error(ErrorCode::invalid_spec, "multi-stage task without stages");
      return std::all_of(spec.stages.begin(), spec.stages.end(),
                         [&](const TaskSpec& st) { return task_success(s, st); });
  }
  throw Error(ErrorCode::invalid_spec, "unknown task type");
}

StageTracker::StageTracker(TaskSpec spec) : spec_(std::move(spec)) {
  if (spec_.type == TaskType::multi_stage && spec_.stages.empty()) {
    throw Error(ErrorCode::invalid_spec, "multi-stage task without stages");
  }
}

void StageTracker::observe(const WorldState& s) {
  if (spec_.type != TaskType::multi_stage) return;
  if (reached_ < spec_.stages.size() && task_success(s, spec_.stages[reached_])) ++reached_;
}

bool StageTracker::success(const WorldState& s) const {
  if (spec_.type != TaskType::multi_stage) return task_success(s, spec_);
  return reached_ == spec_.stages.size();
}

}  // namespace robosynth
