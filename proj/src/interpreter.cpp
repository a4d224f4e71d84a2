#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "robosynth/runtime.hpp"

namespace robosynth {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

std::string fmt(const Vec3& v) { return "[" + fmt(v.x()) + ", " + fmt(v.y()) + ", " + fmt(v.z()) + "]"; }

std::pair<std::string, std::string> split_ref(const std::string& ref) {
  const auto dot = ref.find('.');
  if (dot == std::string::npos) return {ref, ""};
  return {ref.substr(0, dot), ref.substr(dot + 1)};
}

// "cube_1" -> "cube"; plain labels pass through.
std::string label_of(const std::string& name) {
  const auto us = name.rfind('_');
  if (us == std::string::npos || us + 1 == name.size()) return name;
  const bool digits = std::all_of(name.begin() + static_cast<long>(us) + 1, name.end(),
                                  [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  return digits ? name.substr(0, us) : name;
}

GridSpec observation_grid(const WorldState& w, double voxel) {
  const AABB3 b(Vec3(-0.6, -0.6, w.table_height - 0.05), Vec3(0.6, 0.6, w.table_height + 0.85));
  GridSpec g;
  g.origin = b.min;
  g.voxel_size = voxel;
  const Vec3 e = b.extent() / voxel;
  g.dims = {static_cast<int>(std::ceil(e.x() - 1e-9)), static_cast<int>(std::ceil(e.y() - 1e-9)),
            static_cast<int>(std::ceil(e.z() - 1e-9))};
  return g;
}

constexpr std::size_t kJointPoints = 2000;

struct RunState {
  WorldState world;
  bool detected = false;
  std::vector<ObjectPercept> percepts;
  std::shared_ptr<const OccupancyGrid> grid;
  std::optional<AABB3> grasp_region;
  double grasp_width = 0.0;
  std::string held;
  std::optional<Vec3> held_offset;  // perceived center in the gripper frame
  Vec3 held_half = Vec3::Zero();
  std::optional<AABB3> held_region;
  std::optional<AABB3> place_region;
  std::map<std::string, Value> vars;
};

class Interpreter {
 public:
  Interpreter(const InterpretOptions& opt, ExecutionReport& rep) : opt_(opt), rep_(rep) {}

  RunState st;
  std::size_t statement = 0;

  Value eval(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::number: return e.number;
      case Expr::Kind::string: return e.text;
      case Expr::Kind::variable: {
        auto it = st.vars.find(e.text);
        if (it == st.vars.end()) throw Error(ErrorCode::invalid_argument, "unbound variable '" + e.text + "'");
        return it->second;
      }
      case Expr::Kind::list: {
        Value::List items;
        for (const auto& o : e.operands) items.push_back(eval(*o));
        const bool vec = items.size() == 3 && std::all_of(items.begin(), items.end(), [](const Value& v) {
                           return std::holds_alternative<double>(v.data);
                         });
        if (vec) {
          return Vec3(std::get<double>(items[0].data), std::get<double>(items[1].data),
                      std::get<double>(items[2].data));
        }
        return items;
      }
      case Expr::Kind::negate: {
        const Value v = eval(*e.operands[0]);
        if (auto d = std::get_if<double>(&v.data)) return -*d;
        if (auto p = std::get_if<Vec3>(&v.data)) return Vec3(-*p);
        throw Error(ErrorCode::invalid_argument, "cannot negate a " + v.type_name());
      }
      case Expr::Kind::binary: return arith(e.op, eval(*e.operands[0]), eval(*e.operands[1]));
      case Expr::Kind::field: return field(eval(*e.operands[0]), e.text);
      case Expr::Kind::call: return call(e);
    }
    return {};
  }

 private:
  const InterpretOptions& opt_;
  ExecutionReport& rep_;
  std::uint64_t calls_ = 0;

  static Value arith(char op, const Value& a, const Value& b) {
    const auto* da = std::get_if<double>(&a.data);
    const auto* db = std::get_if<double>(&b.data);
    const auto* va = std::get_if<Vec3>(&a.data);
    const auto* vb = std::get_if<Vec3>(&b.data);
    if ((op == '/') && db && *db == 0.0) throw Error(ErrorCode::invalid_argument, "division by zero");
    if (da && db) {
      switch (op) {
        case '+': return *da + *db;
        case '-': return *da - *db;
        case '*': return *da * *db;
        default: return *da / *db;
      }
    }
    if (va && vb && (op == '+' || op == '-')) return Vec3(op == '+' ? Vec3(*va + *vb) : Vec3(*va - *vb));
    if (op == '*' && da && vb) return Vec3(*da * *vb);
    if (op == '*' && va && db) return Vec3(*va * *db);
    if (op == '/' && va && db) return Vec3(*va / *db);
    throw Error(ErrorCode::invalid_argument,
                "unsupported operands " + a.type_name() + " " + op + " " + b.type_name());
  }

  static Value field(const Value& v, const std::string& f) {
    auto missing = [&]() -> Error {
      return Error(ErrorCode::invalid_argument, v.type_name() + " has no field '" + f + "'");
    };
    if (auto p = std::get_if<Pose>(&v.data)) {
      if (f == "position") return p->position;
      if (f == "orientation") {
        const Quat& q = p->orientation;
        return Value::List{q.w(), q.x(), q.y(), q.z()};
      }
      throw missing();
    }
    if (auto p = std::get_if<Vec3>(&v.data)) {
      if (f == "x") return p->x();
      if (f == "y") return p->y();
      if (f == "z") return p->z();
      throw missing();
    }
    if (auto j = std::get_if<JointInfo>(&v.data)) {
      if (f == "joint_position") return j->position;
      if (f == "joint_axis") return j->axis;
      if (f == "type") return to_string(j->type);
      if (f == "lower") return j->lower;
      if (f == "upper") return j->upper;
      if (f == "value") return j->value;
      throw missing();
    }
    if (auto p = std::get_if<PlaneInfo>(&v.data)) {
      if (f == "normal") return p->normal;
      if (f == "offset") return p->offset;
      throw missing();
    }
    if (auto r = std::get_if<std::shared_ptr<const Record>>(&v.data)) {
      for (const auto& [k, val] : (*r)->fields) {
        if (k == f) return val;
      }
    }
    throw missing();
  }

  using Args = std::map<std::string, Value>;

  Args bind(const Expr& e, const ApiSignature& sig) {
    Args out;
    std::size_t positional = 0;
    for (const auto& a : e.args) {
      std::string name = a.keyword;
      if (name.empty()) {
        if (positional >= sig.params.size()) {
          throw Error(ErrorCode::invalid_argument, e.text + ": too many arguments");
        }
        name = sig.params[positional++].name;
      } else if (std::none_of(sig.params.begin(), sig.params.end(),
                              [&](const ApiParam& p) { return p.name == name; })) {
        throw Error(ErrorCode::invalid_argument, e.text + ": unknown parameter '" + name + "'");
      }
      if (out.count(name)) throw Error(ErrorCode::invalid_argument, e.text + ": '" + name + "' given twice");
      out[name] = eval(*a.value);
    }
    for (const auto& p : sig.params) {
      if (p.required && !out.count(p.name)) {
        throw Error(ErrorCode::invalid_argument, e.text + ": missing '" + p.name + "'");
      }
    }
    return out;
  }

  static const Value* opt_arg(const Args& a, const std::string& k) {
    auto it = a.find(k);
    if (it == a.end() || std::holds_alternative<std::monostate>(it->second.data)) return nullptr;
    return &it->second;
  }

  static double as_number(const Value& v, const char* what) {
    if (auto d = std::get_if<double>(&v.data)) return *d;
    throw Error(ErrorCode::invalid_argument, std::string(what) + " must be a number, got " + v.type_name());
  }

  static std::string as_string(const Value& v, const char* what) {
    if (auto s = std::get_if<std::string>(&v.data)) return *s;
    throw Error(ErrorCode::invalid_argument, std::string(what) + " must be a string, got " + v.type_name());
  }

  static std::vector<double> numbers(const Value::List& l) {
    std::vector<double> out;
    for (const auto& v : l) {
      auto d = std::get_if<double>(&v.data);
      if (!d) return {};
      out.push_back(*d);
    }
    return out;
  }

  static Vec3 as_vec3(const Value& v, const char* what) {
    if (auto p = std::get_if<Vec3>(&v.data)) return *p;
    throw Error(ErrorCode::invalid_argument, std::string(what) + " must be [x, y, z], got " + v.type_name());
  }

  Pose as_pose(const Value& v, const char* what) const {
    if (auto p = std::get_if<Pose>(&v.data)) return *p;
    if (auto p = std::get_if<Vec3>(&v.data)) return Pose(*p, st.world.gripper.pose.orientation);
    if (auto l = std::get_if<Value::List>(&v.data)) {
      const auto n = numbers(*l);
      if (n.size() == 7) return pose_from_array(n);
    }
    throw Error(ErrorCode::invalid_argument, std::string(what) + " must be a pose, got " + v.type_name());
  }

  std::uint64_t next_seed() { return mix_seed(opt_.seed, calls_); }

  ObjectPercept resolve(const std::string& ref) const {
    const auto [obj, part] = split_ref(ref);
    auto it = std::find_if(st.percepts.begin(), st.percepts.end(),
                           [&](const ObjectPercept& p) { return p.name == obj; });
    if (it == st.percepts.end()) {
      throw Error(ErrorCode::unknown_object, "'" + obj + "' was not detected");
    }
    if (part.empty()) return *it;
    ObjectPercept sub;
    sub.name = ref;
    sub.label = it->label;
    sub.cloud = extract_part_cloud(*it, part);
    sub.bbox = part_bbox(*it, part);
    sub.support_surface_z = it->support_surface_z;
    return sub;
  }

  PlanConstraints constraints() const {
    PlanConstraints c;
    c.workspace = st.world.workspace;
    c.grid = st.grid;
    c.treat_unknown_as = opt_.unknown;
    c.gripper = opt_.sampler.gripper;
    if (st.grasp_region) c.exempt_regions.push_back(st.grasp_region->inflated(0.03));
    if (st.held_region) c.exempt_regions.push_back(*st.held_region);
    if (st.place_region) c.exempt_regions.push_back(*st.place_region);
    c.finger_opening = st.world.gripper.open_fraction > 0.5 ? c.gripper.max_width
                                                             : std::max(st.grasp_width, 0.0);
    return c;
  }

  void check_motion(const Trajectory& t) const {
    std::vector<Waypoint> wps;
    wps.push_back({st.world.gripper.pose, Vec3::Zero(), GripperAction::none});
    wps.insert(wps.end(), t.waypoints.begin(), t.waypoints.end());
    const CollisionHit hit = check_path(wps, constraints());
    if (hit.hit) {
      throw Error(ErrorCode::execution_fault, "motion collides near " + fmt(hit.point) + ": " + hit.reason);
    }
  }

  Trajectory plan_to(const Pose& goal) {
    PlannerOptions po = opt_.planner;
    po.seed = next_seed();
    return plan_free_path(st.world.gripper.pose, goal, constraints(), po, opt_.policy);
  }

  void execute(const Trajectory& t, CallRecord& rec) {
    step_follow(st.world, t);
    rec.trajectories.push_back(t);
  }

  Value call(const Expr& e) {
    const ApiSignature* sig = find_api(e.text);
    if (!sig) throw Error(ErrorCode::invalid_argument, "unknown API '" + e.text + "'");
    const Args args = bind(e, *sig);
    ++calls_;
    CallRecord rec;
    rec.statement = statement;
    rec.span = e.span;
    rec.name = e.text;
    try {
      Value v = dispatch(e.text, args, rec);
      if (rec.detail.empty() && !std::holds_alternative<std::monostate>(v.data)) rec.detail = describe(v);
      rep_.calls.push_back(std::move(rec));
      return v;
    } catch (const Error& err) {
      rec.status = std::string(to_string(err.code()));
      rec.detail = err.what();
      rep_.calls.push_back(std::move(rec));
      throw;
    }
  }

  void detect(const Args& a, CallRecord& rec) {
    RenderOptions ro;
    if (const Value* v = opt_arg(a, "object_list")) {
      if (auto s = std::get_if<std::string>(&v->data)) {
        ro.labels.push_back(label_of(*s));
      } else if (auto l = std::get_if<Value::List>(&v->data)) {
        for (const auto& item : *l) ro.labels.push_back(label_of(as_string(item, "object_list entry")));
      } else {
        throw Error(ErrorCode::invalid_argument, "object_list must be a list of names");
      }
    }
    ro.jitter_px = opt_.jitter_px;
    ro.seed = next_seed();
    const RenderResult rr = render_views(st.world, st.world.cameras, ro, opt_.policy);
    MatchOptions mo;
    mo.part_labeler = make_part_labeler(st.world);
    mo.max_pixels_per_box = opt_.max_pixels_per_box;
    mo.containment_threshold = opt_.containment_threshold;
    MatchResult mr = match_views(rr.detections, rr.images, mo);
    TsdfVolume vol(observation_grid(st.world, opt_.voxel_size));
    for (const auto& img : rr.images) tsdf_integrate(vol, img, opt_.policy);
    st.grid = std::make_shared<const OccupancyGrid>(occupancy_from_tsdf(vol));
    st.percepts = std::move(mr.percepts);
    st.detected = true;
    if (!st.held.empty()) {
      auto it = std::find_if(st.percepts.begin(), st.percepts.end(),
                             [&](const ObjectPercept& p) { return p.name == st.held; });
      if (it != st.percepts.end()) st.held_region = it->bbox.inflated(0.02);
    }
    std::string names;
    for (const auto& p : st.percepts) names += (names.empty() ? "" : " ") + p.name;
    rec.detail = "detected: " + names;
    for (const auto& w : mr.warnings) rec.detail += "; " + w;
  }

  Value dispatch(const std::string& name, const Args& a, CallRecord& rec) {
    WorldState& w = st.world;
    if (name == "detect_objects") {
      detect(a, rec);
      return {};
    }
    if (name == "get_object_center_position") return resolve(as_string(a.at("object_name"), "object_name")).bbox.center();
    if (name == "get_object_pose") {
      return Pose(resolve(as_string(a.at("object_name"), "object_name")).bbox.center(), Quat::Identity());
    }
    if (name == "get_3d_bbox") {
      const AABB3 b = resolve(as_string(a.at("object_name"), "object_name")).bbox;
      return Value::List{b.min.x(), b.min.y(), b.min.z(), b.max.x(), b.max.y(), b.max.z()};
    }
    if (name == "get_obj_name_list") {
      if (!st.detected) throw Error(ErrorCode::precondition_violation, "no detection yet");
      Value::List names;
      for (const auto& p : st.percepts) names.push_back(p.name);
      return names;
    }
    if (name == "parse_adaptive_shape_grasp_pose") return adaptive_grasp(a, rec);
    if (name == "parse_central_lift_grasp_pose") {
      const ObjectPercept p = resolve(as_string(a.at("object_name"), "object_name"));
      LiftDescription d = LiftDescription::center;
      if (const Value* v = opt_arg(a, "description")) {
        const std::string s = as_string(*v, "description");
        if (s == "top") {
          d = LiftDescription::top;
        } else if (s != "center") {
          throw Error(ErrorCode::invalid_argument, "description must be 'top' or 'center', got '" + s + "'");
        }
      }
      const GraspCandidate c = central_lift_grasp(p.bbox, d, opt_.sampler.gripper);
      st.grasp_region = p.bbox;
      st.grasp_width = c.width;
      return c.pose;
    }
    if (name == "parse_place_pose") return place_pose(a);
    if (name == "get_object_joint_info") return joint_query(a);
    if (name == "get_plane_normal") {
      const ObjectPercept p = resolve(as_string(a.at("obj_name"), "obj_name"));
      return detect_plane_near(p, as_vec3(a.at("position"), "position")).normal;
    }
    if (name == "attach_object") {
      const std::string obj = split_ref(as_string(a.at("object_id"), "object_id")).first;
      attach(w, obj, opt_.sampler.gripper);
      st.held = obj;
      st.held_offset.reset();
      st.held_region.reset();
      auto it = std::find_if(st.percepts.begin(), st.percepts.end(),
                             [&](const ObjectPercept& p) { return p.name == obj; });
      if (it != st.percepts.end()) {
        st.held_offset = inverse(w.gripper.pose).apply(it->bbox.center());
        st.held_half = 0.5 * it->bbox.extent();
        st.held_region = it->bbox.inflated(0.02);
      }
      rec.detail = "holding " + obj + (w.gripper.attached_part.empty() ? "" : "." + w.gripper.attached_part);
      return {};
    }
    if (name == "detach_object") {
      detach(w, split_ref(as_string(a.at("object_id"), "object_id")).first);
      st.held.clear();
      st.held_offset.reset();
      return {};
    }
    if (name == "open_gripper" || name == "close_gripper") {
      const bool open = name == "open_gripper";
      if (open) {
        open_gripper(w);
      } else {
        close_gripper(w);
      }
      Trajectory t;
      t.waypoints.push_back({w.gripper.pose, Vec3::Zero(), open ? GripperAction::open : GripperAction::close});
      rec.trajectories.push_back(t);
      return {};
    }
    if (name == "move_to_pose") {
      const Pose goal = as_pose(a.at("pose"), "pose");
      execute(plan_to(goal), rec);
      return {};
    }
    if (name == "move_in_direction") {
      Vec3 axis = as_vec3(a.at("axis"), "axis");
      double d = as_number(a.at("distance"), "distance");
      if (d < 0) {
        axis = -axis;
        d = -d;
      }
      const int n = std::max(2, static_cast<int>(std::ceil(d / 0.02)));
      const Trajectory t = straight_line(w.gripper.pose, axis, d, n);
      check_motion(t);
      execute(t, rec);
      return {};
    }
    if (name == "generate_arc_path_around_joint") {
      const double n = as_number(a.at("n"), "n");
      if (n < 1 || n != std::floor(n)) throw Error(ErrorCode::invalid_argument, "n must be a positive integer");
      const Trajectory t = arc_path_around_joint(as_pose(a.at("current_pose"), "current_pose"),
                                                 as_vec3(a.at("joint_axis"), "joint_axis").normalized(),
                                                 as_vec3(a.at("joint_position"), "joint_position"),
                                                 static_cast<int>(n), as_number(a.at("angle"), "angle"));
      Value::List path;
      for (const auto& wp : t.waypoints) path.push_back(wp.pose);
      rec.detail = std::to_string(path.size()) + " poses";
      return path;
    }
    if (name == "follow_path") {
      const auto* l = std::get_if<Value::List>(&a.at("path").data);
      if (!l || l->empty()) throw Error(ErrorCode::invalid_argument, "path must be a non-empty list of poses");
      std::vector<Waypoint> wps;
      for (const auto& v : *l) wps.push_back({as_pose(v, "path entry"), Vec3::Zero(), GripperAction::none});
      const Trajectory t = make_trajectory(std::move(wps), opt_.planner.lambda_acc, opt_.planner.dt);
      check_motion(t);
      execute(t, rec);
      return {};
    }
    if (name == "get_gripper_pose") return w.gripper.pose;
    if (name == "grasp") {
      grasp(as_pose(a.at("grasp_pose"), "grasp_pose"), rec);
      return {};
    }
    throw Error(ErrorCode::invalid_argument, "no binding for '" + name + "'");
  }

  Value adaptive_grasp(const Args& a, CallRecord& rec) {
    const ObjectPercept p = resolve(as_string(a.at("object_name"), "object_name"));
    if (p.cloud.points.empty()) throw Error(ErrorCode::no_grasp_found, "'" + p.name + "' has no points");
    GraspPreference pref;
    if (const Value* v = opt_arg(a, "preferred_position")) pref.preferred_position = as_vec3(*v, "preferred_position");
    if (const Value* v = opt_arg(a, "preferred_approach_direction")) {
      pref.preferred_approach_direction = as_vec3(*v, "preferred_approach_direction");
    }
    if (const Value* v = opt_arg(a, "preferred_plane_normal")) {
      pref.preferred_plane_normal = as_vec3(*v, "preferred_plane_normal");
    }
    const PointCloud cloud = estimate_normals(p.cloud, 0.012, p.bbox.center());
    const OccupancyGrid grid = mask_region(*st.grid, p.bbox.inflated(0.01));
    GraspSamplerOptions so = opt_.sampler;
    so.seed = next_seed();
    const auto cands = sample_adaptive_grasps(cloud, grid, so, opt_.policy);
    const auto ranked = rank_by_preference(cands, pref);
    st.grasp_region = p.bbox;
    st.grasp_width = ranked.front().width;
    rec.detail = std::to_string(cands.size()) + " candidates, best width " + fmt(ranked.front().width) +
                 " score " + fmt(ranked.front().base_score) + ", pose " + describe(ranked.front().pose);
    return ranked.front().pose;
  }

  Value place_pose(const Args& a) {
    const std::string obj = as_string(a.at("object_name"), "object_name");
    const Pose& g = st.world.gripper.pose;
    const bool held = st.held == split_ref(obj).first && st.held_offset.has_value();
    AABB3 box;
    if (held) {
      const Vec3 c = g.apply(*st.held_offset);
      box = AABB3(c - st.held_half, c + st.held_half);
    } else {
      box = resolve(obj).bbox;
    }
    Vec3 target;
    if (const Value* v = opt_arg(a, "position")) {
      target = as_vec3(*v, "position");
    } else if (const Value* v = opt_arg(a, "receptacle_name")) {
      const ObjectPercept r = resolve(as_string(*v, "receptacle_name"));
      OccupancyGrid grid = *st.grid;
      if (st.held_region) grid = mask_region(grid, *st.held_region);
      if (st.grasp_region) grid = mask_region(grid, st.grasp_region->inflated(0.01));
      target = place_target(box, r, &grid);
      // Fingers and palm reach into the receptacle around the placed object.
      const GripperModel& gm = opt_.sampler.gripper;
      const double reach = 0.5 * gm.max_width + gm.finger_thickness + 0.01;
      const Vec3 half = 0.5 * box.extent();
      st.place_region = AABB3(target - Vec3(reach, reach, half.z() + 0.015),
                              target + Vec3(reach, reach, gm.finger_length + gm.palm_depth));
    } else {
      throw Error(ErrorCode::invalid_argument, "parse_place_pose needs receptacle_name or position");
    }
    if (!held) return Pose(target, Quat::Identity());
    return Pose(g.position + (target - box.center()), g.orientation);
  }

  Value joint_query(const Args& a) {
    const std::string obj = split_ref(as_string(a.at("obj_name"), "obj_name")).first;
    const Vec3 pos = as_vec3(a.at("position"), "position");
    std::string type = "any";
    if (const Value* v = opt_arg(a, "type")) type = as_string(*v, "type");
    if (type != "any" && type != "revolute" && type != "prismatic") {
      throw Error(ErrorCode::invalid_argument, "type must be any, revolute or prismatic");
    }
    const ObjectPercept p = resolve(obj);
    if (!has_object(st.world, obj)) throw Error(ErrorCode::unknown_object, "'" + obj + "' is not in the scene");
    const SceneObject& so = find_object(st.world, obj);
    const ArticulationTruth truth = articulation_truth(st.world, obj);
    const std::size_t stride = (p.cloud.points.size() + kJointPoints - 1) / kJointPoints;
    std::vector<Vec3> points;
    std::vector<int> link_of_point;
    for (std::size_t i = 0; i < p.cloud.points.size(); i += std::max<std::size_t>(stride, 1)) {
      const int part = i < p.point_part.size() ? p.point_part[i] : -1;
      points.push_back(p.cloud.points[i]);
      link_of_point.push_back(part >= 0 ? link_of_part(so, p.part_names[static_cast<std::size_t>(part)]) : 0);
    }
    OracleNoise noise;
    noise.seed = next_seed();
    const auto preds = oracle_predictions(points, link_of_point, truth.links, noise);
    const auto clusters = estimate_joints(preds);
    const JointCluster* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& c : clusters) {
      if (type != "any" && to_string(c.joint.type) != type) continue;
      const double d = (c.centroid - pos).norm();
      if (d < best_d) {
        best_d = d;
        best = &c;
      }
    }
    if (!best) throw Error(ErrorCode::no_joints_found, "no " + type + " joint found on '" + obj + "'");
    std::map<int, std::size_t> votes;
    for (std::size_t m : best->members) ++votes[link_of_point[m]];
    const int link = std::max_element(votes.begin(), votes.end(), [](const auto& x, const auto& y) {
                       return x.second < y.second;
                     })->first;
    JointInfo info = best->joint;
    const int joint = truth.link_joint[static_cast<std::size_t>(link)];
    if (joint >= 0) {
      const JointInfo gt = joint_info(st.world, obj, static_cast<std::size_t>(joint));
      info.lower = gt.lower;
      info.upper = gt.upper;
      info.value = gt.value;
    }
    return info;
  }

  void grasp(const Pose& g, CallRecord& rec) {
    WorldState& w = st.world;
    if (w.gripper.attached) {
      throw Error(ErrorCode::precondition_violation, "gripper already holds '" + *w.gripper.attached + "'");
    }
    const Vec3 approach = g.rotation().col(2);
    const Vec3 p = g.position;
    const auto pre = pre_grasp_trajectory(p, approach);
    open_gripper(w);
    const Pose start(pre[0], g.orientation);
    if ((w.gripper.pose.position - start.position).norm() > 1e-9 ||
        rotation_distance(w.gripper.pose.orientation, start.orientation) > 1e-9) {
      execute(plan_to(start), rec);
    }
    std::vector<Waypoint> wps;
    for (const Vec3& q : {pre[1], Vec3(p - 0.04 * approach), pre[2]}) {
      wps.push_back({Pose(q, g.orientation), Vec3::Zero(), GripperAction::none});
    }
    wps.back().action = GripperAction::close;
    const Trajectory t = make_trajectory(std::move(wps), opt_.planner.lambda_acc, opt_.planner.dt);
    check_motion(t);
    execute(t, rec);
    close_gripper(w);
    // Contact check against the simulator: something must be between the jaws.
    std::string nearest;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& o : w.objects) {
      if (o.fixture) continue;
      const double d = distance_to_object(w, o.name, p);
      if (d < best) {
        best = d;
        nearest = o.name;
      }
    }
    if (nearest.empty()) throw Error(ErrorCode::grasp_miss, "nothing to grasp");
    WorldState probe = w;
    attach(probe, nearest, opt_.sampler.gripper);
    rec.detail = "closed on " + nearest;
  }
};

}  // namespace

std::string Value::type_name() const {
  switch (data.index()) {
    case 0: return "none";
    case 1: return "number";
    case 2: return "string";
    case 3: return "vector";
    case 4: return "pose";
    case 5: return "joint_info";
    case 6: return "plane_info";
    case 7: return "list";
    default: return "record";
  }
}

std::string describe(const Value& v) {
  if (auto d = std::get_if<double>(&v.data)) return fmt(*d);
  if (auto s = std::get_if<std::string>(&v.data)) return "\"" + *s + "\"";
  if (auto p = std::get_if<Vec3>(&v.data)) return fmt(*p);
  if (auto p = std::get_if<Pose>(&v.data)) {
    const Quat& q = p->orientation;
    return "pose(" + fmt(p->position) + ", [" + fmt(q.w()) + ", " + fmt(q.x()) + ", " + fmt(q.y()) + ", " +
           fmt(q.z()) + "])";
  }
  if (auto j = std::get_if<JointInfo>(&v.data)) {
    return "joint(" + to_string(j->type) + ", axis " + fmt(j->axis) + ", position " + fmt(j->position) +
           ", value " + fmt(j->value) + ")";
  }
  if (auto p = std::get_if<PlaneInfo>(&v.data)) return "plane(" + fmt(p->normal) + ", " + fmt(p->offset) + ")";
  if (auto l = std::get_if<Value::List>(&v.data)) {
    std::string out = "[";
    for (std::size_t i = 0; i < l->size(); ++i) {
      if (i == 6) {
        out += ", ... " + std::to_string(l->size()) + " items";
        break;
      }
      out += (i ? ", " : "") + describe((*l)[i]);
    }
    return out + "]";
  }
  if (auto r = std::get_if<std::shared_ptr<const Record>>(&v.data)) {
    std::string out = "{";
    for (const auto& [k, val] : (*r)->fields) out += (out.size() > 1 ? ", " : "") + k + ": " + describe(val);
    return out + "}";
  }
  return "none";
}

Vec3 place_target(const AABB3& object_box, const ObjectPercept& receptacle, const OccupancyGrid* grid) {
  const Vec3 half = 0.5 * object_box.extent();
  const AABB3& rb = receptacle.bbox;
  const double x0 = rb.min.x() + half.x(), x1 = rb.max.x() - half.x();
  const double y0 = rb.min.y() + half.y(), y1 = rb.max.y() - half.y();
  if (!rb.valid() || x0 > x1 || y0 > y1) {
    throw Error(ErrorCode::place_infeasible, "object footprint exceeds '" + receptacle.name + "'");
  }
  auto surface = [&](double x, double y) {
    double top = -std::numeric_limits<double>::infinity();
    for (const Vec3& q : receptacle.cloud.points) {
      if (std::abs(q.x() - x) <= half.x() && std::abs(q.y() - y) <= half.y()) top = std::max(top, q.z());
    }
    return top;
  };
  auto blocked = [&](double x, double y, double z0) {
    if (!grid) return false;
    const double step = grid->spec.voxel_size * 0.5;
    for (double z = z0 + 0.015; z <= z0 + 2.0 * half.z() + kPlaceClearance; z += step) {
      for (double xx = x - half.x(); xx <= x + half.x() + 1e-9; xx += step) {
        for (double yy = y - half.y(); yy <= y + half.y() + 1e-9; yy += step) {
          if (query_occupancy(*grid, Vec3(xx, yy, z)) == Occupancy::occupied) return true;
        }
      }
    }
    return false;
  };
  const Vec3 c = rb.center();
  const double cx = std::clamp(c.x(), x0, x1), cy = std::clamp(c.y(), y0, y1);
  const double reach = std::hypot(x1 - x0, y1 - y0);
  constexpr double ring = 0.01;
  for (double r = 0.0; r <= reach + 1e-9; r += ring) {
    const int n = r == 0.0 ? 1 : std::max(6, static_cast<int>(std::ceil(2.0 * kPi * r / ring)));
    for (int k = 0; k < n; ++k) {
      const double a = 2.0 * kPi * k / n;
      const double x = cx + r * std::cos(a), y = cy + r * std::sin(a);
      if (x < x0 - 1e-9 || x > x1 + 1e-9 || y < y0 - 1e-9 || y > y1 + 1e-9) continue;
      const double top = surface(x, y);
      if (!std::isfinite(top) || blocked(x, y, top)) continue;
      return Vec3(x, y, top + half.z() + kPlaceClearance);
    }
  }
  throw Error(ErrorCode::place_infeasible, "no free spot on '" + receptacle.name + "'");
}

ExecutionReport interpret(const BehaviorProgram& program, const WorldState& world,
                          const std::vector<TaskSpec>& tasks, const InterpretOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  ExecutionReport rep;
  rep.statements_total = program.statements.size();
  Interpreter in(options, rep);
  in.st.world = world;
  std::vector<StageTracker> trackers;
  for (const auto& t : tasks) {
    trackers.emplace_back(t);
    trackers.back().observe(world);
  }
  for (std::size_t i = 0; i < program.statements.size(); ++i) {
    const Statement& s = program.statements[i];
    in.statement = i;
    RunState backup = in.st;
    try {
      Value v = in.eval(*s.expr);
      if (s.binding) in.st.vars[*s.binding] = std::move(v);
      ++rep.statements_completed;
      for (auto& t : trackers) t.observe(in.st.world);
    } catch (const Error& e) {
      in.st = std::move(backup);
      rep.aborted = true;
      rep.error = e.code();
      rep.error_message = e.what();
      rep.error_span = s.span;
      break;
    } catch (const std::exception& e) {
      in.st = std::move(backup);
      rep.aborted = true;
      rep.error = ErrorCode::invalid_argument;
      rep.error_message = e.what();
      rep.error_span = s.span;
      break;
    }
  }
  rep.final_state = in.st.world;
  bool all = true;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    TaskOutcome o;
    o.spec = tasks[i];
    o.success = trackers[i].success(rep.final_state);
    o.stages_reached = trackers[i].reached();
    all = all && o.success;
    rep.tasks.push_back(std::move(o));
  }
  rep.success = !rep.aborted && all;
  rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

void write_report(std::ostream& os, const ExecutionReport& r, bool include_timing) {
  os << "robosynth-report 1\n";
  for (std::size_t i = 0; i < r.calls.size(); ++i) {
    const auto& c = r.calls[i];
    os << "call " << i << " stmt " << c.statement << " at " << c.span.line << ':' << c.span.column << ' '
       << c.name << ' ' << c.status;
    if (!c.detail.empty()) os << " | " << c.detail;
    os << '\n';
    for (const auto& t : c.trajectories) {
      os << "  trajectory " << t.waypoints.size() << " cost " << fmt(t.cost) << '\n';
      std::ostringstream body;
      write_trajectory(body, t);
      std::istringstream lines(body.str());
      for (std::string line; std::getline(lines, line);) os << "    " << line << '\n';
    }
  }
  os << "summary\n";
  os << "statements " << r.statements_completed << '/' << r.statements_total << '\n';
  os << "status " << (r.aborted ? "aborted" : "completed") << '\n';
  if (r.error) {
    os << "error " << to_string(*r.error) << " at " << r.error_span.line << ':' << r.error_span.column << ' '
       << r.error_message << '\n';
  }
  for (std::size_t i = 0; i < r.tasks.size(); ++i) {
    const auto& t = r.tasks[i];
    os << "task " << i << ' ' << to_string(t.spec.type) << ' ' << (t.success ? "success" : "failure");
    if (t.spec.type == TaskType::multi_stage) os << " stages " << t.stages_reached << '/' << t.spec.stages.size();
    os << '\n';
  }
  os << "success " << (r.success ? "true" : "false") << '\n';
  if (include_timing) os << "wall_time_s " << fmt(r.wall_time_s) << '\n';
}

}  // namespace robosynth
