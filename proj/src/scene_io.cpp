#include <istream>
#include <iterator>
#include <ostream>

#include <nlohmann/json.hpp>

#include "robosynth/error.hpp"
#include "robosynth/world.hpp"

namespace robosynth {

using nlohmann::json;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json pose_json(const Pose& p) {
  const auto a = pose_to_array(p);
  return json(std::vector<double>(a.begin(), a.end()));
}

json box_json(const AABB3& b) {
  return json::array({b.min.x(), b.min.y(), b.min.z(), b.max.x(), b.max.y(), b.max.z()});
}

Vec3 json_vec(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::io_error, "expected [x, y, z]");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Pose json_pose(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return pose_from_array(v);
}

AABB3 json_box(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 6) throw Error(ErrorCode::io_error, "expected a 6-entry box");
  return AABB3(Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5]));
}

ShapeType shape_from_string(const std::string& s) {
  if (s == "box") return ShapeType::box;
  if (s == "cylinder") return ShapeType::cylinder;
  if (s == "sphere") return ShapeType::sphere;
  throw Error(ErrorCode::io_error, "unknown shape type '" + s + "'");
}

json object_json(const SceneObject& o) {
  json parts = json::array();
  for (const auto& p : o.parts) {
    json shapes = json::array();
    for (const auto& s : p.shapes) {
      shapes.push_back({{"type", to_string(s.type)}, {"pose", pose_json(s.pose)}, {"size", vec_json(s.size)}});
    }
    json jp = {{"name", p.name}, {"shapes", shapes}};
    jp["joint"] = p.joint >= 0 ? json(o.joints[static_cast<std::size_t>(p.joint)].name) : json(nullptr);
    jp["interior"] = p.interior ? box_json(*p.interior) : json(nullptr);
    parts.push_back(jp);
  }
  json joints = json::array();
  for (const auto& j : o.joints) {
    joints.push_back({{"name", j.name},
                      {"type", to_string(j.type)},
                      {"axis", vec_json(j.axis)},
                      {"position", vec_json(j.position)},
                      {"limits", json::array({j.lower, j.upper})},
                      {"value", j.value}});
  }
  return {{"name", o.name},         {"label", o.label},         {"pose", pose_json(o.pose)},
          {"graspable", o.graspable}, {"fixture", o.fixture},   {"container", o.container},
          {"resting_on", o.resting_on}, {"joints", joints},     {"parts", parts}};
}

SceneObject object_from_json(const json& j) {
  SceneObject o;
  o.name = j.at("name").get<std::string>();
  o.label = j.value("label", o.name);
  o.pose = json_pose(j.at("pose"));
  o.graspable = j.value("graspable", false);
  o.fixture = j.value("fixture", false);
  o.container = j.value("container", false);
  o.resting_on = j.value("resting_on", std::string());
  for (const auto& jj : j.value("joints", json::array())) {
    Joint jt;
    jt.name = jj.at("name").get<std::string>();
    jt.type = joint_type_from_string(jj.at("type").get<std::string>());
    const Vec3 axis = json_vec(jj.at("axis"));
    if (!(axis.norm() > 0.0)) throw Error(ErrorCode::io_error, "joint axis has zero norm");
    jt.axis = axis.normalized();
    jt.position = json_vec(jj.at("position"));
    const auto lim = jj.at("limits").get<std::vector<double>>();
    if (lim.size() != 2 || lim[0] > lim[1]) throw Error(ErrorCode::io_error, "bad joint limits");
    jt.lower = lim[0];
    jt.upper = lim[1];
    jt.value = std::clamp(jj.value("value", 0.0), jt.lower, jt.upper);
    o.joints.push_back(jt);
  }
  for (const auto& jp : j.at("parts")) {
    Part p;
    p.name = jp.at("name").get<std::string>();
    if (jp.contains("joint") && !jp["joint"].is_null()) {
      const auto jn = jp["joint"].get<std::string>();
      auto it = std::find_if(o.joints.begin(), o.joints.end(),
                             [&](const Joint& x) { return x.name == jn; });
      if (it == o.joints.end()) throw Error(ErrorCode::io_error, "part bound to unknown joint '" + jn + "'");
      p.joint = static_cast<int>(it - o.joints.begin());
    }
    if (jp.contains("interior") && !jp["interior"].is_null()) p.interior = json_box(jp["interior"]);
    for (const auto& js : jp.at("shapes")) {
      Primitive s;
      s.type = shape_from_string(js.at("type").get<std::string>());
      s.pose = json_pose(js.at("pose"));
      s.size = json_vec(js.at("size"));
      p.shapes.push_back(s);
    }
    o.parts.push_back(std::move(p));
  }
  return o;
}

json camera_json(const DepthImage& c) {
  return {{"view_id", c.view_id},          {"width", c.width},           {"height", c.height},
          {"fx", c.intrinsics.fx},         {"fy", c.intrinsics.fy},      {"cx", c.intrinsics.cx},
          {"cy", c.intrinsics.cy},         {"extrinsic", pose_json(c.extrinsic)}};
}

DepthImage camera_from_json(const json& j) {
  DepthImage c;
  c.view_id = j.at("view_id").get<int>();
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  c.intrinsics = {j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
                  j.at("cy").get<double>()};
  c.extrinsic = json_pose(j.at("extrinsic"));
  if (c.width <= 0 || c.height <= 0) throw Error(ErrorCode::io_error, "bad camera size");
  return c;
}

json preference_json(const GraspPreference& p) {
  json j = json::object();
  if (p.preferred_position) j["position"] = vec_json(*p.preferred_position);
  if (p.preferred_approach_direction) j["approach"] = vec_json(*p.preferred_approach_direction);
  if (p.preferred_plane_normal) j["plane_normal"] = vec_json(*p.preferred_plane_normal);
  return j;
}

GraspPreference preference_from_json(const json& j) {
  GraspPreference p;
  if (j.contains("position")) p.preferred_position = json_vec(j["position"]);
  if (j.contains("approach")) p.preferred_approach_direction = json_vec(j["approach"]);
  if (j.contains("plane_normal")) p.preferred_plane_normal = json_vec(j["plane_normal"]);
  return p;
}

json task_json(const TaskSpec& t) {
  json j = {{"type", to_string(t.type)}, {"object", t.object}};
  if (!t.receptacle.empty()) j["receptacle"] = t.receptacle;
  if (!t.joint.empty()) j["joint"] = t.joint;
  if (t.target) {
    j["target"] = vec_json(*t.target);
    j["tolerance"] = t.tolerance;
  }
  if (!t.stages.empty()) {
    json st = json::array();
    for (const auto& s : t.stages) st.push_back(task_json(s));
    j["stages"] = st;
  }
  return j;
}

TaskSpec task_from_json(const json& j) {
  TaskSpec t;
  t.type = task_type_from_string(j.at("type").get<std::string>());
  t.object = j.value("object", std::string());
  t.receptacle = j.value("receptacle", std::string());
  t.joint = j.value("joint", std::string());
  if (j.contains("target")) t.target = json_vec(j["target"]);
  t.tolerance = j.value("tolerance", 0.05);
  for (const auto& s : j.value("stages", json::array())) t.stages.push_back(task_from_json(s));
  return t;
}

json taskfile_json(const TaskFile& t) {
  json units = json::array();
  for (const auto& u : t.units) {
    units.push_back({{"object", u.object_name},
                     {"instruction", u.instruction},
                     {"preference", preference_json(u.preference)}});
  }
  json tasks = json::array();
  for (const auto& s : t.tasks) tasks.push_back(task_json(s));
  return {{"units", units}, {"tasks", tasks}};
}

TaskFile taskfile_from_json(const json& j) {
  TaskFile t;
  for (const auto& u : j.value("units", json::array())) {
    t.units.push_back({u.at("object").get<std::string>(), u.value("instruction", std::string()),
                       preference_from_json(u.value("preference", json::object()))});
  }
  for (const auto& s : j.value("tasks", json::array())) t.tasks.push_back(task_from_json(s));
  return t;
}

json read_body(std::istream& is, const char* header) {
  std::string first;
  if (!std::getline(is, first)) throw Error(ErrorCode::io_error, "empty input");
  if (!first.empty() && first.back() == '\r') first.pop_back();
  if (first != header) {
    throw Error(ErrorCode::io_error, "expected header '" + std::string(header) + "', got '" + first + "'");
  }
  const std::string body((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::io_error, std::string("malformed body: ") + e.what());
  }
}

template <class F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::io_error, e.what());
  }
}

}  // namespace

void write_scene(std::ostream& os, const SceneFile& scene) {
  const WorldState& s = scene.state;
  json objects = json::array();
  for (const auto& o : s.objects) objects.push_back(object_json(o));
  json cameras = json::array();
  for (const auto& c : s.cameras) cameras.push_back(camera_json(c));
  json gripper = {{"pose", pose_json(s.gripper.pose)},
                  {"open_fraction", s.gripper.open_fraction},
                  {"attached", s.gripper.attached ? json(*s.gripper.attached) : json(nullptr)},
                  {"attached_part", s.gripper.attached_part},
                  {"grasp_offset", pose_json(s.gripper.grasp_offset)}};
  json j = {{"table_height", s.table_height},
            {"workspace", box_json(s.workspace)},
            {"gripper", gripper},
            {"cameras", cameras},
            {"objects", objects},
            {"tasks", taskfile_json(scene.tasks)}};
  os << kSceneHeader << '\n' << j.dump(1) << '\n';
}

SceneFile read_scene(std::istream& is) {
  const json j = read_body(is, kSceneHeader);
  return guarded([&] {
    SceneFile f;
    WorldState& s = f.state;
    s.table_height = j.value("table_height", kTableHeight);
    if (j.contains("workspace")) s.workspace = json_box(j["workspace"]);
    if (j.contains("gripper")) {
      const auto& g = j["gripper"];
      s.gripper.pose = json_pose(g.at("pose"));
      s.gripper.open_fraction = std::clamp(g.value("open_fraction", 1.0), 0.0, 1.0);
      if (g.contains("attached") && !g["attached"].is_null()) {
        s.gripper.attached = g["attached"].get<std::string>();
      }
      s.gripper.attached_part = g.value("attached_part", std::string());
      if (g.contains("grasp_offset")) s.gripper.grasp_offset = json_pose(g["grasp_offset"]);
    } else {
      s.gripper.pose = default_gripper_pose();
    }
    if (j.contains("cameras")) {
      for (const auto& c : j["cameras"]) s.cameras.push_back(camera_from_json(c));
    } else {
      s.cameras = default_cameras();
    }
    for (const auto& o : j.at("objects")) {
      auto obj = object_from_json(o);
      if (has_object(s, obj.name)) throw Error(ErrorCode::io_error, "duplicate object '" + obj.name + "'");
      s.objects.push_back(std::move(obj));
    }
    if (j.contains("tasks")) f.tasks = taskfile_from_json(j["tasks"]);
    return f;
  });
}

void write_tasks(std::ostream& os, const TaskFile& t) {
  os << kTaskHeader << '\n' << taskfile_json(t).dump(1) << '\n';
}

TaskFile read_tasks(std::istream& is) {
  const json j = read_body(is, kTaskHeader);
  return guarded([&] { return taskfile_from_json(j); });
}

}  // namespace robosynth
