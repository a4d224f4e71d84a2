#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <nlohmann/json.hpp>

#include "robosynth/error.hpp"
#include "robosynth/world.hpp"

namespace robosynth {

namespace {

Primitive box_between(const Vec3& lo, const Vec3& hi) {
  Primitive p;
  p.type = ShapeType::box;
  p.pose = Pose(0.5 * (lo + hi), Quat::Identity());
  p.size = 0.5 * (hi - lo);
  return p;
}

SceneObject make_table() {
  SceneObject t;
  t.name = "table";
  t.label = "table";
  t.fixture = true;
  t.parts.push_back({"top", {box_between(Vec3(-0.7, -0.8, kTableHeight - 0.05),
                                         Vec3(0.8, 0.8, kTableHeight))}, -1, std::nullopt});
  return t;
}

SceneObject make_simple(const ObjectTemplate& t) {
  SceneObject o;
  o.label = t.label;
  const Vec3 h = 0.5 * t.size;
  Part body{"body", {}, -1, std::nullopt};
  if (t.shape == "box") {
    body.shapes.push_back(box_between(Vec3(-h.x(), -h.y(), 0.0), Vec3(h.x(), h.y(), t.size.z())));
    o.graspable = true;
  } else if (t.shape == "cylinder") {
    Primitive c;
    c.type = ShapeType::cylinder;
    c.pose = Pose(Vec3(0, 0, h.z()), Quat::Identity());
    c.size = Vec3(h.x(), h.x(), h.z());
    body.shapes.push_back(c);
    o.graspable = true;
  } else if (t.shape == "sphere") {
    Primitive c;
    c.type = ShapeType::sphere;
    c.pose = Pose(Vec3(0, 0, h.x()), Quat::Identity());
    c.size = Vec3::Constant(h.x());
    body.shapes.push_back(c);
    o.graspable = true;
  } else if (t.shape == "plate") {
    Primitive c;
    c.type = ShapeType::cylinder;
    c.pose = Pose(Vec3(0, 0, h.z()), Quat::Identity());
    c.size = Vec3(h.x(), h.x(), h.z());
    body.shapes.push_back(c);
  } else if (t.shape == "bowl") {
    const double w = 0.01;
    body.shapes.push_back(box_between(Vec3(-h.x(), -h.y(), 0), Vec3(h.x(), h.y(), w)));
    body.shapes.push_back(box_between(Vec3(-h.x(), -h.y(), w), Vec3(-h.x() + w, h.y(), t.size.z())));
    body.shapes.push_back(box_between(Vec3(h.x() - w, -h.y(), w), Vec3(h.x(), h.y(), t.size.z())));
    body.shapes.push_back(box_between(Vec3(-h.x() + w, -h.y(), w), Vec3(h.x() - w, -h.y() + w, t.size.z())));
    body.shapes.push_back(box_between(Vec3(-h.x() + w, h.y() - w, w), Vec3(h.x() - w, h.y(), t.size.z())));
    body.interior = AABB3(Vec3(-h.x() + w, -h.y() + w, w), Vec3(h.x() - w, h.y() - w, t.size.z()));
    o.container = true;
  } else {
    throw Error(ErrorCode::invalid_spec, "unknown shape '" + t.shape + "'");
  }
  o.parts.push_back(std::move(body));
  return o;
}

// Vertical bar handle 6 cm in front of the local x = 0 face, on two standoffs.
Part make_handle(const std::string& name, double y, double zc, int joint) {
  Part h{name, {}, joint, std::nullopt};
  h.shapes.push_back(box_between(Vec3(-0.07, y - 0.01, zc - 0.05), Vec3(-0.05, y + 0.01, zc + 0.05)));
  for (double s : {-1.0, 1.0}) {
    const double z = zc + s * 0.04;
    h.shapes.push_back(box_between(Vec3(-0.05, y - 0.005, z - 0.005), Vec3(-0.02, y + 0.005, z + 0.005)));
  }
  return h;
}

// Cabinet frame: front face at local x = 0, body toward +x, bottom at z = 0.
SceneObject make_cabinet(int drawers, bool door) {
  SceneObject o;
  o.label = "cabinet";
  o.name = "cabinet";
  constexpr double W = 0.2, D = 0.36, H = 0.5, T = 0.02;
  Part body{"body", {}, -1, std::nullopt};
  body.shapes.push_back(box_between(Vec3(0, -W, 0), Vec3(D, -W + T, H)));
  body.shapes.push_back(box_between(Vec3(0, W - T, 0), Vec3(D, W, H)));
  body.shapes.push_back(box_between(Vec3(0, -W + T, 0), Vec3(D, W - T, T)));
  body.shapes.push_back(box_between(Vec3(0, -W + T, H - T), Vec3(D, W - T, H)));
  body.shapes.push_back(box_between(Vec3(D - T, -W + T, T), Vec3(D, W - T, H - T)));
  if (door) {
    body.shapes.push_back(box_between(Vec3(0, -W + T, 0.24), Vec3(D - T, W - T, 0.26)));
    o.parts.push_back(std::move(body));
    Joint j{"door", JointType::revolute, Vec3::UnitZ(), Vec3(-T, -W, 0), 0.0, kPi / 2, 0.0};
    o.joints.push_back(j);
    Part panel{"door", {box_between(Vec3(-T, -W, 0.01), Vec3(0, W, H - 0.01))}, 0, std::nullopt};
    o.parts.push_back(std::move(panel));
    o.parts.push_back(make_handle("handle", 0.15, 0.25, 0));
    return o;
  }
  const int n = std::max(drawers, 1);
  const double slot = (H - 2 * T - (n - 1) * T) / n;
  for (int k = 0; k + 1 < n; ++k) {
    const double z = T + (k + 1) * slot + k * T;
    body.shapes.push_back(box_between(Vec3(0, -W + T, z), Vec3(D - T, W - T, z + T)));
  }
  o.parts.push_back(std::move(body));
  for (int k = 0; k < n; ++k) {
    const double lo = T + k * (slot + T);
    const double zc = lo + 0.5 * slot;
    const std::string id = std::to_string(k);
    o.joints.push_back({"drawer_" + id, JointType::prismatic, -Vec3::UnitX(), Vec3(0, 0, zc), 0.0, 0.4, 0.0});
    Part d{"drawer_" + id, {}, k, std::nullopt};
    constexpr double dd = 0.30, dw = 0.17, wall = 0.01, top = 0.13;
    d.shapes.push_back(box_between(Vec3(-T, -0.18, lo + 0.005), Vec3(0, 0.18, lo + slot - 0.005)));
    d.shapes.push_back(box_between(Vec3(0, -dw, lo + 0.005), Vec3(dd, dw, lo + 0.015)));
    d.shapes.push_back(box_between(Vec3(0, -dw, lo + 0.015), Vec3(dd, -dw + wall, lo + top)));
    d.shapes.push_back(box_between(Vec3(0, dw - wall, lo + 0.015), Vec3(dd, dw, lo + top)));
    d.shapes.push_back(box_between(Vec3(dd - wall, -dw + wall, lo + 0.015), Vec3(dd, dw - wall, lo + top)));
    d.interior = AABB3(Vec3(0, -dw + wall, lo + 0.015), Vec3(dd - wall, dw - wall, lo + top));
    o.parts.push_back(std::move(d));
    o.parts.push_back(make_handle("handle_" + id, 0.0, zc, k));
  }
  return o;
}

ObjectTemplate tmpl(const std::string& label, const std::string& category, const std::string& shape,
                    const Vec3& size, int count, int extra = 0) {
  ObjectTemplate t;
  t.label = label;
  t.category = category;
  t.shape = shape;
  t.size = size;
  t.count = count;
  t.extra = extra;
  return t;
}

ObjectTemplate cabinet_tmpl(bool door) {
  ObjectTemplate t = tmpl("cabinet", "articulated", "cabinet", Vec3(0.36, 0.4, 0.5), 1);
  t.drawers = door ? 0 : 2;
  t.door = door;
  return t;
}

std::vector<ObjectTemplate> distractors(int extra) {
  return {tmpl("can", "independent", "cylinder", Vec3(0.05, 0.05, 0.08), 0, extra),
          tmpl("ball", "independent", "sphere", Vec3(0.06, 0.06, 0.06), 0, extra)};
}

const std::vector<std::string>& family_names() {
  static const std::vector<std::string> names{"pick_place",  "drawer_open",     "drawer_close",
                                              "door_open",   "door_close",      "place_in_drawer",
                                              "multi_stage"};
  return names;
}

bool is_family(const std::string& f) {
  const auto& n = family_names();
  return std::find(n.begin(), n.end(), f) != n.end();
}

}  // namespace

SceneConfig family_config(const std::string& family) {
  SceneConfig c;
  c.family = family;
  const ObjectTemplate cube = tmpl("cube", "independent", "box", Vec3(0.05, 0.05, 0.05), 1);
  if (family == "pick_place") {
    c.objects = {cube, tmpl("bowl", "container", "bowl", Vec3(0.14, 0.14, 0.05), 1)};
    for (auto& d : distractors(1)) c.objects.push_back(d);
    c.objects.push_back(tmpl("plate", "container", "plate", Vec3(0.16, 0.16, 0.012), 0, 1));
  } else if (family == "drawer_open" || family == "drawer_close") {
    c.objects = {cabinet_tmpl(false)};
    for (auto& d : distractors(1)) c.objects.push_back(d);
  } else if (family == "door_open" || family == "door_close") {
    c.objects = {cabinet_tmpl(true)};
    for (auto& d : distractors(1)) c.objects.push_back(d);
  } else if (family == "place_in_drawer" || family == "multi_stage") {
    c.objects = {cabinet_tmpl(false), cube};
    c.objects.push_back(tmpl("ball", "independent", "sphere", Vec3(0.06, 0.06, 0.06), 0, 1));
  } else if (family != "custom") {
    throw Error(ErrorCode::invalid_spec, "unknown scene family '" + family + "'");
  }
  return c;
}

SceneConfig parse_scene_config(std::string_view text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_spec, std::string("config is not valid JSON: ") + e.what());
  }
  try {
    SceneConfig c = family_config(j.value("family", std::string("custom")));
    if (j.contains("objects")) {
      c.objects.clear();
      for (const auto& o : j["objects"]) {
        ObjectTemplate t;
        t.label = o.at("label").get<std::string>();
        t.category = o.value("category", std::string("independent"));
        t.shape = o.value("shape", std::string("box"));
        if (o.contains("size")) {
          const auto v = o["size"].get<std::vector<double>>();
          if (v.size() != 3) throw Error(ErrorCode::invalid_spec, "size needs 3 entries");
          t.size = Vec3(v[0], v[1], v[2]);
        }
        t.count = o.value("count", 1);
        t.extra = o.value("extra", 0);
        t.drawers = o.value("drawers", 0);
        t.door = o.value("door", false);
        if (t.count < 0 || t.extra < 0 || (t.size.array() <= 0.0).any()) {
          throw Error(ErrorCode::invalid_spec, "bad template '" + t.label + "'");
        }
        c.objects.push_back(t);
      }
    }
    if (j.contains("region")) {
      const auto r = j["region"].get<std::vector<double>>();
      if (r.size() != 4 || r[0] >= r[2] || r[1] >= r[3]) {
        throw Error(ErrorCode::invalid_spec, "region needs [xmin, ymin, xmax, ymax]");
      }
      c.region = AABB3(Vec3(r[0], r[1], kTableHeight), Vec3(r[2], r[3], kTableHeight));
    }
    c.max_attempts = j.value("max_attempts", c.max_attempts);
    c.fill_probability = j.value("fill_probability", c.fill_probability);
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_spec, e.what());
  }
}

SceneFile generate_scene(std::uint64_t seed, const SceneConfig& cfg) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };

  SceneFile out;
  WorldState& s = out.state;
  s.cameras = default_cameras();
  s.gripper.pose = default_gripper_pose();
  s.objects.push_back(make_table());

  std::vector<AABB3> blocked;
  bool has_cabinet = false;
  for (const auto& t : cfg.objects) {
    if (t.category != "articulated") continue;
    if (t.count + t.extra > 1 || has_cabinet) {
      throw Error(ErrorCode::invalid_spec, "at most one articulated object per scene");
    }
    if (t.count == 0) continue;
    SceneObject cab = make_cabinet(t.drawers, t.door);
    const double side = unit(rng) < 0.5 ? -1.0 : 1.0;
    const double cy = side * uniform(0.12, 0.2);
    cab.pose = Pose(Vec3(0.2, cy, kTableHeight), Quat::Identity());
    // Drawer travel, door swing and the gripper working in front of them.
    blocked.push_back(AABB3(Vec3(-0.42, cy - 0.32, 0.0), Vec3(0.6, cy + 0.32, 3.0)));
    s.objects.push_back(std::move(cab));
    has_cabinet = true;
  }

  struct Placed {
    std::string label;
    AABB3 box;
  };
  std::vector<Placed> placed;
  for (const auto& t : cfg.objects) {
    if (t.category == "articulated") continue;
    int count = t.count;
    if (t.extra > 0) count += static_cast<int>(rng() % static_cast<std::uint64_t>(t.extra + 1));
    for (int c = 0; c < count; ++c) {
      SceneObject o = make_simple(t);
      const Vec3 h = 0.5 * t.size;
      bool ok = false;
      for (int attempt = 0; attempt < cfg.max_attempts && !ok; ++attempt) {
        const double yaw = t.shape == "box" ? uniform(-0.3, 0.3) : 0.0;
        const double r = std::hypot(h.x(), h.y());
        const double lox = cfg.region.min.x() + r, hix = cfg.region.max.x() - r;
        const double loy = cfg.region.min.y() + r, hiy = cfg.region.max.y() - r;
        if (lox > hix || loy > hiy) break;
        const Vec3 pos(uniform(lox, hix), uniform(loy, hiy), kTableHeight);
        o.pose = Pose(pos, Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())));
        AABB3 box;
        for (const auto& p : o.parts) {
          for (const auto& prim : p.shapes) {
            Primitive w = prim;
            w.pose = compose(o.pose, prim.pose);
            box.expand(primitive_aabb(w));
          }
        }
        const AABB3 padded = box.inflated(0.03);
        ok = std::none_of(blocked.begin(), blocked.end(),
                          [&](const AABB3& b) { return intersection_volume(padded, b) > 0.0; }) &&
             std::none_of(placed.begin(), placed.end(), [&](const Placed& p) {
               return intersection_volume(padded, p.box) > 0.0 ||
                      (p.label == t.label && std::abs(p.box.center().x() - box.center().x()) < 0.06);
             });
        if (ok) placed.push_back({t.label, box});
      }
      if (!ok) {
        throw Error(ErrorCode::generation_failed,
                    "could not place '" + t.label + "' after " + std::to_string(cfg.max_attempts) +
                        " attempts");
      }
      o.resting_on = "table.top";
      s.objects.push_back(std::move(o));
    }
  }

  if (cfg.fill_probability > 0.0) {
    const std::size_t n = s.objects.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (!s.objects[i].container || !s.objects[i].parts[0].interior) continue;
      if (unit(rng) >= cfg.fill_probability) continue;
      SceneObject content = make_simple(tmpl("ball", "independent", "sphere", Vec3(0.04, 0.04, 0.04), 1));
      const AABB3& in = *s.objects[i].parts[0].interior;
      content.pose = Pose(s.objects[i].pose.apply(Vec3(in.center().x(), in.center().y(), in.min.z())),
                          Quat::Identity());
      content.resting_on = "@" + std::to_string(i);
      s.objects.push_back(std::move(content));
    }
  }

  // Instance names follow the perception convention: ascending x per label.
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    if (s.objects[i].name.empty()) by_label[s.objects[i].label].push_back(i);
  }
  for (auto& [label, idx] : by_label) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return s.objects[a].pose.position.x() < s.objects[b].pose.position.x();
    });
    for (std::size_t k = 0; k < idx.size(); ++k) {
      s.objects[idx[k]].name = idx.size() == 1 ? label : label + "_" + std::to_string(k);
    }
  }
  for (auto& o : s.objects) {
    if (o.resting_on.rfind('@', 0) == 0) {
      const auto& c = s.objects[std::stoul(o.resting_on.substr(1))];
      o.resting_on = c.name + "." + c.parts[0].name;
    }
  }

  const std::string& f = cfg.family;
  if (!is_family(f)) return out;
  TaskFile& tasks = out.tasks;
  const std::string drawer = "drawer_" + std::to_string(rng() % 2);
  auto task = [](TaskType type, std::string object, std::string receptacle, std::string joint) {
    TaskSpec t;
    t.type = type;
    t.object = std::move(object);
    t.receptacle = std::move(receptacle);
    t.joint = std::move(joint);
    return t;
  };
  auto set_joint = [&](const std::string& joint, double value) {
    auto& cab = find_object(s, "cabinet");
    for (std::size_t j = 0; j < cab.joints.size(); ++j) {
      if (cab.joints[j].name == joint) set_joint_value(s, "cabinet", j, value);
    }
  };
  GraspPreference down;
  down.preferred_approach_direction = -Vec3::UnitZ();
  GraspPreference toward_cabinet;
  toward_cabinet.preferred_approach_direction = Vec3::UnitX();
  if (f == "pick_place") {
    tasks.tasks.push_back(task(TaskType::pick_place, "cube", "bowl", ""));
    tasks.units = {{"cube", "pick", down}, {"cube", "place-into:bowl", {}}};
  } else if (f == "drawer_open" || f == "drawer_close") {
    const bool open = f == "drawer_open";
    if (!open) set_joint(drawer, uniform(0.25, 0.35));
    tasks.tasks.push_back(task(open ? TaskType::open : TaskType::close, "cabinet", "", drawer));
    tasks.units = {{"cabinet", open ? "open:" + drawer : "close:" + drawer, toward_cabinet}};
  } else if (f == "door_open" || f == "door_close") {
    const bool open = f == "door_open";
    if (!open) set_joint("door", deg2rad(uniform(40.0, 60.0)));
    tasks.tasks.push_back(task(open ? TaskType::open : TaskType::close, "cabinet", "", "door"));
    tasks.units = {{"cabinet", open ? "open:door" : "close:door", toward_cabinet}};
  } else if (f == "place_in_drawer") {
    set_joint(drawer, uniform(0.28, 0.35));
    tasks.tasks.push_back(task(TaskType::place_in_drawer, "cube", "cabinet." + drawer, ""));
    tasks.units = {{"cube", "pick", down}, {"cube", "place-into:cabinet." + drawer, {}}};
  } else if (f == "multi_stage") {
    TaskSpec m = task(TaskType::multi_stage, "", "", "");
    m.stages = {task(TaskType::open, "cabinet", "", drawer),
                task(TaskType::place_in_drawer, "cube", "cabinet." + drawer, ""),
                task(TaskType::close, "cabinet", "", drawer)};
    tasks.tasks.push_back(m);
    tasks.units = {{"cabinet", "open:" + drawer, toward_cabinet},
                   {"cube", "pick", down},
                   {"cube", "place-into:cabinet." + drawer, {}},
                   {"cabinet", "close:" + drawer, toward_cabinet}};
  }
  return out;
}

}  // namespace robosynth
