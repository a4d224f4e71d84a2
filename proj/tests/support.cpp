#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

namespace robosynth::testing {

Vec3 random_unit(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

Vec3 random_point(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return Vec3(u(rng), u(rng), u(rng));
}

Quat random_rotation(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Quat q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q;
}

std::vector<Vec3> sample_box_surface(const Primitive& box, int n, Rng& rng) {
  const Vec3 h = box.size;
  const double areas[3] = {h.y() * h.z(), h.x() * h.z(), h.x() * h.y()};
  std::discrete_distribution<int> face({areas[0], areas[1], areas[2]});
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution side(0.5);
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Vec3 p(u(rng) * h.x(), u(rng) * h.y(), u(rng) * h.z());
    const int f = face(rng);
    p[f] = side(rng) ? h[f] : -h[f];
    out.push_back(box.pose.apply(p));
  }
  return out;
}

Vec3 rodrigues(const Vec3& p, const Vec3& k, const Vec3& origin, double angle) {
  const Vec3 v = p - origin;
  const double c = std::cos(angle), s = std::sin(angle);
  return origin + v * c + k.cross(v) * s + k * k.dot(v) * (1.0 - c);
}

namespace {

struct LocalBox {
  Vec3 center;
  Vec3 half;
};

std::vector<LocalBox> gripper_boxes(const GripperModel& g, double opening) {
  const double t = g.finger_thickness;
  const double h = 0.5 * opening;
  return {
      {Vec3(0, -(h + 0.5 * t), -0.5 * g.finger_length), Vec3(0.5 * t, 0.5 * t, 0.5 * g.finger_length)},
      {Vec3(0, h + 0.5 * t, -0.5 * g.finger_length), Vec3(0.5 * t, 0.5 * t, 0.5 * g.finger_length)},
      {Vec3(0, 0, -g.finger_length - 0.5 * g.palm_depth),
       Vec3(0.5 * g.palm_size, 0.5 * g.palm_size, 0.5 * g.palm_depth)},
  };
}

bool pose_hits(const Pose& pose, const OccupancyGrid& grid, const std::vector<LocalBox>& boxes) {
  const GridSpec& gs = grid.spec;
  const Mat3 r = pose.rotation();
  for (const auto& b : boxes) {
    const Vec3 c = pose.apply(b.center);
    const Vec3 reach = r.cwiseAbs() * b.half;
    Index3 lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::max(0, static_cast<int>(std::floor((c[a] - reach[a] - gs.origin[a]) / gs.voxel_size)));
      hi[a] = std::min(gs.dims[a] - 1,
                       static_cast<int>(std::floor((c[a] + reach[a] - gs.origin[a]) / gs.voxel_size)));
    }
    for (int k = lo[2]; k <= hi[2]; ++k)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int i = lo[0]; i <= hi[0]; ++i) {
          const Index3 idx{i, j, k};
          if (grid.at(idx) != Occupancy::occupied) continue;
          const Vec3 local = r.transpose() * (gs.voxel_center(idx) - c);
          if ((local.cwiseAbs().array() <= b.half.array()).all()) return true;
        }
  }
  return false;
}

}  // namespace

bool recheck_path(const Trajectory& t, const OccupancyGrid& grid, const AABB3& workspace,
                  const GripperModel& g, double opening) {
  const auto boxes = gripper_boxes(g, opening);
  std::vector<Pose> poses;
  const auto& w = t.waypoints;
  for (std::size_t i = 0; i < w.size(); ++i) {
    poses.push_back(w[i].pose);
    if (i + 1 < w.size()) {
      poses.emplace_back(0.5 * (w[i].pose.position + w[i + 1].pose.position),
                         w[i].pose.orientation.slerp(0.5, w[i + 1].pose.orientation));
    }
  }
  for (const auto& p : poses) {
    if (!point_in_aabb(p.position, workspace)) return false;
    if (pose_hits(p, grid, boxes)) return false;
  }
  return true;
}

ObstructedScene obstructed_scene(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const AABB3 ws = default_workspace();
  GridSpec gs;
  gs.origin = ws.min;
  gs.voxel_size = 0.01;
  gs.dims = {70, 100, 80};
  OccupancyGrid grid;
  grid.spec = gs;
  grid.cells.assign(gs.count(), Occupancy::free);

  const double wall_x = -0.2 + 0.1 * u(rng);
  const double thick = 0.02 + 0.02 * u(rng);
  const double gap_y = -0.25 + 0.5 * u(rng);
  const double gap_z = 1.35 + 0.2 * u(rng);
  const double gap_w = 0.18, gap_h = 0.24;
  for (std::size_t i = 0; i < gs.count(); ++i) {
    const Vec3 c = gs.voxel_center(gs.unravel(i));
    if (std::abs(c.x() - wall_x) > 0.5 * thick) continue;
    const bool in_gap = std::abs(c.y() - gap_y) < 0.5 * gap_w && std::abs(c.z() - gap_z) < 0.5 * gap_h;
    if (!in_gap) grid.cells[i] = Occupancy::occupied;
  }

  ObstructedScene s;
  s.constraints.workspace = ws;
  s.constraints.grid = std::make_shared<const OccupancyGrid>(std::move(grid));
  const double side = u(rng) < 0.5 ? -1.0 : 1.0;
  const Quat down(frame_from_yz(Vec3::UnitY(), -Vec3::UnitZ()));
  const double off = side * (0.14 + 0.04 * u(rng));
  const Vec3 a(wall_x - 0.2, std::clamp(gap_y + off, -0.4, 0.4), gap_z - 0.1 + 0.1 * u(rng));
  const Vec3 b(std::min(wall_x + 0.2, 0.15), std::clamp(gap_y + off, -0.4, 0.4), gap_z - 0.1 + 0.1 * u(rng));
  s.start = Pose(a, down);
  s.goal = Pose(b, down);
  return s;
}

namespace {

SceneObject box_object(const std::string& name, const Pose& pose, const Vec3& half) {
  SceneObject o;
  o.name = name;
  o.label = name;
  o.pose = pose;
  o.graspable = true;
  Part body;
  body.name = "body";
  body.shapes.push_back({ShapeType::box, Pose(), half});
  o.parts.push_back(body);
  return o;
}

}  // namespace

BoxScene single_box_scene() {
  BoxScene s;
  s.world.objects.clear();
  const Vec3 c(-0.1, 0.0, 1.3);
  const Vec3 half(0.05, 0.05, 0.05);
  s.world.objects.push_back(box_object("box", Pose(c, Quat::Identity()), half));
  s.box = AABB3(c - half, c + half);
  DepthImage cam;
  cam.view_id = 0;
  cam.width = 320;
  cam.height = 240;
  cam.intrinsics = {250.0, 250.0, 160.0, 120.0};
  cam.extrinsic = look_at(c + Vec3(-0.5, 0.0, 0.5), c);
  s.world.cameras = {cam};
  return s;
}

WorldState reference_block_scene(double yaw_deg) {
  WorldState w;
  w.cameras = default_cameras();
  SceneObject table;
  table.name = "table";
  table.label = "table";
  table.fixture = true;
  Part top;
  top.name = "top";
  top.shapes.push_back({ShapeType::box, Pose(), Vec3(0.6, 0.7, 0.025)});
  table.parts.push_back(top);
  table.pose = Pose(Vec3(-0.1, 0.0, kTableHeight - 0.025), Quat::Identity());
  w.objects.push_back(table);

  const Vec3 half(0.035, 0.02, 0.02);
  const Quat yaw(Eigen::AngleAxisd(deg2rad(yaw_deg), Vec3::UnitZ()));
  w.objects.push_back(box_object("cube", Pose(Vec3(-0.2, 0.0, kTableHeight + half.z()), yaw), half));
  return w;
}

PerceivedObject perceive(const WorldState& world, const std::string& label) {
  RenderOptions ro;
  ro.labels = {label};
  const RenderResult rr = render_views(world, world.cameras, ro);
  MatchOptions mo;
  mo.max_pixels_per_box = 100000;
  const MatchResult mr = match_views(rr.detections, rr.images, mo);
  if (mr.percepts.size() != 1) throw Error(ErrorCode::unknown_object, "expected one percept of " + label);
  GridSpec gs;
  gs.origin = Vec3(-0.6, -0.6, kTableHeight - 0.05);
  gs.voxel_size = 0.01;
  gs.dims = {120, 120, 90};
  TsdfVolume vol(gs);
  for (const auto& img : rr.images) tsdf_integrate(vol, img);
  PerceivedObject out;
  out.percept = mr.percepts.front();
  out.percept.cloud = estimate_normals(out.percept.cloud, 0.012, out.percept.bbox.center());
  out.grid = mask_region(occupancy_from_tsdf(vol), out.percept.bbox.inflated(0.01));
  return out;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<CorpusEntry> load_corpus(const std::filesystem::path& dir) {
  std::vector<CorpusEntry> out;
  const std::regex tag(R"(#\s*expect:\s*(clean|R[1-6]))");
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() != ".rsp") continue;
    std::smatch m;
    const std::string text = read_text(e.path());
    if (!std::regex_search(text, m, tag)) continue;
    out.push_back({e.path(), m[1]});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  return out;
}

std::string oracle_program(const std::filesystem::path& dir, const std::string& family,
                           const SceneFile& scene) {
  std::string text = read_text(dir / (family + ".rsp"));
  std::string k = "0";
  const std::regex drawer(R"(drawer_(\d+))");
  for (const auto& u : scene.tasks.units) {
    std::smatch m;
    if (std::regex_search(u.instruction, m, drawer)) {
      k = m[1];
      break;
    }
  }
  for (std::size_t pos; (pos = text.find("@K@")) != std::string::npos;) text.replace(pos, 3, k);
  return text;
}

}  // namespace robosynth::testing
