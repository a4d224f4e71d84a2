// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "support.hpp"

using namespace robosynth;
using namespace robosynth::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome pre_grasp() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  bool exact_final = true;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p = random_point(rng, -1.0, 2.0);
    const Vec3 a = random_unit(rng);
    const auto w = pre_grasp_trajectory(p, a);
    if (w.size() != 3) return {false, "wrong waypoint count"};
    const Vec3 e0(p.x() - 0.1 * a.x(), p.y() - 0.1 * a.y(), p.z() - 0.1 * a.z());
    const Vec3 e1(p.x() - 0.08 * a.x(), p.y() - 0.08 * a.y(), p.z() - 0.08 * a.z());
    worst = std::max({worst, (w[0] - e0).cwiseAbs().maxCoeff(), (w[1] - e1).cwiseAbs().maxCoeff()});
    for (int k = 0; k < 3; ++k) exact_final = exact_final && w[2][k] == p[k];
  }
  const double secs = seconds_since(t0);
  return {exact_final && worst <= 1e-12 && secs < 1.0,
          fmt("final bit-exact=%s, max dev %.2e, %.3f s", exact_final ? "yes" : "no", worst, secs)};
}

Outcome arc_path() {
  const auto t0 = Clock::now();
  Rng rng(202);
  std::uniform_real_distribution<double> ang(-180.0, 180.0);
  std::uniform_int_distribution<int> steps(1, 30);
  double end_err = 0.0, dist_err = 0.0, round_trip = 0.0;
  for (int i = 0; i < 500; ++i) {
    const Vec3 axis = random_unit(rng);
    const Vec3 origin = random_point(rng, -1.0, 1.0);
    const Pose start(random_point(rng, -1.0, 1.0), random_rotation(rng));
    const double deg = ang(rng);
    const int n = steps(rng);
    const auto fwd = arc_path_around_joint(start, axis, origin, n, deg);
    const Pose& last = fwd.waypoints.back().pose;
    const double rad = deg2rad(deg);
    const Vec3 want = rodrigues(start.position, axis, origin, rad);
    const Quat want_q = Quat(Eigen::AngleAxisd(rad, axis)) * start.orientation;
    end_err = std::max({end_err, (last.position - want).norm(), rotation_distance(last.orientation, want_q)});
    const double r0 = (start.position - origin).cross(axis).norm();
    for (const auto& w : fwd.waypoints) {
      dist_err = std::max(dist_err, std::abs((w.pose.position - origin).cross(axis).norm() - r0));
    }
    const auto back = arc_path_around_joint(last, axis, origin, n, -deg);
    const Pose& home = back.waypoints.back().pose;
    round_trip = std::max({round_trip, (home.position - start.position).norm(),
                           rotation_distance(home.orientation, start.orientation)});
  }
  const double secs = seconds_since(t0);
  return {end_err <= 1e-9 && dist_err <= 1e-9 && round_trip <= 1e-9 && secs < 1.0,
          fmt("endpoint %.2e, axis distance %.2e, round trip %.2e, %.3f s", end_err, dist_err, round_trip,
              secs)};
}

Outcome offset_loss_check() {
  Rng rng(303);
  const Vec3 o(1, 0, 0);
  const double self = offset_loss(o, o);
  const double hand = offset_loss(Vec3(0, 1, 0), Vec3(1, 0, 0));
  bool never_below = true;
  std::normal_distribution<double> n(0.0, 0.3);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 truth = random_point(rng, -1.0, 1.0);
    if (truth.norm() < 1e-3) continue;
    const double base = offset_loss(truth, truth);
    const Vec3 pert = truth + Vec3(n(rng), n(rng), n(rng));
    if (offset_loss(pert, truth) < base) never_below = false;
  }
  const bool ok = self == -1.0 && std::abs(hand - std::sqrt(2.0)) <= 1e-12 && never_below;
  return {ok, fmt("L(o,o)=%.17g, L(e2,e1)=%.15f, perturbations never lower=%s", self, hand,
                  never_below ? "yes" : "no")};
}

Outcome joint_estimation() {
  const auto t0 = Clock::now();
  int joints = 0, type_hits = 0;
  double worst_axis = 0.0;
  for (int s = 0; s < 20; ++s) {
    const SceneFile sf = generate_scene(static_cast<std::uint64_t>(s), family_config(s % 2 ? "door_open" : "drawer_open"));
    const WorldState& w = sf.state;
    const auto it = std::find_if(w.objects.begin(), w.objects.end(),
                                 [](const SceneObject& o) { return !o.joints.empty(); });
    if (it == w.objects.end()) return {false, "scene without articulated object"};
    const ArticulationTruth truth = articulation_truth(w, it->name);
    Rng rng(static_cast<std::uint64_t>(1000 + s));
    std::vector<Vec3> pts;
    std::vector<int> link;
    for (const auto& wp : world_primitives(w)) {
      if (&w.objects[wp.object] != &*it || wp.prim.type != ShapeType::box) continue;
      const int l = link_of_part(*it, it->parts[wp.part].name);
      for (const auto& p : sample_box_surface(wp.prim, 150, rng)) {
        pts.push_back(p);
        link.push_back(l);
      }
    }
    const auto preds = oracle_predictions(pts, link, truth.links);
    const auto clusters = estimate_joints(preds);
    for (std::size_t l = 1; l < truth.links.size(); ++l) {
      ++joints;
      const LinkTruth& lt = truth.links[l];
      const JointCluster* best = nullptr;
      for (const auto& c : clusters) {
        if (!best || (c.centroid - lt.centroid).norm() < (best->centroid - lt.centroid).norm()) best = &c;
      }
      if (!best) continue;
      const JointType want = lt.cls == PartClass::prismatic ? JointType::prismatic : JointType::revolute;
      if (best->joint.type == want) ++type_hits;
      const double err = rad2deg(angle_between(best->joint.axis, lt.axis_direction));
      worst_axis = std::max(worst_axis, std::min(err, 180.0 - err));
    }
  }

  Rng rng(404);
  std::vector<Vec3> pts;
  for (int i = 0; i < 1000; ++i) pts.push_back(random_point(rng, -0.1, 0.1));
  std::vector<int> link(pts.size(), 0);
  LinkTruth part;
  part.cls = PartClass::prismatic;
  part.axis_direction = Vec3(1, 2, 2).normalized();
  part.centroid = Vec3::Zero();
  const std::vector<LinkTruth> links{part};
  OracleNoise noise{0.05, 0.05, 0.05, 5};
  const auto noisy = estimate_joints(oracle_predictions(pts, link, links, noise));
  double noisy_err = 180.0;
  if (noisy.size() == 1) noisy_err = rad2deg(angle_between(noisy[0].joint.axis, part.axis_direction));

  const double secs = seconds_since(t0);
  const bool ok = joints > 0 && type_hits == joints && worst_axis < 0.1 && noisy_err < 1.0 && secs < 10.0;
  return {ok, fmt("%d/%d joint types, worst axis %.2e deg, noisy axis %.3f deg, %.2f s", type_hits, joints,
                  worst_axis, noisy_err, secs)};
}

Outcome plane_detection() {
  Rng rng(505);
  std::uniform_real_distribution<double> u(-0.15, 0.15);
  double worst_n = 0.0, worst_d = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec3 n = random_unit(rng);
    const Vec3 c = random_point(rng, -1.0, 1.0);
    const Vec3 e1 = any_orthogonal(n), e2 = n.cross(e1);
    std::vector<Vec3> pts;
    for (int k = 0; k < 400; ++k) pts.push_back(c + u(rng) * e1 + u(rng) * e2);
    const auto planes = extract_planes(pts);
    if (planes.empty()) return {false, "no plane recovered"};
    const PlaneInfo& p = planes.front();
    const double sign = p.normal.dot(n) < 0 ? -1.0 : 1.0;
    worst_n = std::max(worst_n, rad2deg(angle_between(sign * p.normal, n)));
    worst_d = std::max(worst_d, std::abs(sign * p.offset - n.dot(c)));
  }
  return {worst_n < 0.1 && worst_d < 1e-4, fmt("worst normal %.2e deg, worst offset %.2e m", worst_n, worst_d)};
}

Outcome planner() {
  const auto t0 = Clock::now();
  int found = 0, passed = 0, identical = 0, blocked = 0;
  const int cases = 50;
  for (int s = 0; s < cases; ++s) {
    const ObstructedScene sc = obstructed_scene(static_cast<std::uint64_t>(s));
    PlannerOptions po;
    po.seed = static_cast<std::uint64_t>(7000 + s);
    po.samples = 1024;
    const Trajectory direct = straight_line(sc.start, sc.goal.position - sc.start.position,
                                            (sc.goal.position - sc.start.position).norm(), po.waypoints);
    blocked += !recheck_path(direct, *sc.constraints.grid, sc.constraints.workspace, sc.constraints.gripper,
                             sc.constraints.finger_opening);
    auto plan = [&]() -> std::optional<Trajectory> {
      try {
        return plan_free_path(sc.start, sc.goal, sc.constraints, po);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::planning_failed) throw;
        return std::nullopt;
      }
    };
    const auto a = plan();
    const auto b = plan();
    bool same = a.has_value() == b.has_value();
    if (a && b) {
      same = a->waypoints.size() == b->waypoints.size() && a->cost == b->cost;
      for (std::size_t i = 0; same && i < a->waypoints.size(); ++i) {
        same = a->waypoints[i].pose.position == b->waypoints[i].pose.position &&
               a->waypoints[i].pose.orientation.coeffs() == b->waypoints[i].pose.orientation.coeffs();
      }
    }
    identical += same;
    if (!a) continue;
    ++found;
    passed += recheck_path(*a, *sc.constraints.grid, sc.constraints.workspace, sc.constraints.gripper,
                           sc.constraints.finger_opening);
  }
  const double secs = seconds_since(t0);
  const bool ok = blocked == cases && found >= 0.95 * cases && passed == found && identical == cases && secs < 60.0;
  return {ok, fmt("%d/%d straight lines blocked, %d/%d found, %d/%d re-check clean, %d/%d bit-identical, %.1f s",
                  blocked, cases, found, cases, passed, found, identical, cases, secs)};
}

Outcome occupancy() {
  const BoxScene sc = single_box_scene();
  const RenderResult rr = render_views(sc.world, sc.world.cameras);
  const DepthImage& img = rr.images.front();
  GridSpec gs;
  gs.origin = Vec3(-0.4, -0.3, 1.0);
  gs.voxel_size = 0.01;
  gs.dims = {60, 60, 60};
  TsdfVolume vol(gs);
  tsdf_integrate(vol, img);
  const OccupancyGrid grid = occupancy_from_tsdf(vol);
  const double delta = vol.truncation();

  // A probe voxel is judged by the pixel its center projects to, as fusion does.
  const Mat3 to_cam = img.extrinsic.rotation().transpose();
  auto pixel_depth = [&](const Vec3& p, double& z) -> std::optional<double> {
    const Vec3 pc = to_cam * (p - img.extrinsic.position);
    z = pc.z();
    const int u = static_cast<int>(std::floor(img.intrinsics.fx * pc.x() / pc.z() + img.intrinsics.cx));
    const int v = static_cast<int>(std::floor(img.intrinsics.fy * pc.y() / pc.z() + img.intrinsics.cy));
    if (u < 0 || v < 0 || u >= img.width || v >= img.height || !img.valid(u, v)) return std::nullopt;
    return img.at(u, v);
  };

  int surf = 0, surf_ok = 0, ray = 0, ray_ok = 0, hidden = 0, hidden_ok = 0;
  auto interior = [&](int u, int v) {
    for (int dv = -2; dv <= 2; ++dv)
      for (int du = -2; du <= 2; ++du) {
        const int uu = u + du, vv = v + dv;
        if (uu < 0 || vv < 0 || uu >= img.width || vv >= img.height || !img.valid(uu, vv)) return false;
      }
    return true;
  };
  const Vec3 eye = img.extrinsic.position;
  for (int v = 0; v < img.height; v += 2) {
    for (int u = 0; u < img.width; u += 2) {
      if (!interior(u, v)) continue;
      const Vec3 hit = img.backproject(u, v);
      const Vec3 dir = hit - eye;
      ++surf;
      surf_ok += query_occupancy(grid, hit) == Occupancy::occupied;
      for (double f : {0.5, 0.7, 0.9}) {
        const Vec3 p = eye + dir * f;
        const auto idx = gs.voxel_of(p);
        if (!idx) continue;
        double z = 0.0;
        const auto d = pixel_depth(gs.voxel_center(*idx), z);
        if (!d || *d - z <= gs.voxel_size) continue;
        ++ray;
        ray_ok += grid.at(*idx) == Occupancy::free;
      }
      const Vec3 behind = hit + dir.normalized() * (delta + 0.03);
      if (point_in_aabb(behind, gs.bounds())) {
        ++hidden;
        hidden_ok += query_occupancy(grid, behind) == Occupancy::unknown;
      }
    }
  }
  const bool ok = surf > 0 && ray > 0 && hidden > 0 && surf == surf_ok && ray == ray_ok && hidden == hidden_ok;
  return {ok, fmt("surface %d/%d occupied, on-ray %d/%d free, occluded %d/%d unknown", surf_ok, surf, ray_ok,
                  ray, hidden_ok, hidden)};
}

Outcome verifier() {
  const auto corpus = load_corpus(ROBOSYNTH_CORPUS_DIR);
  int clean = 0, seeded = 0, right = 0, false_pos = 0;
  std::string wrong;
  for (const auto& e : corpus) {
    const auto vs = verify(parse_program(read_text(e.path)));
    if (e.expected == "clean") {
      ++clean;
      if (vs.empty()) {
        ++right;
      } else {
        ++false_pos;
        wrong += " " + e.path.filename().string();
      }
      continue;
    }
    ++seeded;
    if (vs.size() == 1 && to_string(vs[0].rule) == e.expected) {
      ++right;
    } else {
      wrong += " " + e.path.filename().string();
    }
  }
  const bool ok = clean == 10 && seeded == 20 && right == 30 && false_pos == 0;
  return {ok, fmt("%d/%zu programs exact (%d clean, %d seeded), %d false positives%s", right, corpus.size(), clean,
                  seeded, false_pos, wrong.empty() ? "" : (", wrong:" + wrong).c_str())};
}

Outcome end_to_end() {
  const auto t0 = Clock::now();
  int total = 0, ok = 0;
  bool failures_are_planning = true;
  std::ostringstream per_family;
  for (const auto& fam : families()) {
    int fam_ok = 0;
    for (int s = 0; s < 20; ++s) {
      ++total;
      const SceneFile sf = generate_scene(static_cast<std::uint64_t>(s), family_config(fam));
      const auto prog = parse_program(oracle_program(ROBOSYNTH_PROGRAM_DIR, fam, sf));
      const ExecutionReport rep = interpret(prog, sf.state, sf.tasks.tasks);
      if (rep.success) {
        ++ok;
        ++fam_ok;
        continue;
      }
      const bool planning = rep.error && *rep.error == ErrorCode::planning_failed;
      failures_are_planning = failures_are_planning && planning;
      std::cout << "  e2e failure " << fam << " seed " << s << ": "
                << (rep.error ? std::string(to_string(*rep.error)) + " " + rep.error_message : "task not achieved")
                << '\n';
    }
    per_family << ' ' << fam << ' ' << fam_ok << "/20";
  }
  const double secs = seconds_since(t0);
  const bool pass = ok >= 0.95 * total && failures_are_planning && secs < 300.0;
  return {pass, fmt("%d/%d succeeded,%s, %.1f s", ok, total, per_family.str().c_str(), secs)};
}

Outcome grasp_preference() {
  const Vec3 long_axis = Vec3::UnitX();
  const PerceivedObject obj = perceive(reference_block_scene(0.0), "cube");
  const auto cands = sample_adaptive_grasps(obj.percept.cloud, obj.grid);
  if (cands.empty()) return {false, "no candidates"};
  const auto plain = rank_by_preference(cands, {});
  bool same_order = plain.size() == cands.size();
  for (std::size_t i = 1; same_order && i < plain.size(); ++i) {
    same_order = plain[i - 1].base_score >= plain[i].base_score;
  }
  for (std::size_t i = 0; same_order && i < plain.size(); ++i) {
    same_order = plain[i].pose.position == cands[i].pose.position;
  }
  GraspPreference pref;
  pref.preferred_plane_normal = long_axis;
  const auto ranked = rank_by_preference(cands, pref);
  auto align = [&](const GraspCandidate& c) {
    const double a = rad2deg(angle_between(c.plane_normal(), long_axis));
    return std::min(a, 180.0 - a);
  };
  const double before = align(plain.front()), after = align(ranked.front());
  const bool changed = ranked.front().pose.position != plain.front().pose.position ||
                       ranked.front().pose.orientation.coeffs() != plain.front().pose.orientation.coeffs();
  const bool ok = same_order && changed && after <= 10.0;
  return {ok, fmt("%zu candidates, base order kept=%s, argmax changed=%s, alignment %.1f -> %.1f deg", cands.size(),
                  same_order ? "yes" : "no", changed ? "yes" : "no", before, after)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"pre-grasp formula", pre_grasp},
      {"arc path", arc_path},
      {"offset loss", offset_loss_check},
      {"joint estimation", joint_estimation},
      {"plane detection", plane_detection},
      {"planner", planner},
      {"occupancy tri-state", occupancy},
      {"verifier corpus", verifier},
      {"end-to-end families", end_to_end},
      {"grasp preference", grasp_preference},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << i + 1 << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  return failed ? 1 : 0;
}
