#include <gtest/gtest.h>

#include <algorithm>

#include "support.hpp"

using namespace robosynth;
using namespace robosynth::testing;

namespace {

WorldState two_view_box() {
  BoxScene sc = single_box_scene();
  DepthImage side = sc.world.cameras.front();
  side.view_id = 1;
  side.extrinsic = look_at(Vec3(-0.1, -0.6, 1.6), Vec3(-0.1, 0.0, 1.3));
  sc.world.cameras.push_back(side);
  return sc.world;
}

ObjectPercept plane_percept(double z, int n) {
  ObjectPercept p;
  p.name = p.label = "slab";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p.cloud.points.emplace_back(-0.1 + 0.01 * i, -0.1 + 0.01 * j, z);
  p.bbox = bounding_box(p.cloud.points);
  return p;
}

}  // namespace

TEST(MatchViews, TwoViewsOfOneBoxMerge) {
  const WorldState w = two_view_box();
  const RenderResult rr = render_views(w, w.cameras);
  ASSERT_EQ(rr.detections.size(), 2u);
  const MatchResult mr = match_views(rr.detections, rr.images);
  ASSERT_EQ(mr.percepts.size(), 1u);
  const ObjectPercept& p = mr.percepts.front();
  EXPECT_EQ(p.name, "box");
  const AABB3 truth = single_box_scene().box;
  EXPECT_TRUE(point_in_aabb(p.bbox.min, truth.inflated(0.005)));
  EXPECT_TRUE(point_in_aabb(p.bbox.max, truth.inflated(0.005)));
  for (const auto& q : p.cloud.points) ASSERT_TRUE(point_in_aabb(q, p.bbox));
}

TEST(MatchViews, DisjointSameLabelGetIndexedByX) {
  WorldState w = two_view_box();
  SceneObject second = w.objects.front();
  second.name = "box_far";
  second.pose.position.x() -= 0.25;
  w.objects.push_back(second);
  w.cameras.resize(1);
  w.cameras[0].extrinsic = look_at(Vec3(-0.2, -0.8, 1.7), Vec3(-0.2, 0.0, 1.3));
  const RenderResult rr = render_views(w, w.cameras);
  const MatchResult mr = match_views(rr.detections, rr.images);
  ASSERT_EQ(mr.percepts.size(), 2u);
  EXPECT_EQ(mr.percepts[0].name, "box_0");
  EXPECT_EQ(mr.percepts[1].name, "box_1");
  EXPECT_LT(mr.percepts[0].bbox.center().x(), mr.percepts[1].bbox.center().x());
}

TEST(MatchViews, EmptyInputGivesEmptyOutput) {
  EXPECT_TRUE(match_views({}, {}).percepts.empty());
}

TEST(MatchViews, UnknownViewRejected) {
  Detection2D d;
  d.view_id = 9;
  d.label = "x";
  d.box = {0, 0, 4, 4};
  const WorldState w = two_view_box();
  const RenderResult rr = render_views(w, w.cameras);
  const std::vector<Detection2D> dets{d};
  EXPECT_EQ(error_code([&] { match_views(dets, rr.images); }), ErrorCode::precondition_violation);
}

TEST(MatchViewsProperty, DetectionOrderDoesNotMatter) {
  WorldState w = two_view_box();
  SceneObject other = w.objects.front();
  other.name = other.label = "crate";
  other.pose.position.y() += 0.2;
  w.objects.push_back(other);
  const RenderResult rr = render_views(w, w.cameras);
  const MatchResult base = match_views(rr.detections, rr.images);
  std::vector<Detection2D> dets = rr.detections;
  Rng rng(11);
  for (int t = 0; t < 5; ++t) {
    std::shuffle(dets.begin(), dets.end(), rng);
    const MatchResult mr = match_views(dets, rr.images);
    ASSERT_EQ(mr.percepts.size(), base.percepts.size());
    for (std::size_t i = 0; i < mr.percepts.size(); ++i) {
      EXPECT_EQ(mr.percepts[i].name, base.percepts[i].name);
      EXPECT_EQ(mr.percepts[i].bbox.min, base.percepts[i].bbox.min);
      EXPECT_EQ(mr.percepts[i].bbox.max, base.percepts[i].bbox.max);
    }
  }
}

TEST(Plane, TableNormalFacesQuery) {
  const ObjectPercept p = plane_percept(1.05, 20);
  const PlaneInfo up = detect_plane_near(p, Vec3(0, 0, 1.2));
  EXPECT_NEAR((up.normal - Vec3::UnitZ()).norm(), 0.0, 1e-9);
  EXPECT_NEAR(up.offset, 1.05, 1e-9);
  const PlaneInfo down = detect_plane_near(p, Vec3(0, 0, 0.9));
  EXPECT_NEAR((down.normal + Vec3::UnitZ()).norm(), 0.0, 1e-9);
}

TEST(Plane, TooFewPoints) {
  ObjectPercept p;
  p.name = "tiny";
  p.cloud.points = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  EXPECT_EQ(error_code([&] { detect_plane_near(p, Vec3(0, 0, 1)); }), ErrorCode::no_plane_found);
  const std::vector<Vec3> two{Vec3::Zero(), Vec3::UnitX()};
  EXPECT_EQ(error_code([&] { fit_plane(two); }), ErrorCode::no_plane_found);
}

TEST(PlaneProperty, RecoversRandomPlanes) {
  Rng rng(21);
  for (int t = 0; t < 20; ++t) {
    const Vec3 n = random_unit(rng);
    const Vec3 a = any_orthogonal(n), b = n.cross(a);
    const Vec3 c = random_point(rng, -1, 1);
    std::vector<Vec3> pts;
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (int i = 0; i < 200; ++i) pts.push_back(c + u(rng) * a + u(rng) * b);
    const PlaneInfo fit = fit_plane(pts);
    EXPECT_LT(std::min((fit.normal - n).norm(), (fit.normal + n).norm()), 1e-9);
  }
}

TEST(Parts, MissingPartRaises) {
  const ObjectPercept p = plane_percept(1.0, 5);
  EXPECT_EQ(extract_part_cloud(p, "").size(), 25u);
  EXPECT_EQ(error_code([&] { extract_part_cloud(p, "handle"); }), ErrorCode::part_not_found);
}

TEST(Normals, OrientedAwayFromInside) {
  Rng rng(5);
  PointCloud c;
  const Vec3 center(0.1, 0.2, 1.3);
  for (int i = 0; i < 800; ++i) c.points.push_back(center + 0.05 * random_unit(rng));
  const PointCloud n = estimate_normals(c, 0.02, center);
  ASSERT_TRUE(n.has_normals());
  for (std::size_t i = 0; i < n.size(); ++i) {
    const Vec3 radial = (n.points[i] - center).normalized();
    ASSERT_GT(n.normals[i].dot(radial), 0.9);
  }
}
