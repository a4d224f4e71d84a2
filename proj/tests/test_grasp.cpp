#include <gtest/gtest.h>

#include "support.hpp"

using namespace robosynth;
using namespace robosynth::testing;

namespace {

const Vec3 kCenter(-0.1, 0.0, 1.3);

OccupancyGrid empty_grid() {
  OccupancyGrid g;
  g.spec.origin = Vec3(5, 5, 5);
  g.spec.dims = {1, 1, 1};
  g.cells = {Occupancy::free};
  return g;
}

PointCloud cube_cloud(double half, int n, std::uint64_t seed) {
  Rng rng(seed);
  Primitive box;
  box.pose = Pose(kCenter, Quat::Identity());
  box.size = Vec3::Constant(half);
  PointCloud c;
  c.points = sample_box_surface(box, n, rng);
  for (const auto& p : c.points) {
    const Vec3 d = p - kCenter;
    int axis = 0;
    d.cwiseAbs().maxCoeff(&axis);
    Vec3 nrm = Vec3::Zero();
    nrm[axis] = d[axis] > 0 ? 1.0 : -1.0;
    c.normals.push_back(nrm);
  }
  return c;
}

GraspCandidate candidate(const Vec3& tip, const Vec3& jaw, const Vec3& approach, double score) {
  GraspCandidate c;
  c.pose = Pose(tip, Quat(frame_from_yz(jaw, approach)));
  c.tip_point = tip;
  c.base_score = score;
  c.width = 0.04;
  return c;
}

}  // namespace

TEST(Sampler, CubeWidthsMatchCubeSize) {
  const auto cands = sample_adaptive_grasps(cube_cloud(0.03, 1500, 1), empty_grid());
  ASSERT_FALSE(cands.empty());
  EXPECT_LE(cands.size(), 10u);
  for (const auto& c : cands) {
    EXPECT_GE(c.width, 0.06 - 1e-9);
    EXPECT_LE(c.width, 0.06 / std::cos(deg2rad(30.0)) + 1e-9);
    EXPECT_GE(c.base_score, 0.0);
    EXPECT_LE(c.base_score, 1.0);
  }
  for (std::size_t i = 1; i < cands.size(); ++i) EXPECT_GE(cands[i - 1].base_score, cands[i].base_score);
}

TEST(Sampler, SphereWidthsNearDiameter) {
  Rng rng(2);
  PointCloud c;
  for (int i = 0; i < 1500; ++i) {
    const Vec3 n = random_unit(rng);
    c.points.push_back(kCenter + 0.03 * n);
    c.normals.push_back(n);
  }
  const auto cands = sample_adaptive_grasps(c, empty_grid());
  ASSERT_FALSE(cands.empty());
  for (const auto& g : cands) {
    EXPECT_GE(g.width, 0.06 * std::cos(deg2rad(30.0)) - 1e-9);
    EXPECT_LE(g.width, 0.06 + 1e-9);
  }
}

TEST(Sampler, SinglePointHasNoGrasp) {
  PointCloud c;
  c.points = {kCenter};
  c.normals = {Vec3::UnitZ()};
  EXPECT_EQ(error_code([&] { sample_adaptive_grasps(c, empty_grid()); }), ErrorCode::no_grasp_found);
}

TEST(Sampler, TooWideObjectHasNoGrasp) {
  EXPECT_EQ(error_code([&] { sample_adaptive_grasps(cube_cloud(0.06, 1500, 3), empty_grid()); }),
            ErrorCode::no_grasp_found);
}

TEST(SamplerProperty, CandidatesKeepFingersOutOfTheCube) {
  const GraspSamplerOptions opt;
  const AABB3 inner(kCenter - Vec3::Constant(0.029), kCenter + Vec3::Constant(0.029));
  for (std::uint64_t s = 0; s < 5; ++s) {
    GraspSamplerOptions o = opt;
    o.seed = s;
    for (const auto& c : sample_adaptive_grasps(cube_cloud(0.03, 1200, 10 + s), empty_grid(), o)) {
      for (const auto& q : gripper_local_samples(o.gripper, 0.5 * c.width + o.finger_margin)) {
        ASSERT_FALSE(point_in_aabb(c.pose.apply(q), inner));
      }
      EXPECT_NEAR(c.jaw_axis().dot(c.approach()), 0.0, 1e-9);
      EXPECT_NEAR((c.jaw_axis().cross(c.approach()) - c.plane_normal()).norm(), 0.0, 1e-9);
    }
  }
}

TEST(SamplerProperty, OccupiedGridBlocksEverything) {
  OccupancyGrid g;
  g.spec.origin = kCenter - Vec3::Constant(0.2);
  g.spec.dims = {40, 40, 40};
  g.cells.assign(g.spec.count(), Occupancy::occupied);
  EXPECT_EQ(error_code([&] { sample_adaptive_grasps(cube_cloud(0.03, 800, 4), g); }),
            ErrorCode::no_grasp_found);
}

TEST(CentralLift, TopClosesAcrossShortSide) {
  const AABB3 box(Vec3(0.0, 0.0, 1.05), Vec3(0.04, 0.1, 1.15));
  const GraspCandidate g = central_lift_grasp(box, LiftDescription::top);
  EXPECT_NEAR((g.tip_point - Vec3(0.02, 0.05, 1.15)).norm(), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(g.jaw_axis().x()), 1.0, 1e-12);
  EXPECT_NEAR((g.approach() + Vec3::UnitZ()).norm(), 0.0, 1e-12);
  EXPECT_NEAR(g.width, 0.04, 1e-12);
  const GraspCandidate c = central_lift_grasp(box, LiftDescription::center);
  EXPECT_NEAR(c.tip_point.z(), 1.1, 1e-12);
}

TEST(CentralLift, WideObjectRejected) {
  const AABB3 box(Vec3(0.0, 0.0, 1.05), Vec3(0.1, 0.12, 1.15));
  EXPECT_EQ(error_code([&] { central_lift_grasp(box, LiftDescription::top); }),
            ErrorCode::object_too_wide);
}

TEST(Ranking, EmptyPreferenceKeepsBaseOrder) {
  const std::vector<GraspCandidate> c{
      candidate(Vec3(0, 0, 1), Vec3::UnitY(), -Vec3::UnitZ(), 0.9),
      candidate(Vec3(0.1, 0, 1), Vec3::UnitX(), -Vec3::UnitZ(), 0.5),
      candidate(Vec3(0.2, 0, 1), Vec3::UnitY(), Vec3::UnitX(), 0.7)};
  const auto r = rank_by_preference(c, {});
  EXPECT_EQ(r[0].base_score, 0.9);
  EXPECT_EQ(r[1].base_score, 0.7);
  EXPECT_EQ(r[2].base_score, 0.5);
}

TEST(Ranking, ApproachPreferencePromotesSideGrasp) {
  const std::vector<GraspCandidate> c{
      candidate(Vec3(0, 0, 1), Vec3::UnitY(), -Vec3::UnitZ(), 0.9),
      candidate(Vec3(0.2, 0, 1), Vec3::UnitY(), Vec3::UnitX(), 0.7)};
  GraspPreference p;
  p.preferred_approach_direction = Vec3(2, 0, 0);
  const auto r = rank_by_preference(c, p);
  EXPECT_EQ(r[0].tip_point, c[1].tip_point);
  EXPECT_NEAR(preference_score(c[1], p), 1.7, 1e-12);
  EXPECT_NEAR(preference_score(c[0], p), 0.9, 1e-12);
}

TEST(Ranking, PositionPreferencePicksNearest) {
  std::vector<GraspCandidate> c;
  for (int i = 0; i < 5; ++i) c.push_back(candidate(Vec3(0.05 * i, 0, 1), Vec3::UnitY(), -Vec3::UnitZ(), 0.5));
  GraspPreference p;
  p.preferred_position = Vec3(0.15, 0, 1);
  EXPECT_EQ(rank_by_preference(c, p).front().tip_point, c[3].tip_point);
}

TEST(RankingProperty, ArgmaxInvariantUnderWeightScaling) {
  Rng rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0), k(0.1, 10.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<GraspCandidate> c;
    for (int i = 0; i < 8; ++i) {
      const Vec3 jaw = random_unit(rng);
      c.push_back(candidate(random_point(rng, -0.2, 0.2), jaw, any_orthogonal(jaw), u(rng)));
    }
    GraspPreference p;
    p.preferred_position = random_point(rng, -0.2, 0.2);
    p.preferred_approach_direction = random_unit(rng);
    p.preferred_plane_normal = random_unit(rng);
    PreferenceWeights w;
    w.quality = u(rng);
    w.position = u(rng);
    w.approach = u(rng);
    w.plane_normal = u(rng);
    PreferenceWeights s = w;
    const double f = k(rng);
    s.quality *= f;
    s.position *= f;
    s.approach *= f;
    s.plane_normal *= f;
    const auto a = rank_by_preference(c, p, w);
    const auto b = rank_by_preference(c, p, s);
    EXPECT_EQ(a.front().tip_point, b.front().tip_point);
    EXPECT_EQ(a.size(), c.size());
  }
}

TEST(PreGrasp, ThreePointsAlongApproach) {
  const auto t = pre_grasp_trajectory(Vec3(0, 0, 1), Vec3(0, 0, -1));
  ASSERT_EQ(t.size(), 3u);
  EXPECT_NEAR((t[0] - Vec3(0, 0, 1.1)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((t[1] - Vec3(0, 0, 1.08)).norm(), 0.0, 1e-12);
  EXPECT_EQ(t[2], Vec3(0, 0, 1));
  EXPECT_EQ(error_code([] { pre_grasp_trajectory(Vec3::Zero(), Vec3::Zero()); }),
            ErrorCode::invalid_argument);
}
