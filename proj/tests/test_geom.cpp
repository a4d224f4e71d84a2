#include <gtest/gtest.h>

#include "support.hpp"

using namespace robosynth;
using namespace robosynth::testing;

TEST(Geom, QuarterTurnAboutZ) {
  const Vec3 p = rotate_about_axis(Vec3(1, 0, 0), Vec3::UnitZ(), Vec3::Zero(), kPi / 2);
  EXPECT_NEAR((p - Vec3(0, 1, 0)).norm(), 0.0, 1e-12);
}

TEST(Geom, ZeroAngleIsIdentity) {
  const Vec3 p(0.3, -0.2, 1.7);
  EXPECT_LT((rotate_about_axis(p, Vec3::UnitX(), Vec3(1, 2, 3), 0.0) - p).norm(), 1e-15);
}

TEST(Geom, EighthTurnMatchesHandRodrigues) {
  const Vec3 p = rotate_about_axis(Vec3(0.4, 0, 1.0), Vec3::UnitZ(), Vec3::Zero(), kPi / 4);
  const double r = 0.4 / std::sqrt(2.0);
  EXPECT_NEAR(p.x(), r, 1e-12);
  EXPECT_NEAR(p.y(), r, 1e-12);
  EXPECT_NEAR(p.z(), 1.0, 1e-12);
}

TEST(Geom, NonUnitAxisRejected) {
  try {
    rotate_about_axis(Vec3::Zero(), Vec3(0, 0, 2), Vec3::Zero(), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
  }
}

TEST(GeomProperty, RotationPreservesNormAndAxisDistance) {
  Rng rng(1);
  std::uniform_real_distribution<double> ang(-10.0, 10.0);
  for (int i = 0; i < 500; ++i) {
    const Vec3 k = random_unit(rng);
    const Vec3 o = random_point(rng, -1, 1);
    const Vec3 p = random_point(rng, -1, 1);
    const double a = ang(rng);
    const Vec3 q = rotate_about_axis(p, k, o, a);
    EXPECT_NEAR((q - o).norm(), (p - o).norm(), 1e-9);
    EXPECT_NEAR(distance_to_line(q, k, o), distance_to_line(p, k, o), 1e-9);
    EXPECT_NEAR((q - rodrigues(p, k, o, a)).norm(), 0.0, 1e-9);
    EXPECT_NEAR((rotate_about_axis(q, k, o, -a) - p).norm(), 0.0, 1e-9);
  }
}

TEST(GeomProperty, QuaternionMatrixRoundTrip) {
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const Quat q = random_rotation(rng);
    const Pose p(Vec3::Zero(), q.toRotationMatrix());
    EXPECT_LT(rotation_distance(p.orientation, q), 1e-9);
    EXPECT_NEAR(p.orientation.norm(), 1.0, 1e-9);
  }
}

TEST(GeomProperty, ComposeWithInverseIsIdentity) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Pose p(random_point(rng, -2, 2), random_rotation(rng));
    const Pose id = compose(p, inverse(p));
    EXPECT_LT(id.position.norm(), 1e-9);
    EXPECT_LT(rotation_distance(id.orientation, Quat::Identity()), 1e-9);
  }
}

TEST(GeomProperty, TransformPreservesDistances) {
  Rng rng(4);
  const Pose t(random_point(rng, -1, 1), random_rotation(rng));
  PointCloud c;
  for (int i = 0; i < 50; ++i) c.points.push_back(random_point(rng, -1, 1));
  const PointCloud d = cloud_transform(c, t);
  for (int i = 1; i < 50; ++i) {
    EXPECT_NEAR((d.points[i] - d.points[i - 1]).norm(), (c.points[i] - c.points[i - 1]).norm(), 1e-9);
  }
}

TEST(GeomProperty, ContainmentMonotoneUnderInflation) {
  Rng rng(5);
  std::uniform_real_distribution<double> m(0.0, 0.5);
  for (int i = 0; i < 300; ++i) {
    AABB3 b;
    b.expand(random_point(rng, -1, 1));
    b.expand(random_point(rng, -1, 1));
    const Vec3 p = random_point(rng, -1.5, 1.5);
    const double a = m(rng), c = a + m(rng);
    if (point_in_aabb(p, b.inflated(a))) EXPECT_TRUE(point_in_aabb(p, b.inflated(c)));
  }
}

TEST(Geom, AabbBasics) {
  const AABB3 b(Vec3::Zero(), Vec3::Constant(0.1));
  EXPECT_TRUE(point_in_aabb(Vec3::Constant(0.05), b));
  EXPECT_FALSE(point_in_aabb(Vec3(0.05, 0.05, 0.2), b));
  EXPECT_DOUBLE_EQ(iou(b, b), 1.0);
  EXPECT_DOUBLE_EQ(iou(b, AABB3(Vec3::Constant(1), Vec3::Constant(2))), 0.0);
  EXPECT_NEAR(b.volume(), 1e-3, 1e-15);
}

TEST(Geom, TranslationMovesEveryPointUp) {
  PointCloud c;
  c.points = {Vec3(0, 0, 0), Vec3(1, 2, 3)};
  const PointCloud d = cloud_transform(c, Pose(Vec3(0, 0, 1), Quat::Identity()));
  EXPECT_EQ(d.points[0].z(), 1.0);
  EXPECT_EQ(d.points[1].z(), 4.0);
}

TEST(Geom, FrameFromYzIsRightHanded) {
  const Mat3 r = frame_from_yz(Vec3::UnitY(), -Vec3::UnitZ());
  EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
  EXPECT_NEAR((r.col(0) - Vec3(-1, 0, 0)).norm(), 0.0, 1e-12);
}

TEST(Geom, PoseArrayRoundTrip) {
  const Pose p(Vec3(0.1, 0.2, 0.3), Quat(Eigen::AngleAxisd(0.7, Vec3(1, 1, 0).normalized())));
  const auto a = pose_to_array(p);
  const Pose q = pose_from_array(a);
  EXPECT_EQ(q.position, p.position);
  EXPECT_LT(rotation_distance(q.orientation, p.orientation), 1e-12);
}
