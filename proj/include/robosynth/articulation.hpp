#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "robosynth/exec.hpp"
#include "robosynth/geom.hpp"

namespace robosynth {

enum class PartClass : int { static_part = 0, revolute = 1, prismatic = 2 };

enum class JointType { revolute, prismatic };

std::string to_string(JointType t);
JointType joint_type_from_string(const std::string& s);

/// Per-point output of the articulation predictor.
struct PointPrediction {
  Vec3 position = Vec3::Zero();
  PartClass cls = PartClass::static_part;
  Vec3 offset = Vec3::Zero();           // toward the part centroid
  Vec3 axis_projection = Vec3::Zero();  // from the point to its foot on the axis
  Vec3 axis_direction = Vec3::UnitZ();
};

struct JointInfo {
  Vec3 position = Vec3::Zero();  // a point on the axis
  Vec3 axis = Vec3::UnitZ();
  JointType type = JointType::revolute;
  double lower = 0.0;
  double upper = 0.0;
  double value = 0.0;
};

/// DBSCAN over a fixed radius. Labels are cluster ids in discovery order,
/// -1 for noise. Deterministic for a given input order.
std::vector<int> dbscan(std::span<const Vec3> points, double eps, std::size_t min_pts,
                        ExecPolicy policy = ExecPolicy::parallel);

struct JointEstimateOptions {
  double eps = 0.05;
  std::size_t min_pts = 10;
};

struct JointCluster {
  std::vector<std::size_t> members;  // indices into the prediction list
  Vec3 centroid = Vec3::Zero();      // mean of shifted points p + o
  JointInfo joint;                   // limits/value left at zero
};

/// Clusters non-static predictions per class on p + o, then votes an axis per
/// cluster: direction = dominant eigenvector of sum(d d^T) signed toward the
/// mean d, position = mean of p + v.
std::vector<JointCluster> estimate_joints(std::span<const PointPrediction> preds,
                                          const JointEstimateOptions& options = {});

/// ||o_hat - o|| - (o/||o|| . o_hat/||o_hat||); the cosine term is 0 when
/// either vector has zero norm.
double offset_loss(const Vec3& predicted, const Vec3& truth);

struct GammaLoss {
  double total = 0.0;
  double classification = 0.0;
  double offset = 0.0;
  double projection = 0.0;
  double direction = 0.0;
};

GammaLoss gamma_loss(std::span<const PointPrediction> preds,
                     std::span<const PointPrediction> truth);

/// Ground truth of one rigid link as seen by the oracle predictor.
struct LinkTruth {
  PartClass cls = PartClass::static_part;
  Vec3 centroid = Vec3::Zero();
  Vec3 axis_point = Vec3::Zero();
  Vec3 axis_direction = Vec3::UnitZ();
};

struct OracleNoise {
  double offset_sigma = 0.0;
  double projection_sigma = 0.0;
  double direction_sigma = 0.0;
  std::uint64_t seed = 1;
};

/// Stand-in for the learned per-point predictor: exact fields from link
/// ground truth plus optional isotropic Gaussian noise (directions are
/// renormalized). link_of_point[i] indexes `links`.
std::vector<PointPrediction> oracle_predictions(std::span<const Vec3> points,
                                                std::span<const int> link_of_point,
                                                std::span<const LinkTruth> links,
                                                const OracleNoise& noise = {});

/// Columnar text, one point per line:
/// px py pz cls ox oy oz vx vy vz dx dy dz
void write_predictions(std::ostream& os, std::span<const PointPrediction> preds);
std::vector<PointPrediction> read_predictions(std::istream& is);

}  // namespace robosynth
