#include "robosynth/articulation.hpp"

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "robosynth/error.hpp"
#include "spatial_hash.hpp"

namespace robosynth {

std::string to_string(JointType t) {
  return t == JointType::revolute ? "revolute" : "prismatic";
}

JointType joint_type_from_string(const std::string& s) {
  if (s == "revolute") return JointType::revolute;
  if (s == "prismatic") return JointType::prismatic;
  throw Error(ErrorCode::invalid_argument, "unknown joint type '" + s + "'");
}

namespace {

using NeighborLists = std::vector<std::vector<std::uint32_t>>;

NeighborLists neighbors_serial(std::span<const Vec3> points, double eps) {
  detail::SpatialHash hash(points, eps);
  NeighborLists out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) hash.radius_neighbors(points[i], eps, out[i]);
  return out;
}

NeighborLists neighbors_parallel(std::span<const Vec3> points, double eps) {
  detail::SpatialHash hash(points, eps);
  NeighborLists out(points.size());
  const auto n = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t i = 0; i < n; ++i) {
    hash.radius_neighbors(points[static_cast<std::size_t>(i)], eps,
                          out[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace

std::vector<int> dbscan(std::span<const Vec3> points, double eps, std::size_t min_pts,
                        ExecPolicy policy) {
  if (!(eps > 0.0) || min_pts < 1) {
    throw Error(ErrorCode::invalid_argument, "dbscan needs eps > 0 and min_pts >= 1");
  }
  constexpr int kUnvisited = -2;
  constexpr int kNoise = -1;
  std::vector<int> labels(points.size(), kUnvisited);
  if (points.empty()) return labels;

  const NeighborLists nbrs = policy == ExecPolicy::serial ? neighbors_serial(points, eps)
                                                          : neighbors_parallel(points, eps);
  int cluster = 0;
  std::vector<std::uint32_t> queue;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (labels[i] != kUnvisited) continue;
    if (nbrs[i].size() < min_pts) {
      labels[i] = kNoise;
      continue;
    }
    labels[i] = cluster;
    queue.assign(nbrs[i].begin(), nbrs[i].end());
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const auto q = queue[head];
      if (labels[q] == kNoise) labels[q] = cluster;  // border point
      if (labels[q] != kUnvisited) continue;
      labels[q] = cluster;
      if (nbrs[q].size() >= min_pts) queue.insert(queue.end(), nbrs[q].begin(), nbrs[q].end());
    }
    ++cluster;
  }
  return labels;
}

std::vector<JointCluster> estimate_joints(std::span<const PointPrediction> preds,
                                          const JointEstimateOptions& options) {
  std::vector<JointCluster> result;
  bool any_moving = false;
  for (PartClass cls : {PartClass::revolute, PartClass::prismatic}) {
    std::vector<std::size_t> idx;
    std::vector<Vec3> shifted;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (preds[i].cls != cls) continue;
      idx.push_back(i);
      shifted.push_back(preds[i].position + preds[i].offset);
    }
    if (idx.empty()) continue;
    any_moving = true;
    const auto labels = dbscan(shifted, options.eps, options.min_pts);
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      if (labels[k] >= 0) groups[labels[k]].push_back(k);
    }
    for (const auto& [label, locals] : groups) {
      if (locals.size() < options.min_pts) continue;
      JointCluster jc;
      Mat3 scatter = Mat3::Zero();
      Vec3 mean_dir = Vec3::Zero();
      Vec3 axis_point = Vec3::Zero();
      for (auto k : locals) {
        const auto& p = preds[idx[k]];
        jc.members.push_back(idx[k]);
        jc.centroid += shifted[k];
        scatter += p.axis_direction * p.axis_direction.transpose();
        mean_dir += p.axis_direction;
        axis_point += p.position + p.axis_projection;
      }
      const double n = static_cast<double>(locals.size());
      jc.centroid /= n;
      Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
      Vec3 axis = eig.eigenvectors().col(2).normalized();
      if (axis.dot(mean_dir) < 0.0) axis = -axis;
      jc.joint.axis = axis;
      jc.joint.position = axis_point / n;
      jc.joint.type = cls == PartClass::revolute ? JointType::revolute : JointType::prismatic;
      result.push_back(std::move(jc));
    }
  }
  if (!any_moving) {
    throw Error(ErrorCode::no_joints_found, "no non-static points predicted");
  }
  return result;
}

double offset_loss(const Vec3& predicted, const Vec3& truth) {
  const double dist = (predicted - truth).norm();
  const double np = predicted.norm();
  const double nt = truth.norm();
  const double cosine = (np > 0.0 && nt > 0.0) ? (truth / nt).dot(predicted / np) : 0.0;
  return dist - cosine;
}

GammaLoss gamma_loss(std::span<const PointPrediction> preds,
                     std::span<const PointPrediction> truth) {
  if (preds.empty() || preds.size() != truth.size()) {
    throw Error(ErrorCode::invalid_argument,
                "gamma_loss needs equally sized, non-empty prediction sets");
  }
  GammaLoss loss;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    loss.classification += preds[i].cls == truth[i].cls ? 0.0 : 1.0;
    loss.offset += offset_loss(preds[i].offset, truth[i].offset);
    loss.projection += offset_loss(preds[i].axis_projection, truth[i].axis_projection);
    loss.direction += offset_loss(preds[i].axis_direction, truth[i].axis_direction);
  }
  const double n = static_cast<double>(preds.size());
  loss.classification /= n;
  loss.offset /= n;
  loss.projection /= n;
  loss.direction /= n;
  loss.total = loss.classification + loss.offset + loss.projection + loss.direction;
  return loss;
}

std::vector<PointPrediction> oracle_predictions(std::span<const Vec3> points,
                                                std::span<const int> link_of_point,
                                                std::span<const LinkTruth> links,
                                                const OracleNoise& noise) {
  if (points.size() != link_of_point.size()) {
    throw Error(ErrorCode::invalid_argument, "one link label per point required");
  }
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto jitter = [&](double sigma) {
    if (sigma <= 0.0) return Vec3(Vec3::Zero());
    return Vec3(sigma * gauss(rng), sigma * gauss(rng), sigma * gauss(rng));
  };
  std::vector<PointPrediction> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int link = link_of_point[i];
    if (link < 0 || link >= static_cast<int>(links.size())) {
      throw Error(ErrorCode::invalid_argument, "point references unknown link");
    }
    const LinkTruth& lt = links[link];
    PointPrediction p;
    p.position = points[i];
    p.cls = lt.cls;
    p.offset = lt.centroid - points[i] + jitter(noise.offset_sigma);
    const Vec3 d = lt.axis_direction.normalized();
    const Vec3 rel = points[i] - lt.axis_point;
    const Vec3 foot = lt.axis_point + d * d.dot(rel);
    p.axis_projection = foot - points[i] + jitter(noise.projection_sigma);
    Vec3 dir = d + jitter(noise.direction_sigma);
    p.axis_direction = dir.norm() > 1e-12 ? Vec3(dir.normalized()) : d;
    out.push_back(p);
  }
  return out;
}

void write_predictions(std::ostream& os, std::span<const PointPrediction> preds) {
  os.precision(17);
  for (const auto& p : preds) {
    os << p.position.x() << ' ' << p.position.y() << ' ' << p.position.z() << ' '
       << static_cast<int>(p.cls);
    for (const Vec3* v : {&p.offset, &p.axis_projection, &p.axis_direction}) {
      os << ' ' << v->x() << ' ' << v->y() << ' ' << v->z();
    }
    os << '\n';
  }
}

std::vector<PointPrediction> read_predictions(std::istream& is) {
  std::vector<PointPrediction> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    PointPrediction p;
    int cls = 0;
    ls >> p.position.x() >> p.position.y() >> p.position.z() >> cls;
    for (Vec3* v : {&p.offset, &p.axis_projection, &p.axis_direction}) {
      ls >> v->x() >> v->y() >> v->z();
    }
    if (!ls || cls < 0 || cls > 2) {
      throw Error(ErrorCode::io_error, "bad prediction record on line " + std::to_string(line_no));
    }
    p.cls = static_cast<PartClass>(cls);
    out.push_back(p);
  }
  return out;
}

}  // namespace robosynth
