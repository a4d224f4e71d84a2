#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "robosynth/exec.hpp"
#include "robosynth/geom.hpp"

namespace robosynth {

struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
};

/// Pinhole depth image. Camera frame: +z forward, +x right, +y down.
/// Depth is z-depth in meters; 0 or NaN means no return.
struct DepthImage {
  int view_id = 0;
  int width = 0;
  int height = 0;
  std::vector<double> depth;  // row-major, width * height
  Intrinsics intrinsics;
  Pose extrinsic;  // camera-to-world

  double at(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u]; }
  bool valid(int u, int v) const;
  /// World point of the pixel center (u + 0.5, v + 0.5) at its depth.
  Vec3 backproject(int u, int v) const;
  /// Projects a world point; returns (u, v, z_camera) or nullopt behind camera.
  std::optional<Vec3> project(const Vec3& world) const;
};

void check_intrinsics(const Intrinsics& k);

using Index3 = std::array<int, 3>;

/// Regular voxel lattice; voxel (i,j,k) spans origin + [i,i+1) * voxel_size.
struct GridSpec {
  Vec3 origin = Vec3::Zero();
  double voxel_size = 0.01;
  Index3 dims{0, 0, 0};

  std::size_t count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t linear(const Index3& idx) const {
    return static_cast<std::size_t>(idx[0]) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(idx[1]) +
                static_cast<std::size_t>(dims[1]) * idx[2]);
  }
  Index3 unravel(std::size_t linear_index) const;
  Vec3 voxel_center(const Index3& idx) const;
  std::optional<Index3> voxel_of(const Vec3& p) const;
  AABB3 bounds() const;
};

class TsdfVolume {
 public:
  static constexpr double kMaxWeight = 64.0;

  /// truncation <= 0 selects the default of 4 voxels.
  explicit TsdfVolume(const GridSpec& spec, double truncation = 0.0);

  const GridSpec& spec() const { return spec_; }
  double truncation() const { return truncation_; }
  double sdf(std::size_t i) const { return sdf_[i]; }
  double weight(std::size_t i) const { return weight_[i]; }
  std::vector<double>& sdf_data() { return sdf_; }
  std::vector<double>& weight_data() { return weight_; }
  const std::vector<double>& sdf_data() const { return sdf_; }
  const std::vector<double>& weight_data() const { return weight_; }

 private:
  GridSpec spec_;
  double truncation_;
  std::vector<double> sdf_;
  std::vector<double> weight_;
};

/// Projective TSDF fusion of one depth image (running weighted average,
/// unit weight per observation, weight capped at kMaxWeight).
void tsdf_integrate(TsdfVolume& vol, const DepthImage& img,
                    ExecPolicy policy = ExecPolicy::parallel);

enum class Occupancy : std::uint8_t { free = 0, occupied = 1, unknown = 2, out_of_bounds = 3 };

char occupancy_symbol(Occupancy c);

struct OccupancyGrid {
  GridSpec spec;
  std::vector<Occupancy> cells;

  Occupancy at(const Index3& idx) const { return cells[spec.linear(idx)]; }
  std::size_t count(Occupancy state) const;
};

/// weight 0 -> unknown, sdf <= voxel_size -> occupied, otherwise free.
OccupancyGrid occupancy_from_tsdf(const TsdfVolume& vol);

Occupancy query_occupancy(const OccupancyGrid& grid, const Vec3& p);

/// Copy of `grid` where occupied cells whose centers lie in `region` are free.
OccupancyGrid mask_region(const OccupancyGrid& grid, const AABB3& region);

/// Text dump: header (origin, voxel size, dims) plus run-length encoded cells.
void write_grid(std::ostream& os, const OccupancyGrid& grid);
OccupancyGrid read_grid(std::istream& is);

}  // namespace robosynth
