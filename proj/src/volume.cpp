#include "robosynth/volume.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "robosynth/error.hpp"

namespace robosynth {

bool DepthImage::valid(int u, int v) const {
  if (u < 0 || v < 0 || u >= width || v >= height) return false;
  const double d = at(u, v);
  return std::isfinite(d) && d > 0.0;
}

Vec3 DepthImage::backproject(int u, int v) const {
  const double d = at(u, v);
  const Vec3 cam((u + 0.5 - intrinsics.cx) * d / intrinsics.fx,
                 (v + 0.5 - intrinsics.cy) * d / intrinsics.fy, d);
  return extrinsic.apply(cam);
}

std::optional<Vec3> DepthImage::project(const Vec3& world) const {
  const Vec3 cam = extrinsic.orientation.conjugate() * (world - extrinsic.position);
  if (cam.z() <= 1e-9) return std::nullopt;
  return Vec3(intrinsics.fx * cam.x() / cam.z() + intrinsics.cx,
              intrinsics.fy * cam.y() / cam.z() + intrinsics.cy, cam.z());
}

void check_intrinsics(const Intrinsics& k) {
  if (!(k.fx > 0.0) || !(k.fy > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "focal lengths must be positive");
  }
}

Index3 GridSpec::unravel(std::size_t linear_index) const {
  const auto nx = static_cast<std::size_t>(dims[0]);
  const auto ny = static_cast<std::size_t>(dims[1]);
  return {static_cast<int>(linear_index % nx),
          static_cast<int>((linear_index / nx) % ny),
          static_cast<int>(linear_index / (nx * ny))};
}

Vec3 GridSpec::voxel_center(const Index3& idx) const {
  return origin + voxel_size * Vec3(idx[0] + 0.5, idx[1] + 0.5, idx[2] + 0.5);
}

std::optional<Index3> GridSpec::voxel_of(const Vec3& p) const {
  Index3 idx;
  for (int a = 0; a < 3; ++a) {
    const double f = std::floor((p[a] - origin[a]) / voxel_size);
    if (!(f >= 0.0) || f >= dims[a]) return std::nullopt;
    idx[a] = static_cast<int>(f);
  }
  return idx;
}

AABB3 GridSpec::bounds() const {
  return AABB3(origin, origin + voxel_size * Vec3(dims[0], dims[1], dims[2]));
}

TsdfVolume::TsdfVolume(const GridSpec& spec, double truncation)
    : spec_(spec),
      truncation_(truncation > 0.0 ? truncation : 4.0 * spec.voxel_size),
      sdf_(spec.count(), truncation_),
      weight_(spec.count(), 0.0) {
  if (!(spec.voxel_size > 0.0) || spec.dims[0] <= 0 || spec.dims[1] <= 0 ||
      spec.dims[2] <= 0) {
    throw Error(ErrorCode::invalid_argument, "degenerate TSDF lattice");
  }
}

namespace {

struct CameraTransform {
  Mat3 world_to_cam;
  Vec3 cam_origin;
};

inline void integrate_voxel(std::size_t i, const GridSpec& spec, double trunc,
                            const CameraTransform& cam, const DepthImage& img,
                            double* sdf, double* weight) {
  const Vec3 pw = spec.voxel_center(spec.unravel(i));
  const Vec3 pc = cam.world_to_cam * (pw - cam.cam_origin);
  if (pc.z() <= 1e-9) return;
  const double u = img.intrinsics.fx * pc.x() / pc.z() + img.intrinsics.cx;
  const double v = img.intrinsics.fy * pc.y() / pc.z() + img.intrinsics.cy;
  const double uf = std::floor(u);
  const double vf = std::floor(v);
  if (uf < 0.0 || vf < 0.0 || uf >= img.width || vf >= img.height) return;
  const int ui = static_cast<int>(uf);
  const int vi = static_cast<int>(vf);
  if (!img.valid(ui, vi)) return;
  const double diff = img.at(ui, vi) - pc.z();
  if (diff < -trunc) return;
  const double s = std::min(diff, trunc);
  const double w = weight[i];
  sdf[i] = (sdf[i] * w + s) / (w + 1.0);
  weight[i] = std::min(w + 1.0, TsdfVolume::kMaxWeight);
}

void integrate_serial(const GridSpec& spec, double trunc, const CameraTransform& cam,
                      const DepthImage& img, double* sdf, double* weight) {
  const std::size_t n = spec.count();
  for (std::size_t i = 0; i < n; ++i) {
    integrate_voxel(i, spec, trunc, cam, img, sdf, weight);
  }
}

void integrate_parallel(const GridSpec& spec, double trunc, const CameraTransform& cam,
                        const DepthImage& img, double* sdf, double* weight) {
  const auto n = static_cast<std::int64_t>(spec.count());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    integrate_voxel(static_cast<std::size_t>(i), spec, trunc, cam, img, sdf, weight);
  }
}

}  // namespace

void tsdf_integrate(TsdfVolume& vol, const DepthImage& img, ExecPolicy policy) {
  check_intrinsics(img.intrinsics);
  if (img.depth.size() != static_cast<std::size_t>(img.width) * img.height) {
    throw Error(ErrorCode::invalid_argument, "depth buffer size mismatch");
  }
  const CameraTransform cam{img.extrinsic.rotation().transpose(),
                            img.extrinsic.position};
  double* sdf = vol.sdf_data().data();
  double* weight = vol.weight_data().data();
  if (policy == ExecPolicy::serial) {
    integrate_serial(vol.spec(), vol.truncation(), cam, img, sdf, weight);
  } else {
    integrate_parallel(vol.spec(), vol.truncation(), cam, img, sdf, weight);
  }
}

char occupancy_symbol(Occupancy c) {
  switch (c) {
    case Occupancy::free: return 'F';
    case Occupancy::occupied: return 'O';
    case Occupancy::unknown: return 'U';
    case Occupancy::out_of_bounds: return 'X';
  }
  return '?';
}

std::size_t OccupancyGrid::count(Occupancy state) const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), state));
}

OccupancyGrid occupancy_from_tsdf(const TsdfVolume& vol) {
  OccupancyGrid grid;
  grid.spec = vol.spec();
  const double eps_occ = vol.spec().voxel_size;
  grid.cells.resize(vol.spec().count());
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    if (vol.weight(i) <= 0.0) {
      grid.cells[i] = Occupancy::unknown;
    } else {
      grid.cells[i] = vol.sdf(i) <= eps_occ ? Occupancy::occupied : Occupancy::free;
    }
  }
  return grid;
}

Occupancy query_occupancy(const OccupancyGrid& grid, const Vec3& p) {
  const auto idx = grid.spec.voxel_of(p);
  if (!idx) return Occupancy::out_of_bounds;
  return grid.at(*idx);
}

OccupancyGrid mask_region(const OccupancyGrid& grid, const AABB3& region) {
  OccupancyGrid out = grid;
  const auto& s = grid.spec;
  Index3 lo, hi;
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max(0, static_cast<int>(std::floor((region.min[a] - s.origin[a]) / s.voxel_size)));
    hi[a] = std::min(s.dims[a] - 1,
                     static_cast<int>(std::floor((region.max[a] - s.origin[a]) / s.voxel_size)));
  }
  for (int k = lo[2]; k <= hi[2]; ++k)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int i = lo[0]; i <= hi[0]; ++i) {
        const Index3 idx{i, j, k};
        if (!point_in_aabb(s.voxel_center(idx), region)) continue;
        auto& c = out.cells[s.linear(idx)];
        if (c == Occupancy::occupied) c = Occupancy::free;
      }
  return out;
}

void write_grid(std::ostream& os, const OccupancyGrid& grid) {
  const auto& s = grid.spec;
  os.precision(17);
  os << "robosynth-grid 1\n";
  os << "origin " << s.origin.x() << ' ' << s.origin.y() << ' ' << s.origin.z() << '\n';
  os << "voxel_size " << s.voxel_size << '\n';
  os << "dims " << s.dims[0] << ' ' << s.dims[1] << ' ' << s.dims[2] << '\n';
  os << "rle";
  std::size_t i = 0;
  while (i < grid.cells.size()) {
    std::size_t j = i;
    while (j < grid.cells.size() && grid.cells[j] == grid.cells[i]) ++j;
    os << ' ' << occupancy_symbol(grid.cells[i]) << (j - i);
    i = j;
  }
  os << '\n';
}

OccupancyGrid read_grid(std::istream& is) {
  auto fail = [](const std::string& what) -> OccupancyGrid {
    throw Error(ErrorCode::io_error, "malformed grid dump: " + what);
  };
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "robosynth-grid" || version != 1) {
    return fail("header");
  }
  OccupancyGrid grid;
  std::string key;
  is >> key >> grid.spec.origin.x() >> grid.spec.origin.y() >> grid.spec.origin.z();
  if (key != "origin") return fail("origin");
  is >> key >> grid.spec.voxel_size;
  if (key != "voxel_size") return fail("voxel_size");
  is >> key >> grid.spec.dims[0] >> grid.spec.dims[1] >> grid.spec.dims[2];
  if (key != "dims" || !is) return fail("dims");
  is >> key;
  if (key != "rle") return fail("rle");
  const std::size_t n = grid.spec.count();
  grid.cells.reserve(n);
  std::string run;
  while (grid.cells.size() < n && is >> run) {
    if (run.size() < 2) return fail("run");
    Occupancy state;
    switch (run[0]) {
      case 'F': state = Occupancy::free; break;
      case 'O': state = Occupancy::occupied; break;
      case 'U': state = Occupancy::unknown; break;
      default: return fail("cell symbol");
    }
    const std::size_t len = std::stoul(run.substr(1));
    grid.cells.insert(grid.cells.end(), len, state);
  }
  if (grid.cells.size() != n) return fail("cell count");
  return grid;
}

}  // namespace robosynth
