#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "robosynth/geom.hpp"

namespace robosynth::detail {

// Uniform hash grid for fixed-radius neighbor queries. Neighbor lists come
// back sorted by point index so callers stay deterministic.
class SpatialHash {
 public:
  SpatialHash(std::span<const Vec3> points, double cell) : points_(points), cell_(cell) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      cells_[key(points[i])].push_back(static_cast<std::uint32_t>(i));
    }
  }

  void radius_neighbors(const Vec3& q, double radius, std::vector<std::uint32_t>& out) const {
    out.clear();
    const double r2 = radius * radius;
    const auto c = coords(q);
    const int reach = static_cast<int>(std::ceil(radius / cell_));
    for (int dz = -reach; dz <= reach; ++dz)
      for (int dy = -reach; dy <= reach; ++dy)
        for (int dx = -reach; dx <= reach; ++dx) {
          auto it = cells_.find(pack(c[0] + dx, c[1] + dy, c[2] + dz));
          if (it == cells_.end()) continue;
          for (auto idx : it->second) {
            if ((points_[idx] - q).squaredNorm() <= r2) out.push_back(idx);
          }
        }
    std::sort(out.begin(), out.end());
  }

 private:
  std::array<std::int64_t, 3> coords(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / cell_)),
            static_cast<std::int64_t>(std::floor(p.y() / cell_)),
            static_cast<std::int64_t>(std::floor(p.z() / cell_))};
  }
  static std::uint64_t pack(std::int64_t x, std::int64_t y, std::int64_t z) {
    constexpr std::int64_t off = 1 << 20;
    return (static_cast<std::uint64_t>(x + off) << 42) ^
           (static_cast<std::uint64_t>(y + off) << 21) ^ static_cast<std::uint64_t>(z + off);
  }
  std::uint64_t key(const Vec3& p) const {
    const auto c = coords(p);
    return pack(c[0], c[1], c[2]);
  }

  std::span<const Vec3> points_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

}  // namespace robosynth::detail
