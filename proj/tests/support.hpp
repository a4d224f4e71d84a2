#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "robosynth/runtime.hpp"

namespace robosynth::testing {

using Rng = std::mt19937_64;

Vec3 random_unit(Rng& rng);
Vec3 random_point(Rng& rng, double lo, double hi);
Quat random_rotation(Rng& rng);

// Uniform samples on the faces of a world-frame box primitive.
std::vector<Vec3> sample_box_surface(const Primitive& box, int n, Rng& rng);

// Rodrigues rotation written out by hand.
Vec3 rodrigues(const Vec3& p, const Vec3& axis, const Vec3& origin, double angle);

// Dense re-check independent of check_path: the path is refined to twice its
// waypoint resolution and each pose is tested voxel by voxel against the
// palm and finger boxes.
bool recheck_path(const Trajectory& t, const OccupancyGrid& grid, const AABB3& workspace,
                  const GripperModel& g, double opening);

// Workspace-sized grid with a wall across x and one rectangular gap in it.
// Start and goal sit on opposite sides, both shifted sideways from the gap,
// so the straight line runs into the wall.
struct ObstructedScene {
  PlanConstraints constraints;
  Pose start;
  Pose goal;
};
ObstructedScene obstructed_scene(std::uint64_t seed);

// Axis-aligned box resting on nothing, single camera looking at it.
struct BoxScene {
  WorldState world;
  AABB3 box;
};
BoxScene single_box_scene();

// Table plus one 7 x 4 x 4 cm block labeled "cube" lying with its long
// axis horizontal at `yaw_deg` from world x.
WorldState reference_block_scene(double yaw_deg);

struct PerceivedObject {
  ObjectPercept percept;
  OccupancyGrid grid;
};
PerceivedObject perceive(const WorldState& world, const std::string& label);

// Code of the Error thrown by f, or nullopt if it returns normally.
template <class F>
std::optional<ErrorCode> error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

std::string read_text(const std::filesystem::path& p);

struct CorpusEntry {
  std::filesystem::path path;
  std::string expected;  // "clean" or "R1".."R6"
};
std::vector<CorpusEntry> load_corpus(const std::filesystem::path& dir);

inline const std::vector<std::string>& families() {
  static const std::vector<std::string> f{"pick_place", "drawer_open", "drawer_close", "door_open",
                                          "door_close", "place_in_drawer", "multi_stage"};
  return f;
}

// Oracle program for a family with @K@ replaced by the drawer index of the
// scene's first drawer instruction.
std::string oracle_program(const std::filesystem::path& dir, const std::string& family,
                           const SceneFile& scene);

}  // namespace robosynth::testing
