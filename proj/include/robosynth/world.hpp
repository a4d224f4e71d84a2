#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "robosynth/articulation.hpp"
#include "robosynth/exec.hpp"
#include "robosynth/geom.hpp"
#include "robosynth/grasp.hpp"
#include "robosynth/perception.hpp"
#include "robosynth/plan.hpp"
#include "robosynth/volume.hpp"

namespace robosynth {

inline constexpr double kTableHeight = 1.05;

/// x in [-0.5, 0.2], y in [-0.5, 0.5], z from the table top to 1.85.
AABB3 default_workspace();

enum class ShapeType { box, cylinder, sphere };

std::string to_string(ShapeType t);

/// Box: size = half extents. Cylinder (axis local z): size = (radius, radius,
/// half height). Sphere: size.x() = radius.
struct Primitive {
  ShapeType type = ShapeType::box;
  Pose pose;
  Vec3 size = Vec3::Constant(0.01);
};

/// Signed distance from a point given in the primitive's own frame.
double primitive_sdf(const Primitive& prim, const Vec3& local);
/// Ray parameter of the first hit (dir need not be unit), if any.
std::optional<double> ray_primitive(const Primitive& world_prim, const Vec3& origin,
                                    const Vec3& dir);
AABB3 primitive_aabb(const Primitive& world_prim);

struct Part {
  std::string name;
  std::vector<Primitive> shapes;  // object frame at joint value 0
  int joint = -1;                 // -1: bound to the object base
  std::optional<AABB3> interior;  // open volume (drawer box, bowl), object frame
};

struct Joint {
  std::string name;
  JointType type = JointType::prismatic;
  Vec3 axis = Vec3::UnitX();  // object frame, unit
  Vec3 position = Vec3::Zero();
  double lower = 0.0;
  double upper = 0.0;
  double value = 0.0;
};

struct SceneObject {
  std::string name;
  std::string label;
  Pose pose;
  std::vector<Part> parts;
  std::vector<Joint> joints;
  bool graspable = false;
  bool fixture = false;    // rendered but never detected (the table)
  bool container = false;  // place targets use the interior bottom
  std::string resting_on;  // "object.part" support relation, may be empty
};

struct GripperState {
  Pose pose;
  double open_fraction = 1.0;
  std::optional<std::string> attached;
  std::string attached_part;
  Pose grasp_offset;  // attached object (or part) frame in the gripper frame
};

struct WorldState {
  std::vector<SceneObject> objects;
  GripperState gripper;
  double table_height = kTableHeight;
  AABB3 workspace = default_workspace();
  std::vector<DepthImage> cameras;  // templates: intrinsics, extrinsic, size
};

/// Camera-to-world pose looking from `eye` at `target` (camera +z forward,
/// +y down in the image).
Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());
std::vector<DepthImage> default_cameras();
Pose default_gripper_pose();

const SceneObject& find_object(const WorldState& s, std::string_view name);
SceneObject& find_object(WorldState& s, std::string_view name);
bool has_object(const WorldState& s, std::string_view name);
const Part& find_part(const SceneObject& o, std::string_view part);

/// Transform of a joint at `value` in the object frame.
Pose joint_transform(const Joint& j, double value);
/// World frame of a part (object pose composed with its joint transform).
Pose part_frame(const SceneObject& o, const Part& p);

struct WorldPrimitive {
  std::size_t object = 0;
  std::size_t part = 0;
  Primitive prim;  // world pose
};

std::vector<WorldPrimitive> world_primitives(const WorldState& s);
AABB3 object_aabb(const WorldState& s, std::string_view name);
AABB3 part_aabb(const WorldState& s, std::string_view object, std::string_view part);
/// World-frame interior of a part, if it has one.
std::optional<AABB3> part_interior(const WorldState& s, std::string_view object,
                                   std::string_view part);
/// Distance from p to the nearest surface of the object (0 inside).
double distance_to_object(const WorldState& s, std::string_view name, const Vec3& p,
                          std::string* nearest_part = nullptr);

void open_gripper(WorldState& s);
void close_gripper(WorldState& s);
/// Binds the object (or the touched part's joint) to the gripper.
void attach(WorldState& s, std::string_view name, const GripperModel& gripper = {});
/// Releases the object; free objects settle onto the highest support below.
void detach(WorldState& s, std::string_view name);
/// Drops a free object vertically onto the highest primitive top below it.
void settle(WorldState& s, std::string_view name);

/// Sets a joint (clamped) and carries objects resting on its parts along.
void set_joint_value(WorldState& s, std::string_view object, std::size_t joint, double value);

/// Moves the gripper through the waypoints. Attached free objects follow
/// rigidly; an attached jointed part drives its joint. Throws execution_fault
/// (state untouched) if a waypoint leaves the workspace inflated by 5 cm.
void step_follow(WorldState& s, const Trajectory& t);

struct RenderOptions {
  std::vector<std::string> labels;  // empty: all labels
  int jitter_px = 0;
  std::uint64_t seed = 0;
  bool masks = true;
};

struct RenderResult {
  std::vector<DepthImage> images;
  std::vector<Detection2D> detections;
  std::vector<std::string> detected_objects;  // world object per detection
};

/// Z-buffer depth of every primitive plus oracle boxes (projected ground-truth
/// AABBs clipped to the image) for each visible, non-fixture object.
RenderResult render_views(const WorldState& s, std::span<const DepthImage> cameras,
                          const RenderOptions& options = {},
                          ExecPolicy policy = ExecPolicy::parallel);

/// Ground-truth part name of the nearest surface within 1 cm ("" if none).
std::function<std::string(const Vec3&)> make_part_labeler(const WorldState& s);

/// Oracle predictor input: one link per joint plus the static base.
struct ArticulationTruth {
  std::vector<LinkTruth> links;
  std::vector<int> link_joint;  // joint index per link, -1 for the base
};

ArticulationTruth articulation_truth(const WorldState& s, std::string_view object);
/// Link index of a part of `object` (base link for unjointed parts).
int link_of_part(const SceneObject& o, std::string_view part);
/// World-frame joint info with limits and value from ground truth.
JointInfo joint_info(const WorldState& s, std::string_view object, std::size_t joint);

enum class TaskType { pick_place, open, close, place_in_drawer, multi_stage };

std::string to_string(TaskType t);
TaskType task_type_from_string(const std::string& s);

struct TaskSpec {
  TaskType type = TaskType::pick_place;
  std::string object;
  std::string receptacle;  // pick_place: object name; place_in_drawer: "obj.part"
  std::string joint;       // open / close
  std::optional<Vec3> target;
  double tolerance = 0.05;
  std::vector<TaskSpec> stages;
};

struct ManipulationUnit {
  std::string object_name;
  std::string instruction;
  GraspPreference preference;
};

struct TaskFile {
  std::vector<ManipulationUnit> units;
  std::vector<TaskSpec> tasks;
};

inline constexpr double kOpenFraction = 0.7;
inline constexpr double kClosedFraction = 0.1;

/// Predicate on a single state. Multi-stage specs require every stage here;
/// use StageTracker for ordered evaluation over an execution.
bool task_success(const WorldState& s, const TaskSpec& spec);

/// Ordered conjunction over time: stage k counts once it holds at a state
/// observed after stage k-1 was reached.
class StageTracker {
 public:
  explicit StageTracker(TaskSpec spec);
  void observe(const WorldState& s);
  bool success(const WorldState& s) const;
  std::size_t reached() const { return reached_; }

 private:
  TaskSpec spec_;
  std::size_t reached_ = 0;
};

struct ObjectTemplate {
  std::string label;
  std::string category = "independent";  // independent | container | articulated
  std::string shape = "box";             // box | cylinder | sphere | bowl | plate | cabinet
  Vec3 size = Vec3(0.05, 0.05, 0.05);    // full extents
  int count = 1;
  int extra = 0;    // up to this many more instances, drawn per seed
  int drawers = 0;  // cabinet
  bool door = false;
};

struct SceneConfig {
  std::string family;  // pick_place, drawer_open, ... or "custom"
  std::vector<ObjectTemplate> objects;
  AABB3 region = AABB3(Vec3(-0.45, -0.45, kTableHeight), Vec3(0.1, 0.45, kTableHeight));
  int max_attempts = 200;
  double fill_probability = 0.0;  // chance a container receives a small object
};

SceneConfig family_config(const std::string& family);
/// JSON config: {"family": ...} presets, optionally overriding "objects",
/// "region": [xmin, ymin, xmax, ymax], "max_attempts", "fill_probability".
SceneConfig parse_scene_config(std::string_view json_text);

/// A scene plus the task list it was generated for.
struct SceneFile {
  WorldState state;
  TaskFile tasks;
};

SceneFile generate_scene(std::uint64_t seed, const SceneConfig& config);

inline constexpr const char* kSceneHeader = "robosynth-scene 1";
inline constexpr const char* kTaskHeader = "robosynth-tasks 1";

void write_scene(std::ostream& os, const SceneFile& scene);
SceneFile read_scene(std::istream& is);
void write_tasks(std::ostream& os, const TaskFile& t);
TaskFile read_tasks(std::istream& is);

}  // namespace robosynth
