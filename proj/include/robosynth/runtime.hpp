#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "robosynth/error.hpp"
#include "robosynth/world.hpp"

namespace robosynth {

struct SourceSpan {
  int line = 1;
  int column = 1;
  int end_line = 1;
  int end_column = 1;
};

class SyntaxError : public Error {
 public:
  SyntaxError(int line, int column, const std::string& message)
      : Error(ErrorCode::syntax_error,
              std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Argument {
  std::string keyword;  // empty for positional
  ExprPtr value;
  SourceSpan span;
};

struct Expr {
  enum class Kind { number, string, list, variable, call, field, negate, binary };
  Kind kind = Kind::number;
  SourceSpan span;
  double number = 0.0;
  std::string text;  // string literal, variable, callee or field name
  char op = 0;       // binary operator
  std::vector<ExprPtr> operands;  // list items, field base, negate / binary operands
  std::vector<Argument> args;
};

struct Statement {
  std::optional<std::string> binding;  // let NAME = ...
  ExprPtr expr;
  SourceSpan span;
};

struct BehaviorProgram {
  std::vector<Statement> statements;
};

/// Throws SyntaxError with the position of the offending token. Variables must
/// be bound by an earlier let before use.
BehaviorProgram parse_program(std::string_view source);

struct ApiParam {
  std::string name;
  bool required = true;
};

struct ApiSignature {
  std::string name;
  std::vector<ApiParam> params;
  bool perception_query = false;
};

const std::vector<ApiSignature>& api_signatures();
const ApiSignature* find_api(std::string_view name);

enum class Rule { R1, R2, R3, R4, R5, R6 };

std::string to_string(Rule r);

struct Violation {
  Rule rule = Rule::R1;
  SourceSpan span;
  std::string message;
};

/// R1 attach not right after close_gripper/grasp, R2 detach not right after
/// open_gripper, R3 literal target outside the workspace, R4 perception
/// query before detect_objects, R5 unknown call, R6 bad arity or keyword.
std::vector<Violation> verify(const BehaviorProgram& program, const AABB3& workspace = default_workspace());

struct Record;

struct Value {
  using List = std::vector<Value>;
  std::variant<std::monostate, double, std::string, Vec3, Pose, JointInfo, PlaneInfo, List,
               std::shared_ptr<const Record>>
      data;

  Value() = default;
  template <class T, class = std::enable_if_t<!std::is_same_v<std::decay_t<T>, Value>>>
  Value(T v) : data(std::move(v)) {}

  std::string type_name() const;
};

struct Record {
  std::vector<std::pair<std::string, Value>> fields;
};

std::string describe(const Value& v);

struct InterpretOptions {
  std::uint64_t seed = 0;
  UnknownPolicy unknown = UnknownPolicy::free;
  ExecPolicy policy = ExecPolicy::parallel;
  double voxel_size = 0.01;
  int jitter_px = 0;
  std::size_t max_pixels_per_box = 100000;  // part-level grasps need dense clouds
  double containment_threshold = 0.8;
  PlannerOptions planner;
  GraspSamplerOptions sampler;
};

struct CallRecord {
  std::size_t statement = 0;
  SourceSpan span;
  std::string name;
  std::string status = "ok";  // "ok" or an error code
  std::string detail;
  std::vector<Trajectory> trajectories;
};

struct TaskOutcome {
  TaskSpec spec;
  bool success = false;
  std::size_t stages_reached = 0;
};

struct ExecutionReport {
  std::vector<CallRecord> calls;
  std::size_t statements_total = 0;
  std::size_t statements_completed = 0;
  bool aborted = false;
  std::optional<ErrorCode> error;
  std::string error_message;
  SourceSpan error_span;
  std::vector<TaskOutcome> tasks;
  bool success = false;
  double wall_time_s = 0.0;
  WorldState final_state;
};

/// Runs the program statement by statement. A failing statement aborts the
/// run and leaves the world as it was after the previous statement.
ExecutionReport interpret(const BehaviorProgram& program, const WorldState& world,
                          const std::vector<TaskSpec>& tasks, const InterpretOptions& options = {});

/// Structured text, one record per call plus a summary block.
void write_report(std::ostream& os, const ExecutionReport& report, bool include_timing = true);

/// Support-surface place target for an object of the given bounding box on
/// top of (or inside) the receptacle percept: surface z + half height + 5 mm,
/// moved along a spiral when the center is occupied in `grid`.
Vec3 place_target(const AABB3& object_box, const ObjectPercept& receptacle,
                  const OccupancyGrid* grid);

inline constexpr double kPlaceClearance = 0.005;

}  // namespace robosynth
