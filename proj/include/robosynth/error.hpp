#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace robosynth {

enum class ErrorCode {
  invalid_argument,
  precondition_violation,
  part_not_found,
  no_plane_found,
  no_joints_found,
  no_grasp_found,
  object_too_wide,
  planning_failed,
  execution_fault,
  sequencing_fault,
  grasp_miss,
  invalid_spec,
  generation_failed,
  place_infeasible,
  syntax_error,
  unknown_object,
  io_error,
};

std::string_view to_string(ErrorCode code);

// Every module reports failures through this exception; the code is the
// contract, the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace robosynth
