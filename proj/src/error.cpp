#include "robosynth/error.hpp"

#include "robosynth/exec.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace robosynth {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::precondition_violation: return "precondition-violation";
    case ErrorCode::part_not_found: return "part-not-found";
    case ErrorCode::no_plane_found: return "no-plane-found";
    case ErrorCode::no_joints_found: return "no-joints-found";
    case ErrorCode::no_grasp_found: return "no-grasp-found";
    case ErrorCode::object_too_wide: return "object-too-wide";
    case ErrorCode::planning_failed: return "planning-failed";
    case ErrorCode::execution_fault: return "execution-fault";
    case ErrorCode::sequencing_fault: return "sequencing-fault";
    case ErrorCode::grasp_miss: return "grasp-miss";
    case ErrorCode::invalid_spec: return "invalid-spec";
    case ErrorCode::generation_failed: return "generation-failed";
    case ErrorCode::place_infeasible: return "place-infeasible";
    case ErrorCode::syntax_error: return "syntax-error";
    case ErrorCode::unknown_object: return "unknown-object";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown-error";
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace robosynth
