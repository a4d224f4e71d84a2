#pragma once

namespace robosynth {

// Selects between the serial reference implementation of a data-parallel
// kernel and its OpenMP version. Both produce bit-identical results.
enum class ExecPolicy { serial, parallel };

int max_threads();

}  // namespace robosynth
