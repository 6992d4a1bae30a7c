#pragma once

namespace mltb {

/// Execution policy for the data-parallel kernels.  `serial` runs the plain
/// reference loops; `parallel` runs the OpenMP versions.  Both produce the
/// same results (each output element is reduced in the same order).
enum class Exec { serial, parallel };

}  // namespace mltb
