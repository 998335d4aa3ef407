#pragma once

namespace coldstart {

// Selects between the OpenMP kernel and its serial reference loop. Both
// paths derive per-task seeds from task indices, so they produce identical
// results; the serial path is kept for equivalence tests and benchmarks.
enum class Execution { kSerial, kParallel };

}  // namespace coldstart
