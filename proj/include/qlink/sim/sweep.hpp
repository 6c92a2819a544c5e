#pragma once

#include <vector>

#include "qlink/sim/runner.hpp"

namespace qlink::sim {

struct SweepJob {
  ScenarioConfig scenario;
  WorkloadConfig workload;
};

/// Runs every job and returns results in job order. `threads <= 1` runs the
/// serial reference loop; larger values fan the independent runs across an
/// OpenMP worker pool. Both paths produce identical results.
std::vector<RunResult> run_sweep(const std::vector<SweepJob>& jobs, int threads);

int hardware_threads();

}  // namespace qlink::sim
