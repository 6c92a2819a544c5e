#include "qlink/sim/sweep.hpp"

#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qlink::sim {

int hardware_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

std::vector<RunResult> run_sweep(const std::vector<SweepJob>& jobs, int threads) {
  std::vector<RunResult> results(jobs.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      results[i] = run_scenario(jobs[i].scenario, jobs[i].workload);
    }
    return results;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(jobs.size()); ++i) {
    results[i] = run_scenario(jobs[i].scenario, jobs[i].workload);
  }
#else
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    results[i] = run_scenario(jobs[i].scenario, jobs[i].workload);
  }
#endif
  return results;
}

}  // namespace qlink::sim
