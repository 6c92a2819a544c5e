// Benchmark: serial reference sweep vs the OpenMP worker-pool sweep over the
// same job grid, with a result-equality check.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "qlink/sim/sweep.hpp"

using namespace qlink;
using namespace qlink::sim;

namespace {

std::vector<SweepJob> make_jobs(int n, double secs) {
  std::vector<SweepJob> jobs;
  for (int i = 0; i < n; ++i) {
    SweepJob j;
    j.scenario = ScenarioConfig::lab();
    j.scenario.seed = 42 + static_cast<std::uint64_t>(i);
    j.scenario.duration_ns = static_cast<des::SimTime>(secs * 1e9);
    j.workload = WorkloadConfig::single(egp::RequestKind::MD, 0.99, 3);
    jobs.push_back(j);
  }
  return jobs;
}

double time_sweep(const std::vector<SweepJob>& jobs, int threads, std::vector<RunResult>& out) {
  auto t0 = std::chrono::steady_clock::now();
  out = run_sweep(jobs, threads);
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  int n = argc > 1 ? std::atoi(argv[1]) : 8;
  double secs = argc > 2 ? std::atof(argv[2]) : 0.5;
  int threads = hardware_threads();
  std::printf("sweep benchmark: %d runs x %.2f simulated seconds, %d worker threads\n", n, secs,
              threads);

  auto jobs = make_jobs(n, secs);
  std::vector<RunResult> serial, parallel;
  double t_serial = time_sweep(jobs, 1, serial);
  double t_parallel = time_sweep(jobs, threads, parallel);

  bool identical = serial.size() == parallel.size();
  for (std::size_t i = 0; identical && i < serial.size(); ++i) {
    identical = serial[i].trace_hash == parallel[i].trace_hash &&
                serial[i].report.to_json() == parallel[i].report.to_json();
  }

  std::printf("serial reference: %.3f s\n", t_serial);
  std::printf("worker pool:      %.3f s\n", t_parallel);
  std::printf("speedup:          %.2fx\n", t_serial / t_parallel);
  std::printf("results identical: %s\n", identical ? "yes" : "NO");
  return identical ? 0 : 1;
}
