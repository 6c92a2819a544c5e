#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "qlink/sim/runner.hpp"
#include "qlink/sim/sweep.hpp"
#include "qlink/sim/validate.hpp"

using namespace qlink;
using namespace qlink::sim;
using egp::RequestKind;

namespace {

ScenarioConfig quick_lab(std::uint64_t seed, double secs = 0.5) {
  ScenarioConfig sc = ScenarioConfig::lab();
  sc.seed = seed;
  sc.duration_ns = static_cast<des::SimTime>(secs * 1e9);
  return sc;
}

}  // namespace

TEST_CASE("zero duration run yields an empty report without errors") {
  ScenarioConfig sc = quick_lab(1, 0.0);
  WorkloadConfig wl = WorkloadConfig::single(RequestKind::MD, 0.99, 1);
  RunResult res = run_scenario(sc, wl);
  CHECK(res.invariants_ok);
  CHECK(res.report.pairs.empty());
  CHECK(res.report.attempts == 0);
}

TEST_CASE("zero load issues no requests") {
  ScenarioConfig sc = quick_lab(2, 0.2);
  WorkloadConfig wl = WorkloadConfig::single(RequestKind::MD, 0.0, 1);
  RunResult res = run_scenario(sc, wl);
  CHECK(res.report.requests.empty());
  CHECK(res.report.attempts == 0);
  CHECK(res.invariants_ok);
}

TEST_CASE("identical seed and config reproduce the identical run") {
  ScenarioConfig sc = quick_lab(7, 0.4);
  sc.p_loss = 1e-3;  // exercise drops too
  sc.retain_trace = true;
  WorkloadConfig wl = WorkloadConfig::single(RequestKind::MD, 0.99, 3);
  RunResult a = run_scenario(sc, wl);
  RunResult b = run_scenario(sc, wl);
  CHECK(a.trace_hash == b.trace_hash);
  CHECK(a.trace_rows == b.trace_rows);
  CHECK(a.trace_text == b.trace_text);
  CHECK(a.report.to_json() == b.report.to_json());
  RunResult c = run_scenario(quick_lab(8, 0.4), wl);
  CHECK(a.trace_hash != c.trace_hash);
}

// Oracle: the analytic per-cycle issue probability summed over cycles.
TEST_CASE("workload CREATE rate matches the configured law") {
  ScenarioConfig sc = quick_lab(3, 4.0);
  WorkloadConfig wl = WorkloadConfig::single(RequestKind::MD, 0.7, 1);
  wl.min_fidelity = 0.64;
  RunResult res = run_scenario(sc, wl);
  // expected: f * p_succ / (E * k) per cycle, k = 1, E = 1
  egp::FeuModel feu = egp::FeuModel::build(sc.feu_scenario());
  ScenarioConfig cal = sc;
  cal.calibrate();
  egp::FeuModel feu_cal = egp::FeuModel::build(cal.feu_scenario());
  double alpha = feu_cal.alpha_for_fidelity(0.64, false).value();
  double p = feu_cal.p_succ(alpha);
  double cycles = 4.0 / 10.12e-6;
  double expect = 0.7 * p * cycles;
  double sigma = std::sqrt(expect);
  CHECK(std::abs(static_cast<double>(res.report.requests.size() +
                                     /* in-flight at end */ 0) -
                 expect) < 5 * sigma + 5);
}

TEST_CASE("conservation: delivered pairs never exceed heralds; accounting closes") {
  ScenarioConfig sc = quick_lab(11, 1.0);
  WorkloadConfig wl = WorkloadConfig::single(RequestKind::MD, 0.99, 3);
  wl.drain = true;
  wl.max_wait_ns = 3'000'000'000;
  RunResult res = run_scenario(sc, wl);
  CHECK(res.invariants_ok);
  CHECK(res.report.pairs.size() <= res.report.heralds);
  // every delivered pair belongs to a known completed request
  std::size_t from_requests = 0;
  for (const auto& r : res.report.requests) {
    if (r.status == "completed") from_requests += r.pairs;
  }
  std::size_t delivered = 0;
  for (const auto& p : res.report.pairs) {
    if (!p.revoked) ++delivered;
  }
  CHECK(delivered >= from_requests);  // timeout-closed requests may still have pairs
}

TEST_CASE("scaled latency equals request latency for single-pair requests") {
  ScenarioConfig sc = quick_lab(13, 1.0);
  WorkloadConfig wl = WorkloadConfig::single(RequestKind::MD, 0.9, 1);
  RunResult res = run_scenario(sc, wl);
  for (const auto& r : res.report.requests) {
    if (r.pairs == 1) CHECK(r.latency_s == doctest::Approx(r.scaled_latency_s));
  }
}

TEST_CASE("report JSON and CSV round-trip") {
  ScenarioConfig sc = quick_lab(17, 0.5);
  WorkloadConfig wl = WorkloadConfig::single(RequestKind::MD, 0.99, 2);
  RunResult res = run_scenario(sc, wl);
  std::string j = res.report.to_json();
  MetricsReport back = MetricsReport::from_json(j);
  CHECK(back.to_json() == j);

  std::string dir = "/tmp/qlink_export_test";
  std::filesystem::remove_all(dir);
  res.report.export_files(dir);
  std::ifstream req_csv(dir + "/requests.csv");
  std::string header;
  std::getline(req_csv, header);
  CHECK(header + "\n" == MetricsReport::requests_csv_header());
  std::ifstream pair_csv(dir + "/pairs.csv");
  std::getline(pair_csv, header);
  CHECK(header + "\n" == MetricsReport::pairs_csv_header());
  std::ifstream summary(dir + "/summary.json");
  std::string content((std::istreambuf_iterator<char>(summary)),
                      std::istreambuf_iterator<char>());
  CHECK(MetricsReport::from_json(content).pairs.size() == res.report.pairs.size());
}

TEST_CASE("serial and parallel sweeps produce identical results") {
  std::vector<SweepJob> jobs;
  for (int s = 0; s < 3; ++s) {
    SweepJob j;
    j.scenario = quick_lab(100 + s, 0.3);
    j.workload = WorkloadConfig::single(RequestKind::MD, 0.99, 1);
    jobs.push_back(j);
  }
  auto serial = run_sweep(jobs, 1);
  auto parallel = run_sweep(jobs, 4);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].trace_hash == parallel[i].trace_hash);
    CHECK(serial[i].report.to_json() == parallel[i].report.to_json());
  }
}

TEST_CASE("usage patterns map to the documented fractions") {
  WorkloadConfig u = WorkloadConfig::pattern("Uniform");
  CHECK(u.nl.fraction == doctest::Approx(0.33));
  CHECK(u.md.k_max == 1);
  WorkloadConfig m = WorkloadConfig::pattern("NoNLMoreMD");
  CHECK(m.nl.fraction == 0.0);
  CHECK(m.md.fraction == doctest::Approx(0.99 * 0.8));
  CHECK(m.md.k_max == 255);
  CHECK_THROWS_AS(WorkloadConfig::pattern("bogus"), std::invalid_argument);
}

TEST_CASE("validation experiment: perfect states reproduce the correlation identities") {
  // perfect PsiMinus input with ideal readout: the correlation formula
  // returns fidelity 1 for the second heralded state
  ScenarioConfig sc = ScenarioConfig::lab();
  sc.emission.two_photon_prob = 0.0;
  sc.emission.phase_std_rad = 1e-9;
  sc.emission.detection_window_ns = 1e6;
  sc.emission.dark_rate_hz = 0.0;
  sc.emission.p_zero_phonon = 1.0;
  sc.emission.p_collection = 1.0;
  sc.emission.p_detection = 1.0;
  sc.emission.visibility_mu = 1.0;
  sc.calibrated = true;  // noiseless reference point, no calibration wanted
  std::mt19937_64 rng(5);
  auto pt = validate_alpha(sc, 1e-4, 400, 100'000'000, rng, 0.0, false);
  CHECK(pt.mean_fidelity == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(pt.corr_fidelity[0] == doctest::Approx(1.0).epsilon(0.05));
  CHECK(pt.corr_fidelity[1] == doctest::Approx(1.0).epsilon(0.05));
  for (int basis = 0; basis < 3; ++basis) {
    if (pt.n_meas[1][basis] > 0) {
      // the second state is anti-correlated in every basis
      CHECK(pt.pr_diff[1][basis] == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("validation sweep: fidelity decreases while success grows with alpha") {
  ScenarioConfig sc = ScenarioConfig::lab();
  sc.calibrate();
  std::mt19937_64 rng(5);
  double prev_f = 1.0, prev_p = 0.0;
  for (double a : {0.1, 0.2, 0.3, 0.5}) {
    auto pt = validate_alpha(sc, a, 400, 100'000'000, rng);
    CHECK(pt.mean_fidelity < prev_f);
    CHECK(pt.p_succ_hat > prev_p);
    prev_f = pt.mean_fidelity;
    prev_p = pt.p_succ_hat;
  }
}

TEST_CASE("scenario presets expose the documented timings") {
  ScenarioConfig lab = ScenarioConfig::lab();
  CHECK(lab.attempt_cycles(false) == doctest::Approx(1.0));
  CHECK(lab.attempt_cycles(true) == doctest::Approx(1.1).epsilon(0.02));
  ScenarioConfig ql = ScenarioConfig::qlink();
  CHECK(ql.ab_delay_ns() == net::propagation_delay_ns(25.0));
  CHECK(ql.attempt_cycles(true) == doctest::Approx(16.4).epsilon(0.02));
  CHECK(ql.max_arm_delay_ns() == net::propagation_delay_ns(15.0));
}
