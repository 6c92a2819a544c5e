#pragma once

#include <cstdint>
#include <string>

#include "qlink/egp/egp.hpp"
#include "qlink/egp/feu.hpp"
#include "qlink/mhp/mhp.hpp"
#include "qlink/phys/device.hpp"

namespace qlink::sim {

enum class Preset { Lab, QLink };

Preset preset_from_string(const std::string& s);
std::string preset_name(Preset p);

/// Full parameterization of one run.
struct ScenarioConfig {
  Preset preset = Preset::Lab;
  std::uint64_t seed = 1;
  des::SimTime duration_ns = 10'000'000'000;

  phys::DeviceConfig device;
  phys::EmissionConfig emission;
  double arm_a_km = 0.001;
  double arm_b_km = 0.001;
  des::SimTime cycle_ns = 10'120;
  double p_loss = 0.0;
  double gen_fail_prob = 0.0;

  egp::SchedulerConfig sched;
  double test_fraction = 0.05;
  std::size_t test_window = 2000;
  int max_inflight_m = 16;

  bool retain_trace = false;
  bool calibrated = false;

  static ScenarioConfig lab();
  static ScenarioConfig qlink();
  static ScenarioConfig make(Preset p);

  des::SimTime max_arm_delay_ns() const;
  des::SimTime ab_delay_ns() const;  // node-to-node via both arms
  mhp::MhpTiming timing() const;

  /// Expected MHP cycles per attempt (the paper's E), from timing mechanics.
  double attempt_cycles(bool keep) const;

  /// Scenario-local calibration: scales the collection efficiency so the
  /// analytic per-attempt success equals alpha*1e-3 at alpha = 0.1.
  void calibrate();

  egp::FeuScenario feu_scenario() const;
  void validate() const;
};

/// Analytic per-attempt statistics for this scenario (fiber and flight
/// decoherence included).
egp::FeuModel::Entry attempt_entry(const ScenarioConfig& sc, double alpha);

}  // namespace qlink::sim
