#include "qlink/sim/scenario.hpp"

#include <cmath>
#include <stdexcept>

namespace qlink::sim {

Preset preset_from_string(const std::string& s) {
  if (s == "lab" || s == "Lab" || s == "LAB") return Preset::Lab;
  if (s == "qlink" || s == "QLink" || s == "QLINK" || s == "ql") return Preset::QLink;
  throw std::invalid_argument("unknown preset: " + s);
}

std::string preset_name(Preset p) { return p == Preset::Lab ? "Lab" : "QLink"; }

ScenarioConfig ScenarioConfig::lab() {
  ScenarioConfig sc;
  sc.preset = Preset::Lab;
  sc.arm_a_km = 0.001;
  sc.arm_b_km = 0.001;
  sc.emission.tau_emission_ns = 12.0;
  sc.emission.p_zero_phonon = 0.03;
  sc.emission.p_collection = 0.014;
  sc.emission.fiber_db_per_km = 5.0;
  return sc;
}

ScenarioConfig ScenarioConfig::qlink() {
  ScenarioConfig sc;
  sc.preset = Preset::QLink;
  sc.arm_a_km = 10.0;
  sc.arm_b_km = 15.0;
  // optical cavity plus frequency conversion to telecom
  sc.emission.tau_emission_ns = 6.48;
  sc.emission.p_zero_phonon = 0.46;
  sc.emission.p_collection = 0.014 * 0.3;
  sc.emission.fiber_db_per_km = 0.5;
  return sc;
}

ScenarioConfig ScenarioConfig::make(Preset p) {
  return p == Preset::Lab ? lab() : qlink();
}

des::SimTime ScenarioConfig::max_arm_delay_ns() const {
  return std::max(net::propagation_delay_ns(arm_a_km), net::propagation_delay_ns(arm_b_km));
}

des::SimTime ScenarioConfig::ab_delay_ns() const {
  return net::propagation_delay_ns(arm_a_km + arm_b_km);
}

mhp::MhpTiming ScenarioConfig::timing() const {
  mhp::MhpTiming t;
  t.cycle_ns = cycle_ns;
  t.max_arm_delay_ns = max_arm_delay_ns();
  return t;
}

double ScenarioConfig::attempt_cycles(bool keep) const {
  if (!keep) return 1.0;
  // K waits for the reply before the next attempt; carbon re-initialization
  // adds its duty cycle on top.
  const des::SimTime latency = static_cast<des::SimTime>(emission.detection_window_ns) + 100;
  const des::SimTime deadline =
      device.emission_prep_ns + max_arm_delay_ns() + latency + max_arm_delay_ns();
  const double cycles = std::max<double>(1.0, std::ceil(static_cast<double>(deadline) / cycle_ns));
  const double reinit = 1.0 + static_cast<double>(device.carbon_reinit_cost_ns) /
                                  static_cast<double>(device.carbon_reinit_period_ns);
  return cycles * reinit;
}

egp::FeuScenario ScenarioConfig::feu_scenario() const {
  egp::FeuScenario fs;
  fs.device = device;
  fs.emission = emission;
  fs.arm_a_km = arm_a_km;
  fs.arm_b_km = arm_b_km;
  fs.cycle_ns = cycle_ns;
  fs.reply_wait_k_ns = max_arm_delay_ns() +
                       static_cast<des::SimTime>(emission.detection_window_ns) + 100;
  fs.attempt_cycles_m = attempt_cycles(false);
  fs.attempt_cycles_k = attempt_cycles(true);
  return fs;
}

egp::FeuModel::Entry attempt_entry(const ScenarioConfig& sc, double alpha) {
  return egp::FeuModel::entry_at(sc.feu_scenario(), alpha);
}

void ScenarioConfig::calibrate() {
  const double target = 0.1e-3;  // p_succ(alpha = 0.1)
  double lo = 0.05, hi = 40.0;
  ScenarioConfig probe = *this;
  auto p_at = [&](double scale) {
    probe.emission.collection_scale = scale;
    return attempt_entry(probe, 0.1).p_succ;
  };
  if (p_at(hi) < target) {
    throw std::runtime_error("calibrate: target success probability unreachable");
  }
  for (int i = 0; i < 60; ++i) {
    double mid = 0.5 * (lo + hi);
    if (p_at(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  emission.collection_scale = 0.5 * (lo + hi);
  calibrated = true;
}

void ScenarioConfig::validate() const {
  device.validate();
  emission.validate();
  if (arm_a_km < 0 || arm_b_km < 0 || cycle_ns <= 0 || duration_ns < 0 || p_loss < 0 ||
      p_loss > 1 || test_fraction < 0 || test_fraction > 1) {
    throw std::invalid_argument("scenario: bad parameters");
  }
}

}  // namespace qlink::sim
