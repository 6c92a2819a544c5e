#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "qlink/des/engine.hpp"

namespace qlink::phys {

struct GateSpec {
  double fidelity = 1.0;
  des::SimTime duration_ns = 0;
};

/// Node hardware parameters: coherence times and the gate table.
struct DeviceConfig {
  double electron_t1_ns = 2.86e6;
  double electron_t2_ns = 1.00e6;
  double carbon_t1_ns = std::numeric_limits<double>::infinity();
  double carbon_t2_ns = 3.5e6;

  GateSpec electron_single{1.0, 5};
  GateSpec ec_controlled_sqrt_x{0.992, 500'000};
  GateSpec carbon_rot_z{0.999, 20'000};
  GateSpec electron_init{0.95, 2'000};
  GateSpec carbon_init{0.95, 310'000};
  double readout_f0 = 0.95;
  double readout_f1 = 0.995;
  des::SimTime readout_ns = 3'700;

  des::SimTime emission_prep_ns = 5'500;
  des::SimTime move_to_memory_ns = 1'040'000;
  des::SimTime carbon_reinit_period_ns = 3'500'000;
  des::SimTime carbon_reinit_cost_ns = 330'000;

  void validate() const;
};

/// Optics and detection parameters of the entanglement attempt pipeline.
struct EmissionConfig {
  double two_photon_prob = 0.04;
  double tau_emission_ns = 12.0;
  double detection_window_ns = 25.0;
  double p_zero_phonon = 0.03;
  double p_collection = 0.014;
  double collection_scale = 1.0;  // scenario calibration constant
  double fiber_db_per_km = 5.0;
  double p_detection = 0.8;
  double dark_rate_hz = 20.0;
  double phase_std_rad = (14.3 * std::numbers::pi / 180.0) / std::numbers::sqrt2;
  double nuclear_coupling_rad_per_ns = 2.0 * std::numbers::pi * 377e3 * 1e-9;
  double nuclear_decay_ns = 82.0;
  double visibility_mu = std::sqrt(0.9);  // real by default

  double dark_prob() const { return 1.0 - std::exp(-detection_window_ns * 1e-9 * dark_rate_hz); }
  void validate() const;
};

inline void DeviceConfig::validate() const {
  auto gate_ok = [](const GateSpec& g) { return g.fidelity >= 0.0 && g.fidelity <= 1.0 && g.duration_ns > 0; };
  if (!gate_ok(electron_single) || !gate_ok(ec_controlled_sqrt_x) || !gate_ok(carbon_rot_z) ||
      !gate_ok(electron_init) || !gate_ok(carbon_init)) {
    throw std::invalid_argument("device: gate fidelities must lie in [0,1] and durations be positive");
  }
  if (readout_f0 < 0 || readout_f0 > 1 || readout_f1 < 0 || readout_f1 > 1 || readout_ns <= 0 ||
      move_to_memory_ns <= 0 || carbon_reinit_period_ns <= 0 || carbon_reinit_cost_ns <= 0 ||
      emission_prep_ns <= 0) {
    throw std::invalid_argument("device: bad readout/timing parameters");
  }
}

inline void EmissionConfig::validate() const {
  auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob_ok(two_photon_prob) || !prob_ok(p_zero_phonon) || !prob_ok(p_collection) ||
      !prob_ok(p_detection) || !prob_ok(p_zero_phonon * p_collection * collection_scale)) {
    throw std::invalid_argument("emission: probabilities must lie in [0,1]");
  }
  if (tau_emission_ns <= 0 || detection_window_ns <= 0 || dark_rate_hz < 0 || phase_std_rad <= 0 ||
      std::abs(visibility_mu) > 1.0 + 1e-12) {
    throw std::invalid_argument("emission: bad optics parameters");
  }
}

/// Fiber transmission loss parameter 1 - 10^(-L*gamma/10).
double fiber_loss_prob(double length_km, double db_per_km);

/// Per-attempt dephasing on an occupied memory qubit while the electron is
/// re-initialized: (alpha/2) * (1 - exp(-(dw*tau)^2/2)).
double nuclear_dephasing_param(double alpha, const EmissionConfig& cfg);

}  // namespace qlink::phys
