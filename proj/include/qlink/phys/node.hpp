#pragma once

#include <optional>
#include <string>

#include "qlink/des/rng.hpp"
#include "qlink/phys/device.hpp"
#include "qlink/phys/emission.hpp"
#include "qlink/phys/registry.hpp"

namespace qlink::phys {

/// One NV node: a communication qubit (electron) with an optical interface
/// and one storage qubit (carbon). Gate noise is dephasing after a perfect
/// gate; initialization depolarizes. Free decoherence is applied lazily by
/// the registry clocks.
class NvNode {
 public:
  NvNode(std::string name, DeviceConfig dev, EmissionConfig emission, double arm_km,
         StateRegistry& reg, des::Engine& eng, std::mt19937_64& rng)
      : name_(std::move(name)),
        dev_(dev),
        emission_(emission),
        arm_km_(arm_km),
        reg_(reg),
        eng_(eng),
        rng_(rng) {
    dev_.validate();
    emission_.validate();
  }

  const std::string& name() const { return name_; }
  const DeviceConfig& device() const { return dev_; }
  const EmissionConfig& emission_config() const { return emission_; }
  double arm_km() const { return arm_km_; }

  bool electron_in_use() const { return electron_.has_value(); }
  bool carbon_in_use() const { return carbon_.has_value(); }
  QubitId electron() const { return electron_.value(); }
  QubitId carbon() const { return carbon_.value(); }

  /// Spin-photon entanglement attempt. The communication qubit must be free
  /// (or releasable); applies the emission noise pipeline, fiber loss over
  /// this node's arm, and per-attempt dephasing on an occupied memory qubit.
  struct Emission {
    QubitId electron;
    QubitId photon;
  };
  Emission attempt_emission(double alpha);

  /// Z on the electron (heralded-state correction). Perfect single-qubit
  /// gate per the gate table; returns its duration.
  des::SimTime correct_electron_phase();

  /// Initializes the electron (carbon) to |0> with the table's depolarizing
  /// fidelity; the slot must be free. Returns the duration.
  des::SimTime init_electron();
  des::SimTime init_carbon();

  /// Swaps the electron state into the carbon slot (two controlled-sqrt(X)
  /// gates plus locals). The gate fidelities subsume in-gate decoherence, so
  /// the carbon clock starts at `completion_time`. Returns the duration.
  des::SimTime move_to_memory(des::SimTime completion_time);

  /// Measures the electron of a (possibly past) attempt in the given basis
  /// with noisy readout. `at` is the physical measurement instant the state
  /// is decohered to. The qubit is consumed.
  int measure_electron(QubitId q, qstate::Basis basis, des::SimTime at);

  void discard_electron();
  void discard_carbon();
  void release_carbon() { carbon_.reset(); }  // delivered upward, keeps state alive

  /// Marks a (re-)initialization of the carbon finishing at `done`.
  void note_carbon_init(des::SimTime done) { last_carbon_init_ = done; }
  des::SimTime last_carbon_init() const { return last_carbon_init_; }

  void apply_fiber_loss(QubitId photon);

  /// Adopts an externally installed electron state (used when the station
  /// replaces the spin-photon pairs with the heralded electron pair).
  void set_electron(QubitId q) { electron_ = q; }
  void clear_electron() { electron_.reset(); }

 private:
  const qstate::DensityMatrix& emitted_state(double alpha);
  const qstate::KrausChannel& memory_dephasing(double alpha);

  std::string name_;
  DeviceConfig dev_;
  EmissionConfig emission_;
  double arm_km_;
  StateRegistry& reg_;
  des::Engine& eng_;
  std::mt19937_64& rng_;

  std::optional<QubitId> electron_;
  std::optional<QubitId> carbon_;
  des::SimTime last_carbon_init_ = -1;

  // attempts repeat the same alpha; the pipeline output is reused
  std::map<double, qstate::DensityMatrix> emission_cache_;
  std::map<double, qstate::KrausChannel> dephasing_cache_;
};

}  // namespace qlink::phys
