#include "qlink/phys/node.hpp"

namespace qlink::phys {

using qstate::Basis;
using qstate::KrausChannel;

const qstate::DensityMatrix& NvNode::emitted_state(double alpha) {
  auto it = emission_cache_.find(alpha);
  if (it == emission_cache_.end()) {
    qstate::DensityMatrix rho = spin_photon_state(alpha, emission_);
    phys::apply_fiber(rho, 1, arm_km_, emission_.fiber_db_per_km);
    it = emission_cache_.emplace(alpha, std::move(rho)).first;
  }
  return it->second;
}

const qstate::KrausChannel& NvNode::memory_dephasing(double alpha) {
  auto it = dephasing_cache_.find(alpha);
  if (it == dephasing_cache_.end()) {
    // p_d is the per-attempt Bloch-length shrink: coherence scales by
    // (1-p_d) each attempt, so the channel parameter is p_d/2.
    it = dephasing_cache_
             .emplace(alpha,
                      KrausChannel::dephasing(nuclear_dephasing_param(alpha, emission_) / 2.0))
             .first;
  }
  return it->second;
}

NvNode::Emission NvNode::attempt_emission(double alpha) {
  if (electron_) {
    throw std::logic_error("attempt_emission: communication qubit occupied");
  }
  auto ids = reg_.add_group(emitted_state(alpha));
  QubitId e = ids[0], p = ids[1];
  reg_.set_clock(e, dev_.electron_t1_ns, dev_.electron_t2_ns, eng_.now());
  if (carbon_) {
    reg_.advance(*carbon_, eng_.now());
    reg_.apply(memory_dephasing(alpha), {*carbon_});
  }
  electron_ = e;
  return Emission{e, p};
}

void NvNode::apply_fiber_loss(QubitId photon) {
  reg_.apply(KrausChannel::amplitude_damping(fiber_loss_prob(arm_km_, emission_.fiber_db_per_km)),
             {photon});
}

namespace {

qstate::DensityMatrix depolarized_zero(double fidelity) {
  qstate::DensityMatrix rho = qstate::DensityMatrix::from_pure(qstate::ket({0}));
  apply_channel(rho, KrausChannel::depolarizing(fidelity), {0});
  return rho;
}

}  // namespace

des::SimTime NvNode::init_electron() {
  if (electron_) throw std::logic_error("init_electron: slot occupied");
  QubitId q = reg_.add(depolarized_zero(dev_.electron_init.fidelity));
  reg_.set_clock(q, dev_.electron_t1_ns, dev_.electron_t2_ns, eng_.now() + dev_.electron_init.duration_ns);
  electron_ = q;
  return dev_.electron_init.duration_ns;
}

des::SimTime NvNode::init_carbon() {
  if (carbon_) throw std::logic_error("init_carbon: slot occupied");
  QubitId q = reg_.add(depolarized_zero(dev_.carbon_init.fidelity));
  reg_.set_clock(q, dev_.carbon_t1_ns, dev_.carbon_t2_ns, eng_.now() + dev_.carbon_init.duration_ns);
  carbon_ = q;
  note_carbon_init(eng_.now() + dev_.carbon_init.duration_ns);
  return dev_.carbon_init.duration_ns;
}

des::SimTime NvNode::correct_electron_phase() {
  if (!electron_) throw std::logic_error("correct_electron_phase: no electron state");
  reg_.advance(*electron_, eng_.now());
  reg_.apply(KrausChannel::unitary(qstate::pauli_z()), {*electron_});
  if (dev_.electron_single.fidelity < 1.0) {
    reg_.apply(KrausChannel::dephasing(1.0 - dev_.electron_single.fidelity), {*electron_});
  }
  return dev_.electron_single.duration_ns;
}

des::SimTime NvNode::move_to_memory(des::SimTime completion_time) {
  if (!electron_) throw std::logic_error("move_to_memory: no electron state");
  if (carbon_) throw std::logic_error("move_to_memory: memory qubit occupied");
  const des::SimTime dur = dev_.move_to_memory_ns;
  QubitId q = *electron_;
  reg_.advance(q, eng_.now());
  // Swap realized as two controlled-sqrt(X) gates plus locals; each imperfect
  // gate dephases with the table fidelity (in-gate decoherence included).
  reg_.apply(KrausChannel::dephasing(1.0 - dev_.ec_controlled_sqrt_x.fidelity), {q});
  reg_.apply(KrausChannel::dephasing(1.0 - dev_.ec_controlled_sqrt_x.fidelity), {q});
  // The state now lives in the carbon; free decoherence resumes when the
  // pulse sequence finishes.
  reg_.set_clock(q, dev_.carbon_t1_ns, dev_.carbon_t2_ns, completion_time);
  carbon_ = q;
  electron_.reset();
  return dur;
}

int NvNode::measure_electron(QubitId q, Basis basis, des::SimTime at) {
  reg_.advance(q, at);
  if (basis != Basis::Z) {
    reg_.apply(KrausChannel::unitary(qstate::basis_rotation(basis)), {q});
  }
  int outcome = reg_.measure(q, qstate::readout_povm(dev_.readout_f0, dev_.readout_f1), rng_);
  if (electron_ && *electron_ == q) electron_.reset();
  return outcome;
}

void NvNode::discard_electron() {
  if (!electron_) return;
  if (reg_.exists(*electron_)) reg_.remove(*electron_);
  electron_.reset();
}

void NvNode::discard_carbon() {
  if (!carbon_) return;
  if (reg_.exists(*carbon_)) reg_.remove(*carbon_);
  carbon_.reset();
}

}  // namespace qlink::phys
