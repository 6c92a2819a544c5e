#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "qlink/des/engine.hpp"
#include "qlink/qstate/channels.hpp"
#include "qlink/qstate/povm.hpp"

namespace qlink::phys {

using QubitId = std::uint64_t;

/// Tracks the joint density matrices of small groups of qubits. Groups merge
/// when an operation spans them and shrink when qubits are measured or traced
/// out. Each qubit carries an optional (T1, T2) decoherence clock advanced
/// lazily before any operation that touches it.
class StateRegistry {
 public:
  std::vector<QubitId> add_group(const qstate::DensityMatrix& dm);
  QubitId add(const qstate::DensityMatrix& single);

  bool exists(QubitId q) const { return where_.count(q) != 0; }
  std::size_t group_size(QubitId q) const;
  std::size_t group_count() const { return groups_.size(); }
  bool same_group(QubitId a, QubitId b) const;
  /// The other member of a 2-qubit group.
  QubitId partner(QubitId q) const;

  void set_clock(QubitId q, double t1_ns, double t2_ns, des::SimTime t0);
  /// Applies free decoherence from the qubit's last update to `t`.
  void advance(QubitId q, des::SimTime t);

  void apply(const qstate::KrausChannel& ch, std::span<const QubitId> targets);
  void apply(const qstate::KrausChannel& ch, std::initializer_list<QubitId> targets) {
    apply(ch, std::span<const QubitId>(targets.begin(), targets.size()));
  }

  std::vector<double> probabilities(const qstate::Povm& povm,
                                    std::span<const QubitId> targets) const;
  /// Collapses onto the given POVM branch (Kraus required) and renormalizes.
  void collapse(const qstate::Povm& povm, std::span<const QubitId> targets, int branch);

  /// Samples a single-qubit POVM, collapses, removes the qubit from its
  /// group, and returns the outcome.
  int measure(QubitId q, const qstate::Povm& povm, std::mt19937_64& rng);

  /// Traces the qubit out of its group.
  void remove(QubitId q);

  /// Drops the entire group containing q without any partial-trace math
  /// (all members are being abandoned).
  void discard_group(QubitId q);

  /// Marginal state of the listed qubits, in the given order. The qubits
  /// must currently share one group or live in separate groups (which are
  /// then combined as a product).
  qstate::DensityMatrix peek(std::span<const QubitId> qubits) const;
  qstate::DensityMatrix peek(std::initializer_list<QubitId> qubits) const {
    return peek(std::span<const QubitId>(qubits.begin(), qubits.size()));
  }

  /// Replaces the groups currently holding `qubits` with a fresh joint state
  /// over exactly those qubits; any other group members are traced out first.
  void install(std::span<const QubitId> qubits, const qstate::DensityMatrix& dm);

  double pair_fidelity(QubitId a, QubitId b, qstate::Bell target) const;

 private:
  struct Clock {
    double t1_ns = 0.0, t2_ns = 0.0;
    bool enabled = false;
    des::SimTime last = 0;
  };
  struct Group {
    qstate::DensityMatrix state;
    std::vector<QubitId> members;
  };
  struct Ref {
    std::uint64_t group;
  };

  Group& group_of(QubitId q);
  const Group& group_of(QubitId q) const;
  int position(const Group& g, QubitId q) const;
  std::uint64_t merge_groups(std::span<const QubitId> targets);
  void erase_from_group(QubitId q, bool trace);

  std::uint64_t next_qubit_ = 1;
  std::uint64_t next_group_ = 1;
  std::map<QubitId, Ref> where_;
  std::map<QubitId, Clock> clocks_;
  std::map<std::uint64_t, Group> groups_;
  std::map<std::tuple<double, double, double>, qstate::KrausChannel> decohere_cache_;
};

/// Free-evolution decoherence channel: amplitude damping 1 - e^(-dt/T1)
/// composed with dephasing so the total off-diagonal decay is e^(-dt/T2).
/// Requires T2 <= 2*T1. Infinite (or nonpositive) T values disable the
/// corresponding part.
qstate::KrausChannel decohere_channel(double dt_ns, double t1_ns, double t2_ns);

}  // namespace qlink::phys
