#pragma once

#include <array>

#include "qlink/phys/device.hpp"
#include "qlink/qstate/channels.hpp"
#include "qlink/qstate/povm.hpp"

namespace qlink::phys {

/// Joint (electron, photon) state right after an emission attempt with
/// bright-state population `alpha`: sqrt(a)|0>|1> + sqrt(1-a)|1>|0>, followed
/// by the attempt noise pipeline in order: two-photon dephasing on the
/// electron, path-phase dephasing on the photon, finite-window emission
/// damping, collection damping. Qubit 0 = electron, qubit 1 = photon.
qstate::DensityMatrix spin_photon_state(double alpha, const EmissionConfig& cfg);

/// Electron dephasing parameter of the two-photon-emission model:
/// the bright/dark coherence shrinks by sqrt(1 - p2).
double two_photon_dephasing_param(double two_photon_prob);

/// Applies fiber transmission loss to the photon qubit (index `photon`).
void apply_fiber(qstate::DensityMatrix& state, int photon, double length_km, double db_per_km);

/// Classical detector model at the station: the ideal click pattern of a
/// beam-splitter branch is pushed through per-detector efficiency and dark
/// counts.
struct ClickModel {
  double p_detection = 0.8;
  double p_dark = 0.0;

  /// P(noisy left/right pattern | ideal pattern), patterns encoded as
  /// bit0=left, bit1=right.
  double pattern_prob(int ideal, int noisy) const;
};

/// Heralding outcome r: 0 failure, 1 = left-only (first Bell state),
/// 2 = right-only (second Bell state).
int clicks_to_outcome(bool left, bool right);

/// Ideal click pattern of non-counting beam-splitter branch b
/// (0:none, 1:left, 2:right, 3:both).
int branch_ideal_pattern(int branch);

/// Analytic description of one midpoint detection given the two incoming
/// (electron, photon) pair states: ideal-branch probabilities and the
/// electron-electron post states per branch.
struct HeraldStats {
  std::array<double, 4> branch_prob{};
  std::array<qstate::DensityMatrix, 4> post_ee;  // normalized where prob > 0
  double p_detection = 0.0;
  double p_dark = 0.0;

  /// P(r) marginalized over branches and detector noise.
  std::array<double, 3> outcome_probs() const;
  /// Mean fidelity of the heralded electron-electron state to the
  /// outcome-matched Bell state (left -> PsiPlus, right -> PsiMinus),
  /// conditioned on r in {1,2}.
  double heralded_fidelity() const;
};

HeraldStats herald_stats(const qstate::DensityMatrix& pair_a, const qstate::DensityMatrix& pair_b,
                         const EmissionConfig& station);

}  // namespace qlink::phys
