#pragma once

#include <span>
#include <vector>

#include "qlink/qstate/dm.hpp"

namespace qlink::qstate {

/// Set of Kraus operators. Trace preserving unless flagged as a
/// sub-normalized measurement branch.
struct KrausChannel {
  std::vector<Mat> ops;
  bool sub_normalized = false;

  int dim() const { return ops.empty() ? 0 : static_cast<int>(ops.front().rows()); }
  bool is_trace_preserving(double tol = kHermTol) const;

  /// rho -> (1-p) rho + p Z rho Z
  static KrausChannel dephasing(double p);
  /// rho -> f rho + (1-f)/3 (X rho X + Y rho Y + Z rho Z)
  static KrausChannel depolarizing(double f);
  /// Loses the |1> excitation with probability p.
  static KrausChannel amplitude_damping(double p);
  static KrausChannel unitary(Mat u);
  static KrausChannel identity_channel(int dim);
};

/// rho' = sum_K K rho K^dagger on the given target qubits, followed by
/// re-symmetrization.
void apply_channel(DensityMatrix& rho, const KrausChannel& ch, std::span<const int> targets);

inline void apply_channel(DensityMatrix& rho, const KrausChannel& ch,
                          std::initializer_list<int> targets) {
  apply_channel(rho, ch, std::span<const int>(targets.begin(), targets.size()));
}

}  // namespace qlink::qstate
