#pragma once

#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "qlink/qstate/dm.hpp"

namespace qlink::qstate {

/// Positive operator-valued measure. `kraus`, when present, holds square
/// roots used to produce post-measurement states.
struct Povm {
  std::vector<Mat> elements;
  std::optional<std::vector<Mat>> kraus;

  bool complete(double tol = 1e-10) const;
};

/// Two-detector outcome labels for the beam-splitter measurement on the
/// {|00>,|10>,|01>,|11>} photon pair space (presence/absence encoding).
/// Photon-counting order: 00, 10, 01, 11, 20, 02.
/// Non-counting order:    00, 10, 01, 11.
Povm beamsplitter_povm(Cplx mu, bool photon_counting);

/// Single-qubit readout with asymmetric flip fidelities f0 and f1.
Povm readout_povm(double f0, double f1);

/// Born-rule sampling. Returns (outcome index, normalized post state).
/// Requires Kraus square roots.
std::pair<int, DensityMatrix> measure_povm(const DensityMatrix& rho, const Povm& povm,
                                           std::mt19937_64& rng);

/// Outcome probabilities tr(M_i rho); throws if they do not sum to 1 within
/// 1e-9.
std::vector<double> povm_probabilities(const DensityMatrix& rho, const Povm& povm);

}  // namespace qlink::qstate
