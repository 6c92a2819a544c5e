#pragma once

#include <array>
#include <random>

#include "qlink/sim/scenario.hpp"

namespace qlink::sim {

/// Analytic station-side description of one attempt at the given alpha,
/// with fiber loss and flight decoherence applied.
phys::HeraldStats herald_stats_for(const ScenarioConfig& sc, double alpha);

/// Physical-layer validation sweep point: repeated emission + heralding with
/// fixed-basis joint measurements on success.
struct ValidationPoint {
  double alpha = 0.0;
  std::uint64_t attempts = 0;
  std::uint64_t heralds = 0;
  double p_succ_hat = 0.0;
  double mean_fidelity = 0.0;  // privileged post-herald state fidelity
  double fidelity_sigma = 0.0;

  // correlation-derived estimate per heralding detector (index 0: first
  // state, 1: second), from Pr(m_A != m_B) in the three bases
  std::array<double, 2> corr_fidelity{};
  std::array<double, 2> corr_sigma{};
  std::array<std::array<double, 3>, 2> pr_diff{};        // [detector][basis]
  std::array<std::array<std::uint64_t, 3>, 2> n_meas{};  // samples per cell
};

/// Runs attempts until `min_pairs` heralded pairs (or `max_attempts`).
/// `rotation_rad` is the one-sided Z rotation applied before measurement.
ValidationPoint validate_alpha(const ScenarioConfig& sc, double alpha, std::uint64_t min_pairs,
                               std::uint64_t max_attempts, std::mt19937_64& rng,
                               double rotation_rad = 0.0, bool noisy_readout = true);

}  // namespace qlink::sim
