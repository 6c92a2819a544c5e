#pragma once

#include <random>
#include <unordered_map>

#include "qlink/phys/emission.hpp"
#include "qlink/phys/registry.hpp"

namespace qlink::phys {

struct DetectionResult {
  int r = 0;  // 0 failure, 1 first Bell state (left), 2 second (right)
  int branch = 0;
  bool left = false;
  bool right = false;
};

/// Beam-splitter detection of two photon qubits. Applies the non-counting
/// POVM, pushes the ideal click pattern through detector efficiency and dark
/// counts, traces the photons out, and leaves the electrons in the branch
/// post state. Caches branch distributions keyed on the incoming pair states
/// so repeated identical attempts cost one classical sample.
class MidpointDetector {
 public:
  MidpointDetector(EmissionConfig station, StateRegistry& reg, std::mt19937_64& rng)
      : station_(station), reg_(reg), rng_(rng) {}

  /// Both photons must each share a 2-qubit group with their electron.
  DetectionResult detect(QubitId photon_a, QubitId photon_b);

  /// Reference path without caching; used by tests to cross-check.
  DetectionResult detect_uncached(QubitId photon_a, QubitId photon_b);

  const EmissionConfig& station() const { return station_; }
  std::size_t cache_size() const { return cache_.size(); }

 private:
  DetectionResult sample_from_stats(const HeraldStats& st, QubitId photon_a,
                                    QubitId photon_b, bool discard_on_failure);

  EmissionConfig station_;
  StateRegistry& reg_;
  std::mt19937_64& rng_;
  std::unordered_map<std::uint64_t, HeraldStats> cache_;
};

/// One-shot form of the midpoint detection (spec-level operation).
DetectionResult midpoint_detect(StateRegistry& reg, QubitId photon_a, QubitId photon_b,
                                const EmissionConfig& station, std::mt19937_64& rng);

}  // namespace qlink::phys
