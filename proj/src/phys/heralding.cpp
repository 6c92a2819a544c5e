#include "qlink/phys/heralding.hpp"

#include <cstring>

#include "qlink/des/rng.hpp"

namespace qlink::phys {

using qstate::DensityMatrix;

namespace {

std::uint64_t hash_state(const DensityMatrix& dm) {
  const auto& m = dm.mat();
  std::uint64_t h = 0x9e3779b97f4a7c15ull ^ static_cast<std::uint64_t>(m.rows());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::uint64_t bits[2];
    double re = m.data()[i].real(), im = m.data()[i].imag();
    std::memcpy(&bits[0], &re, 8);
    std::memcpy(&bits[1], &im, 8);
    h = des::splitmix64(h ^ bits[0]);
    h = des::splitmix64(h ^ bits[1]);
  }
  return h;
}

}  // namespace

DetectionResult MidpointDetector::sample_from_stats(const HeraldStats& st, QubitId photon_a,
                                                    QubitId photon_b, bool discard_on_failure) {
  std::vector<double> probs(st.branch_prob.begin(), st.branch_prob.end());
  const int branch = des::sample_index(rng_, probs);
  const int ideal = branch_ideal_pattern(branch);
  const bool left = des::bernoulli(rng_, (ideal & 1) ? st.p_detection : st.p_dark);
  const bool right = des::bernoulli(rng_, (ideal & 2) ? st.p_detection : st.p_dark);

  DetectionResult res;
  res.branch = branch;
  res.left = left;
  res.right = right;
  res.r = clicks_to_outcome(left, right);

  if (discard_on_failure && res.r == 0) {
    // the protocol abandons failed attempts; skip the post-state math
    reg_.discard_group(photon_a);
    reg_.discard_group(photon_b);
    return res;
  }

  // Photons are consumed by the measurement; the electrons keep the branch
  // post state.
  QubitId ea = reg_.partner(photon_a);
  QubitId eb = reg_.partner(photon_b);
  reg_.remove(photon_a);
  reg_.remove(photon_b);
  std::vector<QubitId> pair{ea, eb};
  reg_.install(pair, st.post_ee[branch]);
  return res;
}

DetectionResult MidpointDetector::detect(QubitId photon_a, QubitId photon_b) {
  DensityMatrix pa = reg_.peek({reg_.partner(photon_a), photon_a});
  DensityMatrix pb = reg_.peek({reg_.partner(photon_b), photon_b});
  std::uint64_t key = des::splitmix64(hash_state(pa) ^ des::splitmix64(hash_state(pb)));
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    it = cache_.emplace(key, herald_stats(pa, pb, station_)).first;
  }
  return sample_from_stats(it->second, photon_a, photon_b, true);
}

DetectionResult MidpointDetector::detect_uncached(QubitId photon_a, QubitId photon_b) {
  DensityMatrix pa = reg_.peek({reg_.partner(photon_a), photon_a});
  DensityMatrix pb = reg_.peek({reg_.partner(photon_b), photon_b});
  HeraldStats st = herald_stats(pa, pb, station_);
  return sample_from_stats(st, photon_a, photon_b, false);
}

DetectionResult midpoint_detect(StateRegistry& reg, QubitId photon_a, QubitId photon_b,
                                const EmissionConfig& station, std::mt19937_64& rng) {
  MidpointDetector det(station, reg, rng);
  return det.detect_uncached(photon_a, photon_b);
}

}  // namespace qlink::phys
