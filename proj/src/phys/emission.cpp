#include "qlink/phys/emission.hpp"

#include <cmath>

#include "qlink/qstate/bessel.hpp"

namespace qlink::phys {

using qstate::Cplx;
using qstate::DensityMatrix;
using qstate::KrausChannel;
using qstate::Vec;

double fiber_loss_prob(double length_km, double db_per_km) {
  if (length_km < 0.0) throw std::invalid_argument("fiber: negative length");
  return 1.0 - std::pow(10.0, -length_km * db_per_km / 10.0);
}

double nuclear_dephasing_param(double alpha, const EmissionConfig& cfg) {
  const double x = cfg.nuclear_coupling_rad_per_ns * cfg.nuclear_decay_ns;
  return alpha / 2.0 * (1.0 - std::exp(-x * x / 2.0));
}

double two_photon_dephasing_param(double two_photon_prob) {
  return (1.0 - std::sqrt(1.0 - two_photon_prob)) / 2.0;
}

DensityMatrix spin_photon_state(double alpha, const EmissionConfig& cfg) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("attempt_emission: alpha must lie strictly inside (0,1)");
  }
  Vec psi = Vec::Zero(4);
  psi(1) = std::sqrt(alpha);        // |0>_e |1>_p (bright, photon emitted)
  psi(2) = std::sqrt(1.0 - alpha);  // |1>_e |0>_p
  DensityMatrix rho = DensityMatrix::from_pure(psi);

  apply_channel(rho, KrausChannel::dephasing(two_photon_dephasing_param(cfg.two_photon_prob)),
                {0});
  apply_channel(rho, KrausChannel::dephasing(qstate::phase_dephasing_param(cfg.phase_std_rad)),
                {1});
  apply_channel(rho,
                KrausChannel::amplitude_damping(
                    std::exp(-cfg.detection_window_ns / cfg.tau_emission_ns)),
                {1});
  const double keep = cfg.p_zero_phonon * cfg.p_collection * cfg.collection_scale;
  apply_channel(rho, KrausChannel::amplitude_damping(1.0 - keep), {1});
  return rho;
}

void apply_fiber(DensityMatrix& state, int photon, double length_km, double db_per_km) {
  apply_channel(state, KrausChannel::amplitude_damping(fiber_loss_prob(length_km, db_per_km)),
                {photon});
}

double ClickModel::pattern_prob(int ideal, int noisy) const {
  auto one = [&](bool lit, bool click) {
    double p_click = lit ? p_detection : p_dark;
    return click ? p_click : 1.0 - p_click;
  };
  return one(ideal & 1, noisy & 1) * one(ideal & 2, noisy & 2);
}

int clicks_to_outcome(bool left, bool right) {
  if (left && !right) return 1;
  if (right && !left) return 2;
  return 0;
}

int branch_ideal_pattern(int branch) {
  switch (branch) {
    case 0: return 0;
    case 1: return 1;  // left detector
    case 2: return 2;  // right detector
    case 3: return 3;  // both
  }
  throw std::invalid_argument("branch_ideal_pattern: bad branch");
}

HeraldStats herald_stats(const DensityMatrix& pair_a, const DensityMatrix& pair_b,
                         const EmissionConfig& station) {
  if (pair_a.qubits() != 2 || pair_b.qubits() != 2) {
    throw std::invalid_argument("herald_stats: expected two (electron,photon) pairs");
  }
  HeraldStats st;
  st.p_detection = station.p_detection;
  st.p_dark = station.dark_prob();

  DensityMatrix joint = pair_a.tensor(pair_b);  // (eA pA eB pB)
  qstate::Povm povm = qstate::beamsplitter_povm(station.visibility_mu, false);
  if (!povm.kraus) throw std::invalid_argument("herald_stats: complex visibility not supported");
  const std::vector<int> photons{1, 3};

  qstate::Povm lifted;
  for (const auto& e : povm.elements) lifted.elements.push_back(qstate::embed(e, photons, 4));
  std::vector<double> probs = qstate::povm_probabilities(joint, lifted);

  const std::vector<int> electrons{0, 2};
  for (int b = 0; b < 4; ++b) {
    st.branch_prob[b] = probs[b];
    if (probs[b] <= 1e-15) {
      st.post_ee[b] = DensityMatrix::maximally_mixed(2);
      continue;
    }
    qstate::Mat e = qstate::embed((*povm.kraus)[b], photons, 4);
    DensityMatrix post(qstate::Mat((e * joint.mat() * e.adjoint()).eval()));
    post.renormalize();
    post.resymmetrize();
    st.post_ee[b] = post.partial_trace_keep(electrons);
  }
  return st;
}

std::array<double, 3> HeraldStats::outcome_probs() const {
  ClickModel clicks{p_detection, p_dark};
  std::array<double, 3> out{};
  for (int b = 0; b < 4; ++b) {
    for (int noisy = 0; noisy < 4; ++noisy) {
      int r = clicks_to_outcome(noisy & 1, noisy & 2);
      out[r] += branch_prob[b] * clicks.pattern_prob(branch_ideal_pattern(b), noisy);
    }
  }
  return out;
}

double HeraldStats::heralded_fidelity() const {
  ClickModel clicks{p_detection, p_dark};
  double num = 0.0, den = 0.0;
  const qstate::Vec psi_plus = qstate::bell_state(qstate::Bell::PsiPlus);
  const qstate::Vec psi_minus = qstate::bell_state(qstate::Bell::PsiMinus);
  for (int b = 0; b < 4; ++b) {
    if (branch_prob[b] <= 0.0) continue;
    for (int noisy = 1; noisy <= 2; ++noisy) {
      double w = branch_prob[b] * clicks.pattern_prob(branch_ideal_pattern(b), noisy);
      const qstate::Vec& target = (noisy == 1) ? psi_plus : psi_minus;
      num += w * qstate::fidelity(post_ee[b], target);
      den += w;
    }
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace qlink::phys
