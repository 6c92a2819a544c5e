#include "qlink/sim/validate.hpp"

#include <cmath>

#include "qlink/des/rng.hpp"
#include "qlink/qstate/channels.hpp"

namespace qlink::sim {

using phys::ClickModel;
using phys::HeraldStats;
using qstate::Basis;
using qstate::DensityMatrix;
using qstate::KrausChannel;
using qstate::Mat;

phys::HeraldStats herald_stats_for(const ScenarioConfig& sc, double alpha) {
  DensityMatrix pa = phys::spin_photon_state(alpha, sc.emission);
  DensityMatrix pb = phys::spin_photon_state(alpha, sc.emission);
  phys::apply_fiber(pa, 1, sc.arm_a_km, sc.emission.fiber_db_per_km);
  phys::apply_fiber(pb, 1, sc.arm_b_km, sc.emission.fiber_db_per_km);
  apply_channel(pa,
                phys::decohere_channel(
                    static_cast<double>(net::propagation_delay_ns(sc.arm_a_km)),
                    sc.device.electron_t1_ns, sc.device.electron_t2_ns),
                {0});
  apply_channel(pb,
                phys::decohere_channel(
                    static_cast<double>(net::propagation_delay_ns(sc.arm_b_km)),
                    sc.device.electron_t1_ns, sc.device.electron_t2_ns),
                {0});
  return herald_stats(pa, pb, sc.emission);
}

ValidationPoint validate_alpha(const ScenarioConfig& sc, double alpha, std::uint64_t min_pairs,
                               std::uint64_t max_attempts, std::mt19937_64& rng,
                               double rotation_rad, bool noisy_readout) {
  HeraldStats st = herald_stats_for(sc, alpha);
  ClickModel clicks{st.p_detection, st.p_dark};

  // Precompute, per POVM branch: fidelity to each heralded target and the
  // joint measurement distribution per basis.
  std::array<std::array<double, 2>, 4> branch_fid{};
  // [branch][basis][mA*2+mB]
  std::array<std::array<std::array<double, 4>, 3>, 4> joint{};
  const double f0 = noisy_readout ? sc.device.readout_f0 : 1.0;
  const double f1 = noisy_readout ? sc.device.readout_f1 : 1.0;
  qstate::Povm readout = qstate::readout_povm(f0, f1);

  Mat rot = Mat::Identity(2, 2);
  if (rotation_rad != 0.0) {
    rot(0, 0) = std::exp(std::complex<double>(0, -rotation_rad / 2));
    rot(1, 1) = std::exp(std::complex<double>(0, rotation_rad / 2));
  }

  for (int b = 0; b < 4; ++b) {
    branch_fid[b][0] = qstate::fidelity(st.post_ee[b], qstate::bell_state(qstate::Bell::PsiPlus));
    branch_fid[b][1] = qstate::fidelity(st.post_ee[b], qstate::bell_state(qstate::Bell::PsiMinus));
    for (int basis = 0; basis < 3; ++basis) {
      DensityMatrix rho = st.post_ee[b];
      if (rotation_rad != 0.0) apply_channel(rho, KrausChannel::unitary(rot), {0});
      Mat u = qstate::basis_rotation(static_cast<Basis>(basis));
      apply_channel(rho, KrausChannel::unitary(u), {0});
      apply_channel(rho, KrausChannel::unitary(u), {1});
      for (int ma = 0; ma < 2; ++ma) {
        for (int mb = 0; mb < 2; ++mb) {
          Mat ea = qstate::embed(readout.elements[ma], std::vector<int>{0}, 2);
          Mat eb = qstate::embed(readout.elements[mb], std::vector<int>{1}, 2);
          joint[b][basis][ma * 2 + mb] = ((ea * eb * rho.mat()).trace()).real();
        }
      }
    }
  }

  ValidationPoint pt;
  pt.alpha = alpha;
  double fid_sum = 0.0, fid_sq = 0.0;
  std::array<std::array<std::uint64_t, 3>, 2> diff_count{};
  std::vector<double> branch_probs(st.branch_prob.begin(), st.branch_prob.end());

  while (pt.heralds < min_pairs && pt.attempts < max_attempts) {
    ++pt.attempts;
    int branch = des::sample_index(rng, branch_probs);
    int ideal = phys::branch_ideal_pattern(branch);
    bool left = des::bernoulli(rng, (ideal & 1) ? clicks.p_detection : clicks.p_dark);
    bool right = des::bernoulli(rng, (ideal & 2) ? clicks.p_detection : clicks.p_dark);
    int r = phys::clicks_to_outcome(left, right);
    if (r == 0) continue;
    ++pt.heralds;
    double f = branch_fid[branch][r - 1];
    fid_sum += f;
    fid_sq += f * f;

    // pre-agreed basis rotates per pair
    int basis = static_cast<int>(pt.heralds % 3);
    double u = des::uniform01(rng);
    int cell = 3;
    double acc = 0.0;
    for (int c = 0; c < 4; ++c) {
      acc += joint[branch][basis][c];
      if (u < acc) {
        cell = c;
        break;
      }
    }
    int ma = cell >> 1, mb = cell & 1;
    ++pt.n_meas[r - 1][basis];
    if (ma != mb) ++diff_count[r - 1][basis];
  }

  pt.p_succ_hat = pt.attempts ? static_cast<double>(pt.heralds) / pt.attempts : 0.0;
  if (pt.heralds > 0) {
    pt.mean_fidelity = fid_sum / pt.heralds;
    double var = fid_sq / pt.heralds - pt.mean_fidelity * pt.mean_fidelity;
    pt.fidelity_sigma = std::sqrt(std::max(0.0, var) / pt.heralds);
  }
  for (int det = 0; det < 2; ++det) {
    // F = 1/4 [1 +- <XX> +- <YY> - <ZZ>], with <BB> = 1 - 2 Pr(m_A != m_B)
    double f = 0.25;
    double var = 0.0;
    const double sign_xy = det == 0 ? +1.0 : -1.0;
    for (int basis = 0; basis < 3; ++basis) {
      std::uint64_t n = pt.n_meas[det][basis];
      double pd = n ? static_cast<double>(diff_count[det][basis]) / n : 0.0;
      pt.pr_diff[det][basis] = pd;
      double corr = 1.0 - 2.0 * pd;
      double sign = (basis == 2) ? -1.0 : sign_xy;  // Z anti-correlated for both
      f += 0.25 * sign * corr;
      if (n) var += 0.25 * 0.25 * 4.0 * pd * (1 - pd) / n;
    }
    pt.corr_fidelity[det] = f;
    pt.corr_sigma[det] = std::sqrt(var);
  }
  return pt;
}

}  // namespace qlink::sim
