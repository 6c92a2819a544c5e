#include "qlink/egp/feu.hpp"

#include <algorithm>
#include <cmath>

#include "qlink/net/channel.hpp"
#include "qlink/phys/registry.hpp"
#include "qlink/qstate/channels.hpp"

namespace qlink::egp {

using phys::HeraldStats;
using qstate::Basis;
using qstate::DensityMatrix;
using qstate::KrausChannel;

double qber_to_fidelity(double qx, double qy, double qz, bool* clamped) {
  if (qx < 0 || qx > 1 || qy < 0 || qy > 1 || qz < 0 || qz > 1) {
    throw std::invalid_argument("qber_to_fidelity: rates outside [0,1]");
  }
  double f = 1.0 - (qx + qy + qz) / 2.0;
  bool clip = false;
  if (f < 0.0) {
    f = 0.0;
    clip = true;
  }
  if (f > 1.0) {
    f = 1.0;
    clip = true;
  }
  if (clamped) *clamped = clip;
  return f;
}

namespace {

constexpr std::uint64_t kMinSamplesPerBasis = 20;

// Mean heralded fidelity and success probability of one attempt at the given
// alpha, via the analytic station model.
FeuModel::Entry entry_for_alpha(const FeuScenario& sc, double alpha) {
  DensityMatrix pa = phys::spin_photon_state(alpha, sc.emission);
  DensityMatrix pb = phys::spin_photon_state(alpha, sc.emission);
  phys::apply_fiber(pa, 1, sc.arm_a_km, sc.emission.fiber_db_per_km);
  phys::apply_fiber(pb, 1, sc.arm_b_km, sc.emission.fiber_db_per_km);
  // Electrons decohere while the photons fly to the station.
  const double t_a = static_cast<double>(net::propagation_delay_ns(sc.arm_a_km));
  const double t_b = static_cast<double>(net::propagation_delay_ns(sc.arm_b_km));
  apply_channel(pa, phys::decohere_channel(t_a, sc.device.electron_t1_ns, sc.device.electron_t2_ns),
                {0});
  apply_channel(pb, phys::decohere_channel(t_b, sc.device.electron_t1_ns, sc.device.electron_t2_ns),
                {0});

  HeraldStats st = herald_stats(pa, pb, sc.emission);
  auto probs = st.outcome_probs();

  FeuModel::Entry e;
  e.alpha = alpha;
  e.p_succ = probs[1] + probs[2];
  e.fidelity_herald = st.heralded_fidelity();

  // K pairs additionally wait for the reply and ride the move to memory.
  phys::ClickModel clicks{st.p_detection, st.p_dark};
  const qstate::Vec psi_plus = qstate::bell_state(qstate::Bell::PsiPlus);
  double num = 0.0, den = 0.0;
  for (int b = 0; b < 4; ++b) {
    for (int noisy = 1; noisy <= 2; ++noisy) {
      double w = st.branch_prob[b] * clicks.pattern_prob(phys::branch_ideal_pattern(b), noisy);
      if (w <= 0.0) continue;
      DensityMatrix rho = st.post_ee[b];
      const double wait = static_cast<double>(sc.reply_wait_k_ns);
      for (int q = 0; q < 2; ++q) {
        apply_channel(rho,
                      phys::decohere_channel(wait, sc.device.electron_t1_ns,
                                             sc.device.electron_t2_ns),
                      {q});
      }
      if (noisy == 2) apply_channel(rho, KrausChannel::unitary(qstate::pauli_z()), {0});
      const double gate_p = 1.0 - sc.device.ec_controlled_sqrt_x.fidelity;
      for (int q = 0; q < 2; ++q) {
        apply_channel(rho, KrausChannel::dephasing(gate_p), {q});
        apply_channel(rho, KrausChannel::dephasing(gate_p), {q});
      }
      num += w * qstate::fidelity(rho, psi_plus);
      den += w;
    }
  }
  e.fidelity_keep = den > 0 ? num / den : 0.0;
  return e;
}

}  // namespace

FeuModel::Entry FeuModel::entry_at(const FeuScenario& sc, double alpha) {
  return entry_for_alpha(sc, alpha);
}

FeuModel FeuModel::build(const FeuScenario& sc, int grid_points) {
  FeuModel m;
  m.scenario_ = sc;
  m.table_.reserve(grid_points);
  const double lo = 0.01, hi = 0.75;
  for (int i = 0; i < grid_points; ++i) {
    double alpha = lo + (hi - lo) * i / (grid_points - 1);
    m.table_.push_back(entry_for_alpha(sc, alpha));
  }
  return m;
}

namespace {

double interp(const std::vector<FeuModel::Entry>& t, double alpha,
              double FeuModel::Entry::*field) {
  if (t.empty()) throw std::logic_error("feu: empty table");
  if (alpha <= t.front().alpha) return t.front().*field;
  if (alpha >= t.back().alpha) return t.back().*field;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (alpha <= t[i].alpha) {
      double w = (alpha - t[i - 1].alpha) / (t[i].alpha - t[i - 1].alpha);
      return (1 - w) * (t[i - 1].*field) + w * (t[i].*field);
    }
  }
  return t.back().*field;
}

}  // namespace

double FeuModel::p_succ(double alpha) const { return interp(table_, alpha, &Entry::p_succ); }

double FeuModel::predicted_fidelity(double alpha, bool keep) const {
  return interp(table_, alpha, keep ? &Entry::fidelity_keep : &Entry::fidelity_herald);
}

double FeuModel::max_fidelity(bool keep) const {
  double best = 0.0;
  for (const Entry& e : table_) best = std::max(best, keep ? e.fidelity_keep : e.fidelity_herald);
  return best;
}

std::optional<double> FeuModel::alpha_for_fidelity(double f_min, bool /*keep*/) const {
  // The quality the unit tracks (and test rounds verify) is the fidelity of
  // the heralded pair, so the inversion always runs on the herald curve.
  // Fidelity decreases with alpha over the calibrated range; pick the
  // largest alpha (fastest generation) still meeting f_min.
  std::optional<double> best;
  for (std::size_t i = 0; i < table_.size(); ++i) {
    if (table_[i].fidelity_herald >= f_min) best = table_[i].alpha;
  }
  if (!best) return std::nullopt;
  // refine between grid points by bisection
  double lo = *best;
  double hi = std::min(lo + (table_[1].alpha - table_[0].alpha), table_.back().alpha);
  for (int i = 0; i < 30; ++i) {
    double mid = 0.5 * (lo + hi);
    if (predicted_fidelity(mid, false) >= f_min) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

std::uint32_t FeuModel::est_cycles_per_pair(double alpha, bool keep) const {
  const double attempts = 1.0 / std::max(1e-12, p_succ(alpha));
  const double cycles_per_attempt = keep ? scenario_.attempt_cycles_k : scenario_.attempt_cycles_m;
  double v = attempts * cycles_per_attempt;
  return v > 4e9 ? 4'000'000'000u : static_cast<std::uint32_t>(v);
}

des::SimTime FeuModel::min_completion_ns(std::uint16_t pairs, double alpha, bool keep) const {
  return static_cast<des::SimTime>(pairs) * est_cycles_per_pair(alpha, keep) * scenario_.cycle_ns;
}

void FeuModel::record_test_round(Basis basis, bool error) {
  window_.emplace_back(basis, error);
  int b = static_cast<int>(basis);
  ++basis_count_[b];
  if (error) ++basis_err_[b];
  while (window_.size() > window_n_) {
    auto [old_b, old_e] = window_.front();
    window_.pop_front();
    --basis_count_[static_cast<int>(old_b)];
    if (old_e) --basis_err_[static_cast<int>(old_b)];
  }
}

double FeuModel::qber(Basis basis) const {
  int b = static_cast<int>(basis);
  if (basis_count_[b] == 0) return 0.0;
  return static_cast<double>(basis_err_[b]) / static_cast<double>(basis_count_[b]);
}

std::optional<double> FeuModel::estimated_fidelity() const {
  for (int b = 0; b < 3; ++b) {
    if (basis_count_[b] < kMinSamplesPerBasis) return std::nullopt;
  }
  bool clipped = false;
  double f = qber_to_fidelity(qber(Basis::X), qber(Basis::Y), qber(Basis::Z), &clipped);
  if (clipped) ++clamp_events_;
  return f;
}

double FeuModel::goodness(double alpha, bool /*keep*/) const {
  if (auto est = estimated_fidelity()) return *est;
  return predicted_fidelity(alpha, false);
}

}  // namespace qlink::egp
