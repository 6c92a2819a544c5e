#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "qlink/phys/device.hpp"
#include "qlink/phys/emission.hpp"
#include "qlink/qstate/dm.hpp"

namespace qlink::egp {

/// F = 1 - (qx + qy + qz)/2, clamped to [0,1]. `clamped` (when given)
/// reports whether clamping fired.
double qber_to_fidelity(double qx, double qy, double qz, bool* clamped = nullptr);

/// Inputs the FEU needs to predict attempt statistics for one link.
struct FeuScenario {
  phys::DeviceConfig device;
  phys::EmissionConfig emission;
  double arm_a_km = 0.001;
  double arm_b_km = 0.001;
  des::SimTime cycle_ns = 10'120;
  des::SimTime reply_wait_k_ns = 0;   // herald-to-reply wait charged to K pairs
  double attempt_cycles_m = 1.0;      // expected MHP cycles per attempt
  double attempt_cycles_k = 1.1;
};

/// Fidelity estimation unit: an offline calibration table (fidelity and
/// success probability vs the bright-state population) inverted for
/// requested minimum fidelities, plus a rolling QBER window fed by test
/// rounds.
class FeuModel {
 public:
  struct Entry {
    double alpha;
    double p_succ;
    double fidelity_herald;  // fresh heralded electron pair
    double fidelity_keep;    // after reply wait + move to memory
  };

  FeuModel() = default;
  static FeuModel build(const FeuScenario& sc, int grid_points = 40);
  /// Analytic single-attempt statistics at one alpha.
  static Entry entry_at(const FeuScenario& sc, double alpha);

  const std::vector<Entry>& table() const { return table_; }

  double p_succ(double alpha) const;
  double predicted_fidelity(double alpha, bool keep) const;
  double max_fidelity(bool keep) const;
  /// Smallest alpha (largest success rate) that still meets f_min;
  /// nullopt when f_min is not achievable.
  std::optional<double> alpha_for_fidelity(double f_min, bool keep) const;

  std::uint32_t est_cycles_per_pair(double alpha, bool keep) const;
  des::SimTime min_completion_ns(std::uint16_t pairs, double alpha, bool keep) const;

  // -- rolling test-round window --
  void set_window(std::size_t n) { window_n_ = n; }
  std::size_t window_size() const { return window_n_; }
  void record_test_round(qstate::Basis basis, bool error);
  double qber(qstate::Basis basis) const;
  /// Estimate from the current window; nullopt until every basis has data.
  std::optional<double> estimated_fidelity() const;
  std::uint64_t clamp_events() const { return clamp_events_; }

  /// Goodness reported in OK messages: the live estimate when the window
  /// has data, the calibration prediction otherwise.
  double goodness(double alpha, bool keep) const;

 private:
  std::vector<Entry> table_;
  FeuScenario scenario_;

  std::size_t window_n_ = 2000;
  std::deque<std::pair<qstate::Basis, bool>> window_;
  std::array<std::uint64_t, 3> basis_count_{};
  std::array<std::uint64_t, 3> basis_err_{};
  mutable std::uint64_t clamp_events_ = 0;
};

}  // namespace qlink::egp
