#pragma once

#include <optional>
#include <string>

#include "qlink/sim/metrics.hpp"

namespace qlink::sim {

/// Per-kind request load: in each MHP cycle a CREATE of kind P for k pairs
/// (k uniform on [1, k_max], or fixed) is issued with probability
/// f_P * p_succ / (E_P * k).
struct KindLoad {
  double fraction = 0.0;  // f_P; 0.7 Low, 0.99 High, 1.5 Ultra
  int k_max = 1;
  int fixed_k = 0;  // > 0 pins k
};

struct WorkloadConfig {
  KindLoad nl, ck, md;
  enum class Origin { AllA, AllB, Random } origin = Origin::Random;
  double min_fidelity = 0.64;
  des::SimTime max_wait_ns = 0;  // 0 = no request timeout
  bool drain = false;            // keep cycling after the load window
  des::SimTime drain_limit_ns = 30'000'000'000;

  static WorkloadConfig single(RequestKind kind, double f, int k_max,
                               Origin origin = Origin::Random);
  /// Usage patterns: Uniform, MoreNL, MoreCK, MoreMD, NoNLMoreCK, NoNLMoreMD.
  static WorkloadConfig pattern(const std::string& name);
  /// The mixed pattern of the scheduling study: uniform thirds with fixed
  /// pairs per request (NL 2, CK 2, MD 10).
  static WorkloadConfig scheduling_mix();

  const KindLoad& load(RequestKind k) const {
    return k == RequestKind::NL ? nl : k == RequestKind::CK ? ck : md;
  }
};

}  // namespace qlink::sim
