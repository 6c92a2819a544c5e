#include "qlink/sim/workload.hpp"

#include <stdexcept>

namespace qlink::sim {

WorkloadConfig WorkloadConfig::single(RequestKind kind, double f, int k_max, Origin origin) {
  WorkloadConfig wl;
  KindLoad load{f, k_max, 0};
  switch (kind) {
    case RequestKind::NL: wl.nl = load; break;
    case RequestKind::CK: wl.ck = load; break;
    case RequestKind::MD: wl.md = load; break;
  }
  wl.origin = origin;
  return wl;
}

WorkloadConfig WorkloadConfig::pattern(const std::string& name) {
  const double f = 0.99;
  WorkloadConfig wl;
  if (name == "Uniform") {
    wl.nl = {f / 3, 1, 0};
    wl.ck = {f / 3, 1, 0};
    wl.md = {f / 3, 1, 0};
  } else if (name == "MoreNL") {
    wl.nl = {f * 4 / 6, 3, 0};
    wl.ck = {f / 6, 3, 0};
    wl.md = {f / 6, 255, 0};
  } else if (name == "MoreCK") {
    wl.nl = {f / 6, 3, 0};
    wl.ck = {f * 4 / 6, 3, 0};
    wl.md = {f / 6, 255, 0};
  } else if (name == "MoreMD") {
    wl.nl = {f / 6, 3, 0};
    wl.ck = {f / 6, 3, 0};
    wl.md = {f * 4 / 6, 255, 0};
  } else if (name == "NoNLMoreCK") {
    wl.nl = {0, 3, 0};
    wl.ck = {f * 4 / 5, 3, 0};
    wl.md = {f / 5, 255, 0};
  } else if (name == "NoNLMoreMD") {
    wl.nl = {0, 3, 0};
    wl.ck = {f / 5, 3, 0};
    wl.md = {f * 4 / 5, 255, 0};
  } else {
    throw std::invalid_argument("unknown usage pattern: " + name);
  }
  return wl;
}

WorkloadConfig WorkloadConfig::scheduling_mix() {
  const double f = 0.99;
  WorkloadConfig wl;
  wl.nl = {f / 3, 2, 2};
  wl.ck = {f / 3, 2, 2};
  wl.md = {f / 3, 10, 10};
  return wl;
}

}  // namespace qlink::sim
