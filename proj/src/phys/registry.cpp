#include "qlink/phys/registry.hpp"

#include <algorithm>
#include <cmath>

#include "qlink/des/rng.hpp"

namespace qlink::phys {

using qstate::DensityMatrix;
using qstate::KrausChannel;
using qstate::Mat;

std::vector<QubitId> StateRegistry::add_group(const DensityMatrix& dm) {
  Group g;
  g.state = dm;
  std::vector<QubitId> ids;
  for (int i = 0; i < dm.qubits(); ++i) {
    QubitId q = next_qubit_++;
    ids.push_back(q);
    g.members.push_back(q);
  }
  std::uint64_t gid = next_group_++;
  for (QubitId q : ids) where_[q] = Ref{gid};
  groups_[gid] = std::move(g);
  return ids;
}

QubitId StateRegistry::add(const DensityMatrix& single) {
  if (single.qubits() != 1) throw std::invalid_argument("add: expected a 1-qubit state");
  return add_group(single).front();
}

std::size_t StateRegistry::group_size(QubitId q) const { return group_of(q).members.size(); }

bool StateRegistry::same_group(QubitId a, QubitId b) const {
  return where_.at(a).group == where_.at(b).group;
}

QubitId StateRegistry::partner(QubitId q) const {
  const Group& g = group_of(q);
  if (g.members.size() != 2) throw std::logic_error("partner: group is not a pair");
  return g.members[0] == q ? g.members[1] : g.members[0];
}

StateRegistry::Group& StateRegistry::group_of(QubitId q) {
  auto it = where_.find(q);
  if (it == where_.end()) throw std::invalid_argument("registry: unknown qubit");
  return groups_.at(it->second.group);
}

const StateRegistry::Group& StateRegistry::group_of(QubitId q) const {
  auto it = where_.find(q);
  if (it == where_.end()) throw std::invalid_argument("registry: unknown qubit");
  return groups_.at(it->second.group);
}

int StateRegistry::position(const Group& g, QubitId q) const {
  auto it = std::find(g.members.begin(), g.members.end(), q);
  return static_cast<int>(it - g.members.begin());
}

void StateRegistry::set_clock(QubitId q, double t1_ns, double t2_ns, des::SimTime t0) {
  clocks_[q] = Clock{t1_ns, t2_ns, true, t0};
}

void StateRegistry::advance(QubitId q, des::SimTime t) {
  auto it = clocks_.find(q);
  if (it == clocks_.end() || !it->second.enabled) return;
  Clock& c = it->second;
  if (t <= c.last) return;
  const double dt = static_cast<double>(t - c.last);
  c.last = t;
  // decoherence intervals repeat (flight times, reply waits); reuse channels
  auto key = std::make_tuple(dt, c.t1_ns, c.t2_ns);
  auto cit = decohere_cache_.find(key);
  if (cit == decohere_cache_.end()) {
    cit = decohere_cache_.emplace(key, decohere_channel(dt, c.t1_ns, c.t2_ns)).first;
  }
  const KrausChannel& ch = cit->second;
  if (ch.ops.size() == 1) return;  // identity
  Group& g = group_of(q);
  int pos = position(g, q);
  qstate::apply_channel(g.state, ch, {pos});
}

std::uint64_t StateRegistry::merge_groups(std::span<const QubitId> targets) {
  std::vector<std::uint64_t> gids;
  for (QubitId q : targets) {
    std::uint64_t gid = where_.at(q).group;
    if (std::find(gids.begin(), gids.end(), gid) == gids.end()) gids.push_back(gid);
  }
  std::uint64_t base = gids.front();
  for (std::size_t i = 1; i < gids.size(); ++i) {
    Group& a = groups_.at(base);
    Group& b = groups_.at(gids[i]);
    if (a.members.size() + b.members.size() > 4) {
      throw std::runtime_error("registry: joint state would exceed 4 qubits");
    }
    a.state = a.state.tensor(b.state);
    for (QubitId q : b.members) {
      a.members.push_back(q);
      where_[q] = Ref{base};
    }
    groups_.erase(gids[i]);
  }
  return base;
}

void StateRegistry::apply(const KrausChannel& ch, std::span<const QubitId> targets) {
  std::uint64_t gid = merge_groups(targets);
  Group& g = groups_.at(gid);
  std::vector<int> pos;
  for (QubitId q : targets) pos.push_back(position(g, q));
  qstate::apply_channel(g.state, ch, pos);
}

std::vector<double> StateRegistry::probabilities(const qstate::Povm& povm,
                                                 std::span<const QubitId> targets) const {
  DensityMatrix joint = peek(targets);
  return qstate::povm_probabilities(joint, povm);
}

void StateRegistry::collapse(const qstate::Povm& povm, std::span<const QubitId> targets,
                             int branch) {
  if (!povm.kraus) throw std::invalid_argument("collapse: POVM lacks Kraus square roots");
  std::uint64_t gid = merge_groups(targets);
  Group& g = groups_.at(gid);
  std::vector<int> pos;
  for (QubitId q : targets) pos.push_back(position(g, q));
  Mat e = qstate::embed((*povm.kraus)[branch], pos, g.state.qubits());
  g.state.mat() = (e * g.state.mat() * e.adjoint()).eval();
  g.state.renormalize();
  g.state.resymmetrize();
}

int StateRegistry::measure(QubitId q, const qstate::Povm& povm, std::mt19937_64& rng) {
  if (povm.elements.front().rows() != 2) throw std::invalid_argument("measure: 1-qubit POVM only");
  Group& g = group_of(q);
  int pos = position(g, q);
  qstate::Povm lifted;
  lifted.elements.reserve(povm.elements.size());
  std::vector<int> target{pos};
  for (const Mat& e : povm.elements) lifted.elements.push_back(qstate::embed(e, target, g.state.qubits()));
  std::vector<double> probs = qstate::povm_probabilities(g.state, lifted);
  int outcome = des::sample_index(rng, probs);
  if (povm.kraus) {
    Mat e = qstate::embed((*povm.kraus)[outcome], target, g.state.qubits());
    g.state.mat() = (e * g.state.mat() * e.adjoint()).eval();
    g.state.renormalize();
    g.state.resymmetrize();
  }
  erase_from_group(q, true);
  return outcome;
}

void StateRegistry::remove(QubitId q) { erase_from_group(q, true); }

void StateRegistry::discard_group(QubitId q) {
  auto it = where_.find(q);
  if (it == where_.end()) throw std::invalid_argument("registry: unknown qubit");
  std::uint64_t gid = it->second.group;
  Group& g = groups_.at(gid);
  for (QubitId member : g.members) {
    where_.erase(member);
    clocks_.erase(member);
  }
  groups_.erase(gid);
}

void StateRegistry::erase_from_group(QubitId q, bool trace) {
  auto it = where_.find(q);
  if (it == where_.end()) throw std::invalid_argument("registry: unknown qubit");
  std::uint64_t gid = it->second.group;
  Group& g = groups_.at(gid);
  if (g.members.size() == 1) {
    groups_.erase(gid);
  } else {
    int pos = position(g, q);
    g.state = g.state.trace_out(pos);
    g.members.erase(g.members.begin() + pos);
    (void)trace;
  }
  where_.erase(it);
  clocks_.erase(q);
}

DensityMatrix StateRegistry::peek(std::span<const QubitId> qubits) const {
  // Gather the distinct groups involved, build their product, then reorder /
  // trace down to the requested qubits.
  std::vector<std::uint64_t> gids;
  for (QubitId q : qubits) {
    std::uint64_t gid = where_.at(q).group;
    if (std::find(gids.begin(), gids.end(), gid) == gids.end()) gids.push_back(gid);
  }
  DensityMatrix joint;
  std::vector<QubitId> order;
  bool first = true;
  for (std::uint64_t gid : gids) {
    const Group& g = groups_.at(gid);
    joint = first ? g.state : joint.tensor(g.state);
    first = false;
    order.insert(order.end(), g.members.begin(), g.members.end());
  }
  std::vector<int> keep;
  for (QubitId q : qubits) {
    auto it = std::find(order.begin(), order.end(), q);
    keep.push_back(static_cast<int>(it - order.begin()));
  }
  return joint.partial_trace_keep(keep);
}

void StateRegistry::install(std::span<const QubitId> qubits, const DensityMatrix& dm) {
  if (static_cast<int>(qubits.size()) != dm.qubits()) {
    throw std::invalid_argument("install: qubit count mismatch");
  }
  std::uint64_t gid = merge_groups(qubits);
  Group& g = groups_.at(gid);
  for (QubitId member : std::vector<QubitId>(g.members)) {
    if (std::find(qubits.begin(), qubits.end(), member) == qubits.end()) {
      erase_from_group(member, true);
    }
  }
  Group& g2 = groups_.at(gid);
  g2.state = dm;
  g2.members.assign(qubits.begin(), qubits.end());
}

double StateRegistry::pair_fidelity(QubitId a, QubitId b, qstate::Bell target) const {
  std::vector<QubitId> pair{a, b};
  return qstate::fidelity(peek(pair), qstate::bell_state(target));
}

KrausChannel decohere_channel(double dt_ns, double t1_ns, double t2_ns) {
  const bool has_t1 = std::isfinite(t1_ns) && t1_ns > 0.0;
  const bool has_t2 = std::isfinite(t2_ns) && t2_ns > 0.0;
  if (has_t1 && has_t2 && t2_ns > 2.0 * t1_ns + 1e-9) {
    throw std::invalid_argument("decohere: requires T2 <= 2*T1");
  }
  if (dt_ns < 0.0) throw std::invalid_argument("decohere: negative dt");
  const double g1 = has_t1 ? 1.0 - std::exp(-dt_ns / t1_ns) : 0.0;
  // Residual dephasing on top of the damping-induced sqrt(1-g1) decay.
  double pz = 0.0;
  if (has_t2) {
    const double inv = 1.0 / t2_ns - (has_t1 ? 0.5 / t1_ns : 0.0);
    pz = (1.0 - std::exp(-dt_ns * std::max(0.0, inv))) / 2.0;
  }

  KrausChannel damp = KrausChannel::amplitude_damping(g1);
  if (pz <= 0.0) {
    if (g1 <= 0.0) return KrausChannel::identity_channel(2);
    return damp;
  }
  KrausChannel deph = KrausChannel::dephasing(pz);
  KrausChannel out;
  for (const Mat& d : deph.ops)
    for (const Mat& a : damp.ops) out.ops.push_back(d * a);
  return out;
}

}  // namespace qlink::phys
