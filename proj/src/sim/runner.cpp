#include "qlink/sim/runner.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "qlink/des/trace.hpp"
#include "qlink/dqp/dqp.hpp"
#include "qlink/mhp/mhp.hpp"

namespace qlink::sim {

using egp::Egp;
using egp::OkRecord;
using egp::RequestKind;
using net::AbsQueueId;

namespace {

struct PairKey {
  std::uint32_t origin;
  std::uint16_t create_id;
  std::uint16_t seq;
  auto operator<=>(const PairKey&) const = default;
};

struct PairSlot {
  int delivered = 0;
  OkRecord rec[2];
  bool finalized = false;
};

struct RequestInfo {
  RequestKind kind;
  std::uint16_t pairs;
  des::SimTime submit;
};

struct KindPlan {
  double alpha = 0.1;
  double p_succ = 0.0;
  double attempt_cycles = 1.0;
  bool keep = true;
};

bool md_error(const OkRecord& a, const OkRecord& b) {
  // Bell-state correlation conventions: the second heralded state is
  // anti-correlated in every basis; the first is anti-correlated in Z only.
  const bool equal = a.outcome == b.outcome;
  if (a.herald == 2) return equal;
  return (a.basis == qstate::Basis::Z) ? equal : !equal;
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& sc_in, const WorkloadConfig& wl) {
  ScenarioConfig sc = sc_in;
  if (!sc.calibrated) sc.calibrate();
  sc.validate();

  RunResult result;
  MetricsReport& rep = result.report;
  rep.seed = sc.seed;
  rep.preset = preset_name(sc.preset);
  rep.scheduler =
      sc.sched.strategy == egp::SchedulerConfig::Strategy::Fcfs ? "fcfs" : "strict-wfq";
  rep.p_loss = sc.p_loss;

  des::Engine eng;
  des::RngPool rng(sc.seed);
  des::TraceLog trace(sc.retain_trace);
  phys::StateRegistry reg;

  const mhp::MhpTiming timing = sc.timing();

  phys::NvNode node_a("A", sc.device, sc.emission, sc.arm_a_km, reg, eng,
                      rng.stream("readout-a"));
  phys::NvNode node_b("B", sc.device, sc.emission, sc.arm_b_km, reg, eng,
                      rng.stream("readout-b"));

  auto& loss_rng = rng.stream("channel-loss");
  auto chan = [&](const char* name, double km) {
    return net::SimChannel(name, net::ChannelConfig{km, sc.p_loss, 0}, eng, loss_rng, &trace);
  };
  net::SimChannel gen_a = chan("gen-a", sc.arm_a_km);
  net::SimChannel gen_b = chan("gen-b", sc.arm_b_km);
  net::SimChannel reply_a = chan("reply-a", sc.arm_a_km);
  net::SimChannel reply_b = chan("reply-b", sc.arm_b_km);
  net::SimChannel ab = chan("a-to-b", sc.arm_a_km + sc.arm_b_km);
  net::SimChannel ba = chan("b-to-a", sc.arm_a_km + sc.arm_b_km);

  mhp::Midpoint station(timing, sc.emission, reg, eng, rng.stream("detectors"), &trace);
  station.set_channels(&reply_a, &reply_b);

  const des::SimTime retransmit_ns = 4 * sc.ab_delay_ns() + sc.cycle_ns;
  dqp::DistributedQueue dq_a({true, retransmit_ns, 10, 8}, eng, ab, &trace);
  dqp::DistributedQueue dq_b({false, retransmit_ns, 10, 8}, eng, ba, &trace);

  egp::FeuModel feu_proto = egp::FeuModel::build(sc.feu_scenario());
  egp::FeuModel feu_a = feu_proto;
  egp::FeuModel feu_b = feu_proto;

  // -- bookkeeping shared by the callbacks --
  std::map<PairKey, PairSlot> pair_slots;
  std::map<std::pair<std::uint32_t, std::uint16_t>, RequestInfo> request_info;
  std::array<std::map<std::uint16_t, egp::TestRoundRecord>, 2> test_stash;
  std::array<std::set<std::uint16_t>, 2> covered;  // per node: ok/test/expire seqs
  std::array<std::uint64_t, 3> md_err_count{}, md_count{};
  std::uint64_t determinism_violations = 0;
  std::array<Egp*, 2> egps{nullptr, nullptr};

  auto cover_range = [&](int node, std::uint16_t lo, std::uint16_t hi) {
    const std::uint16_t span = static_cast<std::uint16_t>(hi - lo);
    if (span > 4096) return;  // insane range: leave uncovered for the audit
    for (std::uint32_t i = 0; i <= span; ++i) {
      covered[node].insert(static_cast<std::uint16_t>(lo + i));
    }
  };

  auto finalize_pair = [&](const PairKey& key, PairSlot& slot) {
    slot.finalized = true;
    const OkRecord& r0 = slot.rec[0];
    PairRecord pr;
    auto it = request_info.find({key.origin, key.create_id});
    pr.kind = it != request_info.end()
                  ? it->second.kind
                  : (r0.keep ? RequestKind::CK : RequestKind::MD);
    pr.origin = key.origin;
    pr.create_id = key.create_id;
    pr.seq = key.seq;
    pr.keep = r0.keep;
    pr.submit_time = it != request_info.end() ? it->second.submit : 0;
    pr.delivered_time = eng.now();
    pr.goodness = r0.goodness;
    if (r0.keep) {
      phys::QubitId qa = slot.rec[0].qubit, qb = slot.rec[1].qubit;
      if (reg.exists(qa) && reg.exists(qb) && reg.same_group(qa, qb)) {
        reg.advance(qa, eng.now());
        reg.advance(qb, eng.now());
        pr.true_fidelity = reg.pair_fidelity(qa, qb, qstate::Bell::PsiPlus);
        reg.remove(qa);
        reg.remove(qb);
      }
    } else {
      const OkRecord& r1 = slot.rec[1];
      int b = static_cast<int>(r0.basis);
      ++md_count[b];
      if (md_error(r0, r1)) ++md_err_count[b];
    }
    rep.pairs.push_back(pr);
  };

  auto make_callbacks = [&](int node) {
    Egp::Callbacks cb;
    cb.on_ok = [&, node](const OkRecord& rec) {
      ++rep.oks;
      covered[node].insert(rec.seq);
      PairKey key{rec.origin_id, rec.create_id, rec.seq};
      PairSlot& slot = pair_slots[key];
      if (slot.delivered < 2) slot.rec[slot.delivered] = rec;
      ++slot.delivered;
      if (slot.delivered == 2 && !slot.finalized) finalize_pair(key, slot);
    };
    cb.on_err = [&, node](const egp::ErrRecord& rec) {
      switch (rec.err) {
        case net::EgpError::Timeout: ++rep.err_timeout; break;
        case net::EgpError::Unsupported: ++rep.err_unsupp; break;
        case net::EgpError::Denied:
        case net::EgpError::Rejected: ++rep.err_denied; break;
        case net::EgpError::NoTime: ++rep.err_notime; break;
        case net::EgpError::Expired:
          if (rec.has_range) {
            ++rep.expire_ranges;
            cover_range(node, rec.seq_low, rec.seq_high);
          }
          break;
        default: break;
      }
    };
    cb.on_request_closed = [&, node](AbsQueueId, RequestKind kind, std::uint32_t origin,
                                     egp::RequestClose why, des::SimTime submit) {
      const std::uint32_t my_id = node == 0 ? 1u : 2u;
      if (origin != my_id) return;  // record once, at the origin
      RequestRecord rr;
      rr.kind = kind;
      rr.origin = origin;
      rr.submit_time = submit;
      rr.close_time = eng.now();
      rr.pairs = 1;
      for (const auto& [k, info] : request_info) {
        if (k.first == origin && info.submit == submit) {
          rr.pairs = info.pairs;
          break;
        }
      }
      rr.status = why == egp::RequestClose::Completed  ? "completed"
                  : why == egp::RequestClose::TimedOut ? "timeout"
                                                       : "expired";
      rr.latency_s = static_cast<double>(eng.now() - submit) * 1e-9;
      rr.scaled_latency_s = rr.latency_s / std::max<int>(1, rr.pairs);
      if (why == egp::RequestClose::Completed) {
        // attribute to the per-kind completion tally in summary()
      }
      rep.requests.push_back(rr);
    };
    cb.on_test_round = [&, node](const egp::TestRoundRecord& tr) {
      covered[node].insert(tr.seq);
      auto& mine = test_stash[node];
      auto& theirs = test_stash[1 - node];
      auto other = theirs.find(tr.seq);
      if (other == theirs.end()) {
        mine[tr.seq] = tr;
        return;
      }
      egp::TestRoundRecord peer = other->second;
      theirs.erase(other);
      ++rep.test_rounds;
      bool equal = tr.outcome == peer.outcome;
      bool error = (tr.herald == 2) ? equal
                                    : (tr.basis == qstate::Basis::Z ? equal : !equal);
      qstate::Basis basis = tr.basis;
      eng.schedule_after(sc.ab_delay_ns(), [&, basis, error] {
        feu_a.record_test_round(basis, error);
        feu_b.record_test_round(basis, error);
      });
    };
    cb.on_pair_revoked = [&, node](std::uint32_t origin, std::uint16_t create_id,
                                   std::uint16_t seq) {
      ++rep.expired_pairs;
      PairKey key{origin, create_id, seq};
      auto it = pair_slots.find(key);
      if (it != pair_slots.end()) {
        for (auto& pr : rep.pairs) {
          if (pr.origin == origin && pr.create_id == create_id && pr.seq == seq) {
            pr.revoked = true;
          }
        }
      }
      (void)node;
    };
    return cb;
  };

  egp::EgpConfig ecfg_a;
  ecfg_a.node_index = 0;
  ecfg_a.node_id = 1;
  ecfg_a.peer_id = 2;
  ecfg_a.sched = sc.sched;
  ecfg_a.test_fraction = sc.test_fraction;
  ecfg_a.test_window = sc.test_window;
  ecfg_a.max_inflight_m = sc.max_inflight_m;
  ecfg_a.timing = timing;
  ecfg_a.ab_delay_ns = sc.ab_delay_ns();
  ecfg_a.reply_slack_ns = 200;
  ecfg_a.retransmit_ns = retransmit_ns;
  ecfg_a.shared_seed = des::splitmix64(sc.seed ^ 0x5eedC0de);
  egp::EgpConfig ecfg_b = ecfg_a;
  ecfg_b.node_index = 1;
  ecfg_b.node_id = 2;
  ecfg_b.peer_id = 1;

  Egp egp_a(ecfg_a, node_a, reg, dq_a, feu_a, ab, eng, &trace, make_callbacks(0));
  Egp egp_b(ecfg_b, node_b, reg, dq_b, feu_b, ba, eng, &trace, make_callbacks(1));
  egps = {&egp_a, &egp_b};

  mhp::NodeMhp mhp_a(0, timing, node_a, station, gen_a, egp_a, eng, rng.stream("gen-fail"),
                     &trace);
  mhp::NodeMhp mhp_b(1, timing, node_b, station, gen_b, egp_b, eng, rng.stream("gen-fail"),
                     &trace);
  mhp_a.set_gen_fail_prob(sc.gen_fail_prob);
  mhp_b.set_gen_fail_prob(sc.gen_fail_prob);

  gen_a.set_receiver([&](const net::WirePacket& p) {
    station.gen_arrival(0, std::get<net::GenPacket>(p));
  });
  gen_b.set_receiver([&](const net::WirePacket& p) {
    station.gen_arrival(1, std::get<net::GenPacket>(p));
  });
  reply_a.set_receiver([&](const net::WirePacket& p) {
    mhp_a.on_reply(std::get<net::ReplyPacket>(p));
  });
  reply_b.set_receiver([&](const net::WirePacket& p) {
    mhp_b.on_reply(std::get<net::ReplyPacket>(p));
  });
  ab.set_receiver([&](const net::WirePacket& p) {
    if (const auto* e = std::get_if<net::ErrPacket>(&p)) {
      if (e->err == net::EgpError::Expired && e->seq_range) cover_range(1, e->seq_low, e->seq_high);
    }
    egp_b.on_peer_packet(p);
  });
  ba.set_receiver([&](const net::WirePacket& p) {
    if (const auto* e = std::get_if<net::ErrPacket>(&p)) {
      if (e->err == net::EgpError::Expired && e->seq_range) cover_range(0, e->seq_low, e->seq_high);
    }
    egp_a.on_peer_packet(p);
  });

  // -- workload --
  auto& wrng = rng.stream("workload");
  std::array<KindPlan, 3> plan;
  for (RequestKind kind : {RequestKind::NL, RequestKind::CK, RequestKind::MD}) {
    KindPlan& p = plan[static_cast<int>(kind)];
    p.keep = kind != RequestKind::MD;
    auto alpha = feu_proto.alpha_for_fidelity(wl.min_fidelity, p.keep);
    p.alpha = alpha.value_or(0.1);
    p.p_succ = feu_proto.p_succ(p.alpha);
    p.attempt_cycles = sc.attempt_cycles(p.keep);
  }

  auto issue_creates = [&](std::uint64_t /*cycle*/) {
    for (RequestKind kind : {RequestKind::NL, RequestKind::CK, RequestKind::MD}) {
      const KindLoad& load = wl.load(kind);
      if (load.fraction <= 0.0) continue;
      const KindPlan& p = plan[static_cast<int>(kind)];
      int k = load.fixed_k > 0
                  ? load.fixed_k
                  : 1 + static_cast<int>(wrng() % static_cast<std::uint64_t>(load.k_max));
      const double prob = load.fraction * p.p_succ / (p.attempt_cycles * k);
      if (!des::bernoulli(wrng, prob)) continue;
      int origin = wl.origin == WorkloadConfig::Origin::AllA   ? 0
                   : wl.origin == WorkloadConfig::Origin::AllB ? 1
                                                               : (des::bernoulli(wrng, 0.5) ? 1 : 0);
      egp::CreateRequest req;
      req.type_k = p.keep;
      req.num_pairs = static_cast<std::uint16_t>(k);
      req.consecutive = true;
      req.max_wait_ns = wl.max_wait_ns;
      req.purpose_id = static_cast<std::uint16_t>(kind);
      req.priority = kind == RequestKind::NL ? 1 : kind == RequestKind::CK ? 2 : 3;
      req.min_fidelity = wl.min_fidelity;
      Egp& egp = origin == 0 ? egp_a : egp_b;
      auto out = egp.create(req);
      if (out.create_id) {
        request_info[{origin == 0 ? 1u : 2u, *out.create_id}] =
            RequestInfo{kind, static_cast<std::uint16_t>(k), eng.now()};
      }
    }
  };

  // -- cycle driver --
  const std::uint64_t load_cycles = static_cast<std::uint64_t>(sc.duration_ns / sc.cycle_ns);
  const des::SimTime drain_deadline = sc.duration_ns + wl.drain_limit_ns;
  std::function<void(std::uint64_t)> cycle_fn = [&](std::uint64_t c) {
    const bool loading = c < load_cycles;
    if (loading) issue_creates(c);
    mhp_a.on_cycle(c);
    mhp_b.on_cycle(c);
    const auto& pa = egp_a.last_poll();
    const auto& pb = egp_b.last_poll();
    if (pa.generate && pb.generate && !(pa.aid == pb.aid) &&
        egp_a.queue_fingerprint() == egp_b.queue_fingerprint()) {
      // same committed queue state, different choice: a real scheduler bug
      ++determinism_violations;
    }
    if (c % 1024 == 0) {
      rep.queue_length.emplace_back(eng.now() * 1e-9, egp_a.queued_items());
    }
    bool idle = !loading && egp_a.active_requests() == 0 && egp_b.active_requests() == 0 &&
                egp_a.attempts_in_flight() == 0 && egp_b.attempts_in_flight() == 0;
    if (loading || (wl.drain && !idle && eng.now() < drain_deadline)) {
      eng.schedule_at(static_cast<des::SimTime>(c + 1) * sc.cycle_ns,
                      [&cycle_fn, c] { cycle_fn(c + 1); });
    }
  };
  eng.schedule_at(0, [&cycle_fn] { cycle_fn(0); });

  // Run to quiescence of all scheduled events (the cycle chain stops itself).
  while (!eng.empty()) {
    eng.run_until(eng.now() + 1'000'000'000);
    if (eng.now() > drain_deadline + 120'000'000'000ll) break;  // hard stop
  }

  rep.duration_s = static_cast<double>(sc.duration_ns) * 1e-9;
  rep.heralds = station.successes();
  rep.attempts = mhp_a.attempts() + mhp_b.attempts();
  for (const net::SimChannel* ch : {&gen_a, &gen_b, &reply_a, &reply_b, &ab, &ba}) {
    rep.messages_sent += ch->sent();
    rep.messages_dropped += ch->dropped();
  }
  rep.out_of_mem_events = egp_a.stats().out_of_mem + egp_b.stats().out_of_mem;
  rep.grants = egp_a.stats().grants + egp_b.stats().grants;
  rep.flow_blocked = egp_a.stats().flow_blocked + egp_b.stats().flow_blocked;
  rep.reinits = egp_a.stats().reinits + egp_b.stats().reinits;
  rep.suspensions = egp_a.stats().suspensions + egp_b.stats().suspensions;
  rep.stale_replies = egp_a.stats().stale_replies + egp_b.stats().stale_replies;
  rep.proto_errors = egp_a.stats().proto_errors + egp_b.stats().proto_errors;

  for (int b = 0; b < 3; ++b) {
    rep.md_qber[b] = md_count[b] ? static_cast<double>(md_err_count[b]) / md_count[b] : 0.0;
  }
  if (md_count[0] && md_count[1] && md_count[2]) {
    rep.md_fidelity = egp::qber_to_fidelity(rep.md_qber[0], rep.md_qber[1], rep.md_qber[2]);
  }

  // -- invariant audit --
  auto violation = [&](const std::string& v) {
    result.invariants_ok = false;
    result.violations.push_back(v);
  };
  if (determinism_violations > 0) {
    violation("scheduler determinism: nodes disagreed on the served request " +
              std::to_string(determinism_violations) + " times");
  }
  if (wl.drain) {
    std::size_t unaccounted = 0;
    for (const auto& [seq, window] : station.success_log()) {
      for (int node = 0; node < 2; ++node) {
        if (!covered[node].count(seq)) ++unaccounted;
      }
    }
    if (unaccounted > 0) {
      violation("unaccounted heralded sequence numbers: " + std::to_string(unaccounted));
    }
  }
  if (rep.pairs.size() > station.successes()) {
    violation("delivered pairs exceed heralded successes");
  }
  if (wl.drain && (egp_a.active_requests() || egp_b.active_requests())) {
    violation("drain incomplete: live requests remain (possible deadlock)");
  }
  if (reg.group_count() > 64) {
    violation("state registry leak: " + std::to_string(reg.group_count()) + " groups live");
  }

  result.trace_hash = trace.hash();
  result.trace_rows = trace.rows();
  if (sc.retain_trace) result.trace_text = trace.text();
  return result;
}

}  // namespace qlink::sim
