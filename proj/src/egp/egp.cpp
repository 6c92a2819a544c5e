#include "qlink/egp/egp.hpp"

#include <algorithm>
#include <cmath>

namespace qlink::egp {

using dqp::QueueItem;
using mhp::MhpResult;
using mhp::PollAnswer;
using net::AbsQueueId;
using net::EgpError;
using phys::QubitId;
using qstate::Basis;

namespace {
constexpr std::size_t kClosedArchiveCap = 64;
constexpr std::uint64_t kSweepEvery = 256;
}  // namespace

Egp::Egp(EgpConfig cfg, phys::NvNode& hw, phys::StateRegistry& reg, dqp::DistributedQueue& dq,
         FeuModel& feu, net::SimChannel& to_peer, des::Engine& eng, des::TraceLog* trace,
         Callbacks cb)
    : cfg_(cfg),
      hw_(hw),
      reg_(reg),
      dq_(dq),
      feu_(feu),
      to_peer_(to_peer),
      eng_(eng),
      trace_(trace),
      cb_(std::move(cb)) {
  feu_.set_window(cfg_.test_window);
  dq_.set_commit_callback([this](const QueueItem& item) { on_committed(item); });
  dq_.set_orphan_callback([this](const QueueItem& item) { on_orphaned(item); });
  // K attempts launch on a shared cycle grid so both nodes stay in lockstep
  // across replies, moves, and recoveries (asymmetric arms would otherwise
  // drift the attempt phases apart and every GEN would arrive one-sided).
  const des::SimTime latency =
      static_cast<des::SimTime>(hw_.emission_config().detection_window_ns) + 100;
  const des::SimTime shared_deadline = hw_.device().emission_prep_ns +
                                       2 * cfg_.timing.max_arm_delay_ns + latency +
                                       cfg_.reply_slack_ns;
  k_grid_ = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(
             (shared_deadline + cfg_.timing.cycle_ns - 1) / cfg_.timing.cycle_ns));
  // Carbon re-initialization rides a shared cycle schedule so both nodes
  // pause K generation in the same windows.
  reinit_period_cycles_ = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(hw_.device().carbon_reinit_period_ns / cfg_.timing.cycle_ns));
  reinit_cost_cycles_ = static_cast<std::uint64_t>(
      (hw_.device().carbon_reinit_cost_ns + cfg_.timing.cycle_ns - 1) / cfg_.timing.cycle_ns);
}

void Egp::err_upward(EgpError err, std::uint16_t create_id, std::uint32_t origin) {
  if (!cb_.on_err) return;
  ErrRecord rec;
  rec.err = err;
  rec.create_id = create_id;
  rec.origin_id = origin;
  rec.time = eng_.now();
  cb_.on_err(rec);
}

Egp::CreateOutcome Egp::create(const CreateRequest& req) {
  const bool keep = req.type_k;
  auto alpha = feu_.alpha_for_fidelity(req.min_fidelity, keep);
  if (!alpha) {
    err_upward(EgpError::Unsupported, 0, cfg_.node_id);
    return {std::nullopt, EgpError::Unsupported};
  }
  if (req.max_wait_ns > 0 &&
      feu_.min_completion_ns(req.num_pairs, *alpha, keep) > req.max_wait_ns) {
    err_upward(EgpError::Unsupported, 0, cfg_.node_id);
    return {std::nullopt, EgpError::Unsupported};
  }
  if (req.atomic && req.num_pairs > 2) {
    // one storage + one communication qubit bound the simultaneous pairs
    err_upward(EgpError::MemExceeded, 0, cfg_.node_id);
    return {std::nullopt, EgpError::MemExceeded};
  }

  const std::uint16_t create_id = next_create_id_++;
  const std::uint64_t now_cycle = static_cast<std::uint64_t>(eng_.now() / cfg_.timing.cycle_ns);

  dqp::AddRequest add;
  add.queue = cfg_.sched.strategy == SchedulerConfig::Strategy::Fcfs ? 0 : req.priority;
  add.create_id = create_id;
  add.purpose_id = req.purpose_id;
  add.num_pairs = req.num_pairs;
  add.min_fidelity = req.min_fidelity;
  add.priority = req.priority;
  add.store = keep;
  add.atomic = req.atomic;
  add.measure = !keep;
  add.schedule_cycle =
      static_cast<std::uint64_t>((eng_.now() + cfg_.ab_delay_ns) / cfg_.timing.cycle_ns) + 1;
  add.timeout_cycle =
      req.max_wait_ns > 0
          ? static_cast<std::uint64_t>((eng_.now() + req.max_wait_ns) / cfg_.timing.cycle_ns)
          : 0;
  add.est_cycles_per_pair = feu_.est_cycles_per_pair(*alpha, keep);

  const int cls = std::min<int>(req.priority, 3);
  const double cost = static_cast<double>(add.est_cycles_per_pair) * req.num_pairs;
  const double weight = req.priority == 2   ? cfg_.sched.weight_ck
                        : req.priority == 3 ? cfg_.sched.weight_md
                                            : 1.0;
  double vf = std::max(static_cast<double>(now_cycle), last_vf_[cls]) + cost / weight;
  last_vf_[cls] = vf;
  add.initial_virtual_finish =
      vf > 4e9 ? 4'000'000'000u : static_cast<std::uint32_t>(vf);

  pending_creates_[create_id] = {req, eng_.now()};
  dq_.add(add, [this, create_id](dqp::AddStatus st, AbsQueueId) {
    if (st == dqp::AddStatus::Success) return;  // commit callback registers it
    pending_creates_.erase(create_id);
    err_upward(st == dqp::AddStatus::Timeout ? EgpError::NoTime : EgpError::Rejected, create_id,
               cfg_.node_id);
  });
  return {create_id, std::nullopt};
}

void Egp::on_committed(const QueueItem& item) {
  RequestState rs;
  rs.aid = item.aid;
  rs.create_id = item.create_id;
  const bool mine = item.origin_is_master == (cfg_.node_index == 0);
  rs.mine = mine;
  rs.origin_id = mine ? cfg_.node_id : cfg_.peer_id;
  if (mine) {
    auto it = pending_creates_.find(item.create_id);
    if (it != pending_creates_.end()) {
      rs.req = it->second.first;
      rs.submit_time = it->second.second;
      pending_creates_.erase(it);
    }
  } else {
    rs.req.type_k = item.store;
    rs.req.num_pairs = item.num_pairs;
    rs.req.atomic = item.atomic;
    rs.req.consecutive = true;
    rs.req.purpose_id = item.purpose_id;
    rs.req.priority = item.priority;
    rs.req.min_fidelity = item.min_fidelity;
    rs.submit_time = eng_.now();
  }
  rs.alpha = alpha_for(item);
  requests_[aid_key(item.aid)] = std::move(rs);
}

void Egp::on_orphaned(const QueueItem& item) {
  // Handshake gave up: retire the request locally and tell the peer to drop
  // any replica state via a whole-request EXPIRE (retransmitted until acked).
  net::ExpirePacket exp;
  exp.aid = item.aid;
  exp.origin_id = cfg_.node_id;
  exp.create_id = item.create_id;
  exp.seq = seq_expected_;
  to_peer_.send(exp);
  const std::uint64_t key = aid_key(item.aid);
  auto [it, fresh] = request_expire_pending_.emplace(key, PendingRequestExpire{exp, 0, {}});
  if (fresh) {
    auto rearm = [this, key](auto&& self) -> void {
      auto pit = request_expire_pending_.find(key);
      if (pit == request_expire_pending_.end()) return;
      pit->second.timer = eng_.schedule_after(cfg_.retransmit_ns, [this, key, self] {
        auto pit2 = request_expire_pending_.find(key);
        if (pit2 == request_expire_pending_.end()) return;
        if (++pit2->second.retries > cfg_.max_retries) {
          request_expire_pending_.erase(pit2);
          return;
        }
        to_peer_.send(pit2->second.pkt);
        self(self);
      });
    };
    rearm(rearm);
  }
  err_upward(EgpError::Expired, item.create_id, cfg_.node_id);
}

double Egp::alpha_for(const QueueItem& item) {
  auto alpha = feu_.alpha_for_fidelity(item.min_fidelity, item.store);
  return alpha ? *alpha : 0.1;
}

Egp::RequestState* Egp::find_request(AbsQueueId aid) {
  auto it = requests_.find(aid_key(aid));
  return it == requests_.end() ? nullptr : &it->second;
}

std::uint64_t Egp::queue_fingerprint() const {
  std::uint64_t h = 0x12345;
  for (int q = 0; q < dqp::kQueueCount; ++q) {
    for (const auto& [abs, item] : dq_.queue_items(static_cast<std::uint8_t>(q))) {
      h = des::splitmix64(h ^ (static_cast<std::uint64_t>(item.aid.qid) << 24) ^
                          (static_cast<std::uint64_t>(item.aid.qseq) << 16) ^ item.pairs_left);
    }
  }
  return h;
}

Egp::RequestState* Egp::find_by_origin(std::uint32_t origin, std::uint16_t create_id,
                                       bool* archived) {
  for (auto& [k, rs] : requests_) {
    if (rs.origin_id == origin && rs.create_id == create_id) {
      if (archived) *archived = false;
      return &rs;
    }
  }
  for (auto& [k, rs] : closed_) {
    if (rs.origin_id == origin && rs.create_id == create_id) {
      if (archived) *archived = true;
      return &rs;
    }
  }
  return nullptr;
}

std::uint64_t Egp::expected_window(std::uint64_t cycle) const {
  const des::SimTime emit = static_cast<des::SimTime>(cycle) * cfg_.timing.cycle_ns +
                            hw_.device().emission_prep_ns +
                            (cfg_.timing.max_arm_delay_ns - net::propagation_delay_ns(hw_.arm_km()));
  return cfg_.timing.window_of(emit + net::propagation_delay_ns(hw_.arm_km()));
}

des::SimTime Egp::reply_deadline(std::uint64_t window, des::SimTime emit_time) const {
  // Expected reply time of a complete window, gated on the slower arm so
  // both nodes keep the same attempt cadence. One-sided windows (lost GEN)
  // resolve at the window close instead and may outlive this deadline; the
  // stale-attempt sweep has freed the qubit by then, which is the intended
  // recovery.
  (void)window;
  const des::SimTime latency =
      static_cast<des::SimTime>(hw_.emission_config().detection_window_ns) + 100;
  return emit_time + net::propagation_delay_ns(hw_.arm_km()) + latency +
         cfg_.timing.max_arm_delay_ns + cfg_.reply_slack_ns;
}

void Egp::sweep_timeouts(std::uint64_t cycle) {
  if (++sweep_counter_ % kSweepEvery != 0) return;
  std::vector<AbsQueueId> expired;
  for (int q = 0; q < dqp::kQueueCount; ++q) {
    for (const auto& [abs, item] : dq_.queue_items(static_cast<std::uint8_t>(q))) {
      if (item.timeout_cycle != 0 && cycle >= item.timeout_cycle) expired.push_back(item.aid);
    }
  }
  for (AbsQueueId aid : expired) {
    if (RequestState* rs = find_request(aid)) close_request(*rs, RequestClose::TimedOut);
  }
}

const QueueItem* Egp::scheduler_next(std::uint64_t cycle) {
  if (cfg_.sched.strategy == SchedulerConfig::Strategy::Fcfs) {
    return dq_.head_ready(0, cycle);
  }
  // strict priority for queue 1 (NL), weighted fair queuing across 2 and 3
  if (const QueueItem* nl = dq_.head_ready(1, cycle)) return nl;
  const QueueItem* ck = dq_.head_ready(2, cycle);
  const QueueItem* md = dq_.head_ready(3, cycle);
  if (ck && md) {
    if (ck->initial_virtual_finish != md->initial_virtual_finish) {
      return ck->initial_virtual_finish < md->initial_virtual_finish ? ck : md;
    }
    return ck;  // tie: lower queue index
  }
  return ck ? ck : md;
}

PollAnswer Egp::poll(std::uint64_t cycle) {
  ++stats_.polls;
  PollAnswer no;
  last_poll_ = no;
  if (pending_issue_ || eng_.now() < electron_free_at_ || eng_.now() < suspended_until_) {
    return no;
  }
  sweep_timeouts(cycle);
  const QueueItem* item = scheduler_next(cycle);
  if (!item) return no;

  const bool test = des::keyed_unit(cfg_.shared_seed, "test-round", cycle) < cfg_.test_fraction;
  const bool keep = item->store && !test;
  const bool atomic_last = item->atomic && item->pairs_left == 1;

  if (keep && cycle % k_grid_ != 0) return no;  // shared attempt grid
  if (hw_.electron_in_use()) {
    ++stats_.out_of_mem;
    return no;
  }
  if (keep) {
    if (hw_.carbon_in_use() && !atomic_last) {
      ++stats_.out_of_mem;
      return no;
    }
    if (peer_storage_free_ < 1 && !atomic_last) {
      ++stats_.flow_blocked;
      return no;
    }
    if (cycle % reinit_period_cycles_ < reinit_cost_cycles_) {
      // carbon re-initialization window (shared schedule); the carbon must
      // be re-initialized periodically before photons are emitted
      if (cycle % reinit_period_cycles_ == 0) ++stats_.reinits;
      hw_.note_carbon_init(eng_.now());
      return no;
    }
  } else {
    if (inflight_m_ >= cfg_.max_inflight_m) return no;
  }

  PollAnswer ans;
  ans.generate = true;
  ans.aid = item->aid;
  ans.alpha = find_request(item->aid) ? find_request(item->aid)->alpha : 0.1;
  ans.keep = keep;
  ans.test_round = test;
  const std::uint64_t w = expected_window(cycle);
  if (test) {
    ans.basis = static_cast<Basis>(des::keyed_pick(cfg_.shared_seed, "test-basis", cycle, 3));
    ++stats_.test_rounds;
  } else if (!keep) {
    ans.basis = static_cast<Basis>(des::keyed_pick(cfg_.shared_seed, "md-basis", w, 3));
  }
  ans.pseq = static_cast<std::uint16_t>(((keep ? 1 : 0) << 3) | (test ? 1 << 2 : 0) |
                                        static_cast<int>(ans.basis));
  pending_issue_ = true;
  ++stats_.grants;
  last_poll_ = ans;
  return ans;
}

void Egp::attempt_started(std::uint64_t window, const PollAnswer& ans, QubitId electron,
                          des::SimTime emit_time) {
  pending_issue_ = false;
  Attempt a;
  a.aid = ans.aid;
  a.electron = electron;
  a.emit_time = emit_time;
  a.keep = ans.keep;
  a.test = ans.test_round;
  a.basis = ans.basis;
  attempts_[window] = a;

  if (a.keep) {
    electron_free_at_ = reply_deadline(window, emit_time);
  } else {
    // The per-attempt pipeline (prep + readout) fits inside one cycle, so
    // measured attempts overlap their replies freely.
    hw_.clear_electron();
    ++inflight_m_;
  }

  // stale-attempt sweep: a lost reply must not leak the electron
  eng_.schedule_at(reply_deadline(window, emit_time) + cfg_.timing.cycle_ns + 1, [this, window] {
    auto it = attempts_.find(window);
    if (it == attempts_.end()) return;
    Attempt a = it->second;
    attempts_.erase(it);
    free_attempt(a);
  });
}

void Egp::attempt_failed_locally(const PollAnswer&) {
  pending_issue_ = false;
  ++stats_.gen_fails;
}

void Egp::free_attempt(const Attempt& a) {
  if (!a.keep) --inflight_m_;
  if (reg_.exists(a.electron)) reg_.remove(a.electron);
  if (hw_.electron_in_use() && hw_.electron() == a.electron) hw_.clear_electron();
}

void Egp::maybe_expire_gap(std::uint16_t station_seq, RequestState* rs) {
  // Non-success replies carry the station's current counter; successes we
  // never saw lie in [expected, station_seq].
  if (seq_before(station_seq, seq_expected_)) return;
  const std::uint16_t lo = seq_expected_;
  const std::uint16_t hi = station_seq;
  seq_expected_ = static_cast<std::uint16_t>(station_seq + 1);
  std::uint32_t origin = rs ? rs->origin_id : cfg_.node_id;
  std::uint16_t create_id = rs ? rs->create_id : 0;
  send_expire_range(origin, create_id, lo, hi);
}

void Egp::send_expire_range(std::uint32_t origin, std::uint16_t create_id, std::uint16_t lo,
                            std::uint16_t hi) {
  ++stats_.expires_sent;
  net::ErrPacket p;
  p.err = EgpError::Expired;
  p.create_id = create_id;
  p.seq_range = true;
  p.seq_low = lo;
  p.seq_high = hi;
  p.origin_id = origin;
  to_peer_.send(p);

  PendingExpire pe;
  pe.pkt = p;
  auto [it, fresh] = expire_pending_.emplace(lo, std::move(pe));
  if (fresh) {
    auto rearm = [this, lo](auto&& self) -> void {
      auto pit = expire_pending_.find(lo);
      if (pit == expire_pending_.end()) return;
      pit->second.timer = eng_.schedule_after(cfg_.retransmit_ns, [this, lo, self] {
        auto pit2 = expire_pending_.find(lo);
        if (pit2 == expire_pending_.end()) return;
        if (++pit2->second.retries > cfg_.max_retries) {
          expire_pending_.erase(pit2);
          return;
        }
        to_peer_.send(pit2->second.pkt);
        self(self);
      });
    };
    rearm(rearm);
  }

  ErrRecord rec;
  rec.err = EgpError::Expired;
  rec.create_id = create_id;
  rec.origin_id = origin;
  rec.has_range = true;
  rec.seq_low = lo;
  rec.seq_high = hi;
  rec.time = eng_.now();
  if (cb_.on_err) cb_.on_err(rec);
}

void Egp::handle_result(const MhpResult& res) {
  Attempt a;
  bool have_attempt = false;
  auto it = attempts_.find(res.window);
  if (it != attempts_.end()) {
    a = it->second;
    attempts_.erase(it);
    have_attempt = true;
  }
  RequestState* rs = find_request(res.aid);

  if (res.err != net::MhpError::None) {
    ++stats_.proto_errors;
    if (have_attempt) free_attempt(a);
    maybe_expire_gap(res.seq, rs);
    return;
  }
  if (res.outcome == 0) {
    if (have_attempt) free_attempt(a);
    maybe_expire_gap(res.seq, rs);
    return;
  }

  // Success: the station increments before sending, so in-order means
  // seq == expected.
  const std::uint16_t s = res.seq;
  if (seq_before(s, seq_expected_)) {
    ++stats_.stale_replies;
    if (have_attempt) free_attempt(a);
    return;
  }
  if (!rs || !have_attempt) {
    // request vanished meanwhile (timeout/completion/expire): free and make
    // sure nobody counts this pair
    if (have_attempt) free_attempt(a);
    const std::uint16_t lo = seq_expected_;
    seq_expected_ = static_cast<std::uint16_t>(s + 1);
    std::uint32_t origin = cfg_.node_id;
    std::uint16_t create_id = 0;
    if (rs) {
      origin = rs->origin_id;
      create_id = rs->create_id;
    } else if (auto cit = closed_.find(aid_key(res.aid)); cit != closed_.end()) {
      origin = cit->second.origin_id;
      create_id = cit->second.create_id;
    }
    send_expire_range(origin, create_id, lo, s);
    return;
  }
  if (s != seq_expected_) {
    // gap ahead: partially expire the request, covering this pair too
    const std::uint16_t lo = seq_expected_;
    seq_expected_ = static_cast<std::uint16_t>(s + 1);
    free_attempt(a);
    send_expire_range(rs->origin_id, rs->create_id, lo, s);
    return;
  }
  seq_expected_ = static_cast<std::uint16_t>(s + 1);
  handle_success(res, a, *rs);
}

void Egp::handle_success(const MhpResult& res, const Attempt& a, RequestState& rs) {
  QueueItem* item = dq_.find(res.aid);

  // Test rounds and M-type requests measure now (physically the readout
  // happened right after emission; sampling was deferred).
  if (a.test || !a.keep) {
    --inflight_m_;
    const des::SimTime measured_at = a.emit_time + hw_.device().readout_ns;
    int outcome = hw_.measure_electron(a.electron, a.basis, measured_at);
    if (a.test) {
      TestRoundRecord tr{res.seq, a.basis, outcome, res.outcome};
      if (cb_.on_test_round) cb_.on_test_round(tr);
      return;  // test pairs do not count toward the request
    }
    if (eng_.now() > rs.submit_time + rs.req.max_wait_ns && rs.req.max_wait_ns > 0) {
      close_request(rs, RequestClose::TimedOut);
      return;
    }
    OkRecord rec;
    rec.keep = false;
    rec.create_id = rs.create_id;
    rec.origin_id = rs.origin_id;
    rec.aid = res.aid;
    rec.seq = res.seq;
    rec.outcome = outcome;
    rec.basis = a.basis;
    rec.herald = res.outcome;
    rec.goodness = feu_.goodness(rs.alpha, false);
    rec.t_create = eng_.now();
    rec.t_goodness = eng_.now();
    rec.directionality = rs.mine;
    deliver_pair(rs, rec, 0, false);
    return;
  }

  // K type: corrections first
  if (res.outcome == 2) {
    if (rs.mine) {
      des::SimTime d = hw_.correct_electron_phase();
      electron_free_at_ = eng_.now() + d;
    } else {
      suspended_until_ =
          eng_.now() + hw_.device().electron_single.duration_ns + cfg_.ab_delay_ns;
      ++stats_.suspensions;
    }
  }

  if (rs.req.max_wait_ns > 0 && eng_.now() > rs.submit_time + rs.req.max_wait_ns) {
    free_attempt(a);
    close_request(rs, RequestClose::TimedOut);
    return;
  }

  const bool atomic_hold = rs.req.atomic && item && item->pairs_left > 1;
  const bool atomic_last_in_electron =
      rs.req.atomic && item && item->pairs_left == 1 && hw_.carbon_in_use();

  OkRecord rec;
  rec.keep = true;
  rec.create_id = rs.create_id;
  rec.origin_id = rs.origin_id;
  rec.aid = res.aid;
  rec.seq = res.seq;
  rec.herald = res.outcome;
  rec.goodness = feu_.goodness(rs.alpha, true);
  rec.directionality = rs.mine;

  if (atomic_last_in_electron) {
    // final atomic pair is delivered from the communication qubit
    QubitId q = a.electron;
    hw_.clear_electron();
    electron_free_at_ = std::max(electron_free_at_, eng_.now());
    rec.logical_qubit_id = 0;
    rec.qubit = q;
    rec.t_create = rec.t_goodness = eng_.now();
    deliver_pair(rs, rec, q, false);
    return;
  }

  // move to memory, deliver at completion; the poll gate resumes at a
  // shared instant so both nodes pick the next attempt cycle together
  const des::SimTime move_done = eng_.now() + hw_.device().move_to_memory_ns;
  hw_.move_to_memory(move_done);
  const des::SimTime shared_resume =
      reply_deadline(0, a.emit_time) + hw_.device().move_to_memory_ns;
  electron_free_at_ = std::max(electron_free_at_, shared_resume);
  advertise_memory();
  const AbsQueueId aid = res.aid;
  const std::uint16_t seq = res.seq;
  eng_.schedule_at(move_done, [this, aid, seq, rec, atomic_hold]() mutable {
    RequestState* rs2 = find_request(aid);
    if (!rs2) {
      // request died while moving; the memory half is released
      if (hw_.carbon_in_use()) hw_.discard_carbon();
      advertise_memory();
      return;
    }
    QubitId q = hw_.carbon();
    rec.logical_qubit_id = 1;
    rec.qubit = q;
    rec.t_create = rec.t_goodness = eng_.now();
    deliver_pair(*rs2, rec, q, atomic_hold);
    (void)seq;
  });
}

void Egp::deliver_pair(RequestState& rs, OkRecord rec, QubitId qubit, bool hold_for_atomic) {
  QueueItem* item = dq_.find(rs.aid);
  if (item && item->pairs_left > 0) --item->pairs_left;
  rs.delivered_seqs.insert(rec.seq);

  if (hold_for_atomic) {
    rs.held[rec.seq] = qubit;
    rs.buffered.push_back(rec);
    // the storage qubit stays occupied; nothing is released yet
    return;
  }

  if (rec.keep && qubit != 0) {
    // hand the qubit upward; the slot frees for the next pair
    if (hw_.carbon_in_use() && hw_.carbon() == qubit) {
      hw_.release_carbon();
      advertise_memory();
    }
  }

  const bool batch = rs.mine && !rs.req.consecutive;
  if (batch) {
    rs.buffered.push_back(rec);
  } else if (cb_.on_ok) {
    cb_.on_ok(rec);
  }
  complete_if_done(rs);
}

void Egp::complete_if_done(RequestState& rs) {
  QueueItem* item = dq_.find(rs.aid);
  if (item && item->pairs_left > 0) return;

  // atomic holds (and any batched records) flush on completion
  for (auto& [seq, q] : rs.held) {
    if (hw_.carbon_in_use() && hw_.carbon() == q) {
      hw_.release_carbon();
      advertise_memory();
    }
  }
  rs.held.clear();
  if (cb_.on_ok) {
    for (OkRecord& r : rs.buffered) cb_.on_ok(r);
  }
  rs.buffered.clear();
  close_request(rs, RequestClose::Completed);
}

void Egp::close_request(RequestState& rs, RequestClose why) {
  const std::uint64_t key = aid_key(rs.aid);
  if (why == RequestClose::TimedOut && rs.mine) {
    err_upward(EgpError::Timeout, rs.create_id, rs.origin_id);
  }
  if (cb_.on_request_closed) {
    RequestKind kind = !rs.req.type_k ? RequestKind::MD
                       : rs.req.priority == 1 ? RequestKind::NL
                                              : RequestKind::CK;
    cb_.on_request_closed(rs.aid, kind, rs.origin_id, why, rs.submit_time);
  }
  // drop any atomic holds on abnormal closure
  for (auto& [seq, q] : rs.held) {
    if (hw_.carbon_in_use() && hw_.carbon() == q) hw_.discard_carbon();
    else if (reg_.exists(q)) reg_.remove(q);
  }
  rs.held.clear();
  dq_.remove(rs.aid);

  closed_[key] = rs;
  closed_order_.push_back(key);
  while (closed_order_.size() > kClosedArchiveCap) {
    closed_.erase(closed_order_.front());
    closed_order_.pop_front();
  }
  requests_.erase(key);
  advertise_memory();
}

void Egp::advertise_memory() {
  const int storage = hw_.carbon_in_use() ? 0 : 1;
  const int comm = hw_.electron_in_use() ? 0 : 1;
  net::MemAdvertPacket p;
  p.ack = false;
  p.comm = static_cast<std::uint8_t>(comm);
  p.storage = static_cast<std::uint8_t>(storage);
  to_peer_.send(p);
  if (!mem_ack_pending_) {
    mem_ack_pending_ = true;
    mem_retries_ = 0;
    auto rearm = [this](auto&& self) -> void {
      mem_timer_ = eng_.schedule_after(cfg_.retransmit_ns, [this, self] {
        if (!mem_ack_pending_) return;
        if (++mem_retries_ > cfg_.max_retries) {
          mem_ack_pending_ = false;
          return;
        }
        net::MemAdvertPacket again;
        again.ack = false;
        again.comm = hw_.electron_in_use() ? 0 : 1;
        again.storage = hw_.carbon_in_use() ? 0 : 1;
        to_peer_.send(again);
        self(self);
      });
    };
    rearm(rearm);
  }
}

void Egp::on_mem_packet(const net::MemAdvertPacket& pkt) {
  if (pkt.ack) {
    peer_comm_free_ = pkt.comm;
    peer_storage_free_ = pkt.storage;
    mem_ack_pending_ = false;
    eng_.cancel(mem_timer_);
    return;
  }
  peer_comm_free_ = pkt.comm;
  peer_storage_free_ = pkt.storage;
  net::MemAdvertPacket ack;
  ack.ack = true;
  ack.comm = hw_.electron_in_use() ? 0 : 1;
  ack.storage = hw_.carbon_in_use() ? 0 : 1;
  to_peer_.send(ack);
}

void Egp::revoke_range(std::uint32_t origin, std::uint16_t create_id, std::uint16_t lo,
                       std::uint16_t hi) {
  bool archived = false;
  RequestState* rs = find_by_origin(origin, create_id, &archived);
  if (!rs) return;
  std::vector<std::uint16_t> revoked;
  for (std::uint16_t seq : rs->delivered_seqs) {
    if (!seq_before(seq, lo) && !seq_before(hi, seq)) revoked.push_back(seq);
  }
  for (std::uint16_t seq : revoked) {
    rs->delivered_seqs.erase(seq);
    ++stats_.pairs_revoked;
    auto held = rs->held.find(seq);
    if (held != rs->held.end()) {
      if (hw_.carbon_in_use() && hw_.carbon() == held->second) hw_.discard_carbon();
      else if (reg_.exists(held->second)) reg_.remove(held->second);
      rs->held.erase(held);
    }
    if (cb_.on_pair_revoked) cb_.on_pair_revoked(origin, create_id, seq);
    ErrRecord rec;
    rec.err = EgpError::Expired;
    rec.create_id = create_id;
    rec.origin_id = origin;
    rec.has_range = true;
    rec.seq_low = rec.seq_high = seq;
    rec.time = eng_.now();
    if (cb_.on_err) cb_.on_err(rec);
  }
  if (revoked.empty()) return;
  if (archived) {
    if (dq_.reopen(rs->aid, static_cast<std::uint16_t>(revoked.size()))) {
      requests_[aid_key(rs->aid)] = *rs;
      closed_.erase(aid_key(rs->aid));
    }
  } else if (QueueItem* item = dq_.find(rs->aid)) {
    item->pairs_left = static_cast<std::uint16_t>(
        std::min<std::uint32_t>(item->num_pairs, item->pairs_left + revoked.size()));
  }
}

void Egp::on_err_packet(const net::ErrPacket& pkt) {
  if (pkt.err != EgpError::Expired || !pkt.seq_range) return;
  ++stats_.expires_received;
  revoke_range(pkt.origin_id, pkt.create_id, pkt.seq_low, pkt.seq_high);
  if (!seq_before(pkt.seq_high, seq_expected_)) {
    seq_expected_ = static_cast<std::uint16_t>(pkt.seq_high + 1);
  }
  net::ExpireAckPacket ack;
  ack.seq = seq_expected_;
  to_peer_.send(ack);
}

void Egp::on_expire_packet(const net::ExpirePacket& pkt) {
  ++stats_.expires_received;
  if (RequestState* rs = find_request(pkt.aid)) {
    if (rs->origin_id == pkt.origin_id && rs->create_id == pkt.create_id) {
      close_request(*rs, RequestClose::Expired);
    }
  }
  if (!seq_before(pkt.seq, seq_expected_) && pkt.seq != seq_expected_) {
    seq_expected_ = pkt.seq;
  }
  net::ExpireAckPacket ack;
  ack.aid = pkt.aid;
  ack.seq = seq_expected_;
  to_peer_.send(ack);
}

void Egp::on_expire_ack(const net::ExpireAckPacket& pkt) {
  std::vector<std::uint16_t> done;
  for (auto& [lo, pe] : expire_pending_) {
    if (seq_before(pe.pkt.seq_high, pkt.seq)) done.push_back(lo);
  }
  for (std::uint16_t lo : done) {
    eng_.cancel(expire_pending_[lo].timer);
    expire_pending_.erase(lo);
  }
  auto rit = request_expire_pending_.find(aid_key(pkt.aid));
  if (rit != request_expire_pending_.end()) {
    eng_.cancel(rit->second.timer);
    request_expire_pending_.erase(rit);
  }
  if (!seq_before(pkt.seq, seq_expected_) && pkt.seq != seq_expected_) {
    seq_expected_ = pkt.seq;
  }
}

void Egp::on_peer_packet(const net::WirePacket& pkt) {
  if (const auto* d = std::get_if<net::DqpPacket>(&pkt)) {
    dq_.on_packet(*d);
  } else if (const auto* e = std::get_if<net::ErrPacket>(&pkt)) {
    on_err_packet(*e);
  } else if (const auto* x = std::get_if<net::ExpirePacket>(&pkt)) {
    on_expire_packet(*x);
  } else if (const auto* a = std::get_if<net::ExpireAckPacket>(&pkt)) {
    on_expire_ack(*a);
  } else if (const auto* m = std::get_if<net::MemAdvertPacket>(&pkt)) {
    on_mem_packet(*m);
  }
}

}  // namespace qlink::egp
