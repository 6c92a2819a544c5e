#include "qlink/mhp/mhp.hpp"

namespace qlink::mhp {

using net::GenPacket;
using net::ReplyOutcome;
using net::ReplyPacket;

void Midpoint::touch_window(std::uint64_t w) {
  Window& win = windows_[w];
  if (!win.scheduled) {
    win.scheduled = true;
    eng_.schedule_at(timing_.window_close(w), [this, w] { process_window(w); });
  }
  // Complete windows resolve as soon as the detection window has elapsed;
  // only one-sided ones must wait for the close to be diagnosed.
  if (win.gen[0] && win.gen[1] && win.photon[0] && win.photon[1]) {
    eng_.schedule_after(detection_latency_ns(), [this, w] { process_window(w); });
  }
}

void Midpoint::gen_arrival(int node, const GenPacket& gen) {
  const std::uint64_t w = timing_.window_of(eng_.now());
  if (any_processed_ && w <= last_processed_window_) {
    // Late frame (jitter): its window already closed.
    if (to_node_[node]) {
      ReplyPacket rep;
      rep.ot = ReplyOutcome::TimeMismatch;
      rep.seq = seq_;
      rep.aid = gen.aid;
      to_node_[node]->send(rep);
    }
    return;
  }
  windows_[w].gen[node] = gen;
  touch_window(w);
}

void Midpoint::photon_arrival(int node, phys::QubitId photon) {
  const std::uint64_t w = timing_.window_of(eng_.now());
  if (any_processed_ && w <= last_processed_window_) {
    reg_.remove(photon);
    return;
  }
  windows_[w].photon[node] = photon;
  touch_window(w);
}

void Midpoint::discard_photons(Window& win) {
  for (auto& p : win.photon) {
    if (p) {
      reg_.remove(*p);
      p.reset();
    }
  }
}

void Midpoint::reply_both(const Window& win, ReplyOutcome ot) {
  for (int n = 0; n < 2; ++n) {
    if (!win.gen[n] || !to_node_[n]) continue;
    ReplyPacket rep;
    rep.ot = ot;
    rep.seq = seq_;
    rep.aid = win.gen[n]->aid;
    if (win.gen[1 - n]) rep.aid_peer = win.gen[1 - n]->aid;
    to_node_[n]->send(rep);
  }
}

void Midpoint::process_window(std::uint64_t w) {
  auto it = windows_.find(w);
  if (it == windows_.end()) return;
  Window win = std::move(it->second);
  windows_.erase(it);
  last_processed_window_ = w;
  any_processed_ = true;
  ++processed_;

  const bool has_a = win.gen[0].has_value();
  const bool has_b = win.gen[1].has_value();
  if (!has_a && !has_b) {
    discard_photons(win);
    return;
  }
  if (has_a != has_b) {
    // One-sided: the peer field stays the zero string.
    discard_photons(win);
    reply_both(win, ReplyOutcome::NoMessageOther);
    return;
  }
  if (!(win.gen[0]->aid == win.gen[1]->aid)) {
    discard_photons(win);
    reply_both(win, ReplyOutcome::QueueMismatch);
    return;
  }
  if (!win.photon[0] || !win.photon[1]) {
    throw std::logic_error("midpoint: GEN without accompanying photon");
  }

  // Free decoherence of the electrons during the photon flight.
  reg_.advance(reg_.partner(*win.photon[0]), eng_.now());
  reg_.advance(reg_.partner(*win.photon[1]), eng_.now());
  auto res = detector_.detect(*win.photon[0], *win.photon[1]);
  if (res.r != 0) {
    seq_ = static_cast<std::uint16_t>(seq_ + 1);  // wraps mod 2^16
    ++successes_;
    success_log_.emplace_back(seq_, w);
    if (trace_) trace_->record(eng_.now(), "station", "HERALD", res.r == 1 ? "psi+" : "psi-");
  }
  reply_both(win, net::reply_outcome_from_r(res.r));
}

void NodeMhp::on_cycle(std::uint64_t cycle) {
  PollAnswer ans = egp_.poll(cycle);
  if (!ans.generate) return;

  const des::SimTime emit_time = eng_.now() + hw_.device().emission_prep_ns + trigger_offset_ns();
  eng_.schedule_at(emit_time, [this, ans] {
    if (gen_fail_prob_ > 0.0 && des::bernoulli(rng_, gen_fail_prob_)) {
      egp_.attempt_failed_locally(ans);
      return;
    }
    ++attempts_;
    auto emission = hw_.attempt_emission(ans.alpha);
    const std::uint64_t window = timing_.window_of(eng_.now() + arm_delay_ns());
    egp_.attempt_started(window, ans, emission.electron, eng_.now());
    // Photon and GEN co-propagate down the arm.
    GenPacket gen;
    gen.aid = ans.aid;
    gen_channel_.send(gen);
    eng_.schedule_after(arm_delay_ns(),
                        [this, photon = emission.photon] { station_.photon_arrival(node_, photon); });
  });
}

void NodeMhp::on_reply(const ReplyPacket& reply) {
  MhpResult res;
  res.outcome = net::reply_outcome_r(reply.ot);
  res.seq = reply.seq;
  res.aid = reply.aid;
  res.aid_peer = reply.aid_peer;
  switch (reply.ot) {
    case ReplyOutcome::QueueMismatch: res.err = net::MhpError::QueueMismatch; break;
    case ReplyOutcome::TimeMismatch: res.err = net::MhpError::TimeMismatch; break;
    case ReplyOutcome::NoMessageOther: res.err = net::MhpError::NoMessageOther; break;
    default: res.err = net::MhpError::None; break;
  }
  // Complete windows are answered `detection_latency` after the photons
  // arrive, one-sided ones at the window close; either way subtracting the
  // return delay and latency lands inside the originating window
  // (physical-layer timestamping).
  res.window = timing_.window_of(eng_.now() - arm_delay_ns() - station_.detection_latency_ns());
  egp_.handle_result(res);
}

}  // namespace qlink::mhp
