#include "qlink/dqp/dqp.hpp"

#include <algorithm>

namespace qlink::dqp {

using net::AbsQueueId;
using net::DqpFrameType;
using net::DqpPacket;

namespace {
constexpr std::size_t kArchiveCap = 64;
constexpr std::size_t kResponseCacheCap = 128;
}  // namespace

QueueItem DistributedQueue::item_from_packet(const DqpPacket& pkt, std::uint64_t abs_seq) const {
  QueueItem it;
  it.aid = AbsQueueId{pkt.aid.qid, static_cast<std::uint8_t>(abs_seq % kSeqModulus)};
  it.abs_seq = abs_seq;
  it.origin_is_master = pkt.master_req;
  it.create_id = pkt.create_id;
  it.purpose_id = pkt.purpose_id;
  it.num_pairs = pkt.num_pairs;
  it.min_fidelity = pkt.min_fidelity;
  it.priority = pkt.priority;
  it.store = pkt.store;
  it.atomic = pkt.atomic;
  it.measure = pkt.measure;
  it.schedule_cycle = pkt.schedule_cycle;
  it.timeout_cycle = pkt.timeout_cycle;
  it.initial_virtual_finish = pkt.initial_virtual_finish;
  it.est_cycles_per_pair = pkt.est_cycles_per_pair;
  it.pairs_left = pkt.num_pairs;
  return it;
}

DqpPacket DistributedQueue::packet_from_item(const QueueItem& it, DqpFrameType ft) const {
  DqpPacket pkt;
  pkt.ft = ft;
  pkt.aid = it.aid;
  pkt.master_req = it.origin_is_master;
  pkt.create_id = it.create_id;
  pkt.purpose_id = it.purpose_id;
  pkt.num_pairs = it.num_pairs;
  pkt.min_fidelity = it.min_fidelity;
  pkt.priority = it.priority;
  pkt.store = it.store;
  pkt.atomic = it.atomic;
  pkt.measure = it.measure;
  pkt.schedule_cycle = it.schedule_cycle;
  pkt.timeout_cycle = it.timeout_cycle;
  pkt.initial_virtual_finish = it.initial_virtual_finish;
  pkt.est_cycles_per_pair = it.est_cycles_per_pair;
  return pkt;
}

std::uint64_t DistributedQueue::unwrap(std::uint8_t queue, std::uint8_t qseq) const {
  const LocalQueue& q = queues_[queue];
  std::uint64_t highest = 0;
  bool any = false;
  if (!q.items.empty()) {
    highest = q.items.rbegin()->first;
    any = true;
  }
  if (!q.archive.empty()) {
    highest = std::max(highest, q.archive.rbegin()->first);
    any = true;
  }
  const std::uint64_t base = any ? highest + 1 : 0;
  const int diff =
      static_cast<int>((qseq - (base % kSeqModulus) + kSeqModulus + kSeqModulus / 2) %
                       kSeqModulus) -
      kSeqModulus / 2;
  const std::int64_t abs = static_cast<std::int64_t>(base) + diff;
  return abs < 0 ? 0 : static_cast<std::uint64_t>(abs);
}

void DistributedQueue::add(const AddRequest& req, AddCallback cb) {
  DqpPacket pkt;
  pkt.ft = DqpFrameType::Add;
  pkt.aid = AbsQueueId{req.queue, 0};
  pkt.master_req = cfg_.master;
  pkt.create_id = req.create_id;
  pkt.purpose_id = req.purpose_id;
  pkt.num_pairs = req.num_pairs;
  pkt.min_fidelity = req.min_fidelity;
  pkt.priority = req.priority;
  pkt.store = req.store;
  pkt.atomic = req.atomic;
  pkt.measure = req.measure;
  pkt.schedule_cycle = req.schedule_cycle;
  pkt.timeout_cycle = req.timeout_cycle;
  pkt.initial_virtual_finish = req.initial_virtual_finish;
  pkt.est_cycles_per_pair = req.est_cycles_per_pair;

  if (cfg_.master) {
    staged_master_.push_back(Staged{true, pkt, std::move(cb)});
  } else {
    staged_local_.push_back(Staged{false, pkt, std::move(cb)});
  }
  pump();
}

void DistributedQueue::send_with_retransmit(std::uint8_t cseq) {
  auto it = outstanding_.find(cseq);
  if (it == outstanding_.end()) return;
  it->second.timer = eng_.schedule_after(cfg_.retransmit_ns, [this, cseq] {
    auto oit = outstanding_.find(cseq);
    if (oit == outstanding_.end()) return;
    if (++oit->second.retries > cfg_.max_retries) {
      AddCallback cb = std::move(oit->second.cb);
      QueueItem orphan = item_from_packet(oit->second.pkt, unwrap(oit->second.pkt.aid.qid, 0));
      AbsQueueId aid = oit->second.pkt.aid;
      outstanding_.erase(oit);
      if (cb) cb(AddStatus::Timeout, aid);
      if (on_orphan_) on_orphan_(orphan);
      pump();
      return;
    }
    ++retransmissions_;
    if (trace_) trace_->record(eng_.now(), out_.name(), "DQP", "retransmit");
    out_.send(oit->second.pkt);
    send_with_retransmit(cseq);
  });
}

void DistributedQueue::pump() {
  if (!cfg_.master) {
    // the slave only paces its own submissions within the CSEQ window
    while (!staged_local_.empty() && outstanding_.size() < cfg_.inflight_window) {
      Staged s = std::move(staged_local_.front());
      staged_local_.pop_front();
      net::DqpPacket pkt = s.pkt;
      pkt.cseq = next_cseq_++;
      outstanding_[pkt.cseq] = Outstanding{pkt, std::move(s.cb), 0, {}};
      out_.send(pkt);
      send_with_retransmit(pkt.cseq);
    }
    return;
  }
  while (!staged_master_.empty() || !staged_slave_.empty()) {
    if (!staged_master_.empty() && staged_slave_.empty() &&
        outstanding_.size() >= cfg_.inflight_window) {
      return;  // wait for acknowledgements before granting more local adds
    }
    bool pick_master;
    if (staged_slave_.empty()) {
      pick_master = true;
    } else if (staged_master_.empty()) {
      pick_master = false;
    } else if (consecutive_master_ > 0) {
      pick_master = consecutive_master_ < cfg_.fairness_window;
    } else if (consecutive_slave_ > 0) {
      pick_master = consecutive_slave_ >= cfg_.fairness_window;
    } else {
      pick_master = true;
    }
    if (pick_master && outstanding_.size() >= cfg_.inflight_window) {
      if (staged_slave_.empty()) return;
      pick_master = false;
    }
    auto& src = pick_master ? staged_master_ : staged_slave_;
    if (pick_master) {
      ++consecutive_master_;
      consecutive_slave_ = 0;
    } else {
      ++consecutive_slave_;
      consecutive_master_ = 0;
    }
    Staged s = std::move(src.front());
    src.pop_front();
    grant(std::move(s));
  }
}

void DistributedQueue::grant(Staged&& s) {
  const std::uint8_t queue = s.pkt.aid.qid;
  LocalQueue& q = queues_[queue];

  if (s.from_master) {
    if (full(queue)) {
      if (s.cb) s.cb(AddStatus::Reject, s.pkt.aid);
      return;
    }
    const std::uint64_t abs = q.next_abs_seq++;
    DqpPacket pkt = s.pkt;
    pkt.aid.qseq = static_cast<std::uint8_t>(abs % kSeqModulus);
    pkt.cseq = next_cseq_++;
    outstanding_[pkt.cseq] = Outstanding{pkt, std::move(s.cb), 0, {}};
    out_.send(pkt);
    send_with_retransmit(pkt.cseq);
    return;
  }

  // Slave-origin ADD: the master has final say and replies with the
  // assigned sequence number.
  DqpPacket response = s.pkt;
  const bool admit = (!policy_ || policy_(item_from_packet(s.pkt, 0))) && !full(queue);
  if (!admit) {
    response.ft = DqpFrameType::Rej;
  } else {
    const std::uint64_t abs = q.next_abs_seq++;
    response.ft = DqpFrameType::Ack;
    response.aid.qseq = static_cast<std::uint8_t>(abs % kSeqModulus);
    commit(item_from_packet(response, abs));
  }
  response_cache_[s.pkt.cseq] = response;
  response_cache_order_.push_back(s.pkt.cseq);
  while (response_cache_order_.size() > kResponseCacheCap) {
    response_cache_.erase(response_cache_order_.front());
    response_cache_order_.pop_front();
  }
  out_.send(response);
}

void DistributedQueue::commit(QueueItem item) {
  queues_[item.aid.qid].items.emplace(item.abs_seq, item);
  if (on_commit_) on_commit_(item);
}

void DistributedQueue::master_handle_add(const DqpPacket& pkt) {
  auto cached = response_cache_.find(pkt.cseq);
  if (cached != response_cache_.end()) {
    out_.send(cached->second);  // duplicate: idempotent re-reply
    return;
  }
  staged_slave_.push_back(Staged{false, pkt, nullptr});
  pump();
}

void DistributedQueue::slave_handle_add(const DqpPacket& pkt) {
  auto cached = response_cache_.find(pkt.cseq);
  if (cached != response_cache_.end()) {
    out_.send(cached->second);
    return;
  }
  DqpPacket response = pkt;
  const std::uint64_t abs = unwrap(pkt.aid.qid, pkt.aid.qseq);
  const bool admit =
      (!policy_ || policy_(item_from_packet(pkt, abs))) && !full(pkt.aid.qid);
  if (!admit) {
    response.ft = DqpFrameType::Rej;
  } else {
    response.ft = DqpFrameType::Ack;
    commit(item_from_packet(pkt, abs));
  }
  response_cache_[pkt.cseq] = response;
  response_cache_order_.push_back(pkt.cseq);
  while (response_cache_order_.size() > kResponseCacheCap) {
    response_cache_.erase(response_cache_order_.front());
    response_cache_order_.pop_front();
  }
  out_.send(response);
}

void DistributedQueue::handle_ack_or_rej(const DqpPacket& pkt) {
  auto it = outstanding_.find(pkt.cseq);
  if (it == outstanding_.end()) return;  // duplicate response
  eng_.cancel(it->second.timer);
  AddCallback cb = std::move(it->second.cb);
  DqpPacket original = it->second.pkt;
  outstanding_.erase(it);

  if (pkt.ft == DqpFrameType::Rej) {
    if (cb) cb(AddStatus::Reject, pkt.aid);
    pump();
    return;
  }
  const std::uint64_t abs = unwrap(pkt.aid.qid, pkt.aid.qseq);
  DqpPacket committed = original;
  committed.aid = pkt.aid;
  commit(item_from_packet(committed, abs));
  if (cb) cb(AddStatus::Success, pkt.aid);
  pump();
}

void DistributedQueue::on_packet(const DqpPacket& pkt) {
  switch (pkt.ft) {
    case DqpFrameType::Add:
      if (cfg_.master) {
        master_handle_add(pkt);
      } else {
        slave_handle_add(pkt);
      }
      return;
    case DqpFrameType::Ack:
    case DqpFrameType::Rej:
      handle_ack_or_rej(pkt);
      return;
  }
}

std::size_t DistributedQueue::size(std::uint8_t queue) const { return queues_[queue].items.size(); }

const QueueItem* DistributedQueue::head(std::uint8_t queue) const {
  const auto& items = queues_[queue].items;
  return items.empty() ? nullptr : &items.begin()->second;
}

const QueueItem* DistributedQueue::head_ready(std::uint8_t queue, std::uint64_t cycle) const {
  for (const auto& [abs, item] : queues_[queue].items) {
    if (item.timeout_cycle != 0 && cycle >= item.timeout_cycle) continue;
    if (item.schedule_cycle > cycle) return nullptr;  // total order: later items wait
    if (item.pairs_left == 0) continue;
    return &item;
  }
  return nullptr;
}

const QueueItem* DistributedQueue::peek(AbsQueueId aid) const {
  const LocalQueue& q = queues_[aid.qid];
  for (const auto& [abs, item] : q.items) {
    if (item.aid == aid) return &item;
  }
  return nullptr;
}

QueueItem* DistributedQueue::find(AbsQueueId aid) {
  LocalQueue& q = queues_[aid.qid];
  for (auto& [abs, item] : q.items) {
    if (item.aid == aid) return &item;
  }
  return nullptr;
}

void DistributedQueue::remove(AbsQueueId aid) {
  LocalQueue& q = queues_[aid.qid];
  for (auto it = q.items.begin(); it != q.items.end(); ++it) {
    if (it->second.aid == aid) {
      q.archive.emplace(it->first, it->second);
      while (q.archive.size() > kArchiveCap) q.archive.erase(q.archive.begin());
      q.items.erase(it);
      return;
    }
  }
}

bool DistributedQueue::reopen(AbsQueueId aid, std::uint16_t pairs) {
  LocalQueue& q = queues_[aid.qid];
  for (auto it = q.archive.begin(); it != q.archive.end(); ++it) {
    if (it->second.aid == aid) {
      QueueItem item = it->second;
      item.pairs_left = pairs;
      item.done = false;
      q.archive.erase(it);
      q.items.emplace(item.abs_seq, item);
      return true;
    }
  }
  return false;
}

}  // namespace qlink::dqp
