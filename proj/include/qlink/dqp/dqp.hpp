#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>

#include "qlink/des/engine.hpp"
#include "qlink/net/channel.hpp"

namespace qlink::dqp {

inline constexpr int kQueueCount = 16;
inline constexpr std::size_t kQueueCapacity = 256;
inline constexpr int kSeqModulus = 256;

enum class AddStatus { Success, Timeout, Reject };

/// Request body replicated through the ADD handshake, plus local service
/// bookkeeping (pairs_left / done are not part of the replicated state).
struct QueueItem {
  net::AbsQueueId aid;
  std::uint64_t abs_seq = 0;  // unwrapped sequence; aid.qseq = abs_seq mod 256
  bool origin_is_master = false;
  std::uint16_t create_id = 0;
  std::uint16_t purpose_id = 0;
  std::uint16_t num_pairs = 1;
  double min_fidelity = 0.0;
  std::uint8_t priority = 0;
  bool store = false;
  bool atomic = false;
  bool measure = false;
  std::uint64_t schedule_cycle = 0;  // min_time, in MHP cycles
  std::uint64_t timeout_cycle = 0;   // 0 = none
  std::uint32_t initial_virtual_finish = 0;
  std::uint32_t est_cycles_per_pair = 1;

  std::uint16_t pairs_left = 1;
  bool done = false;
};

struct AddRequest {
  std::uint8_t queue = 0;
  std::uint16_t create_id = 0;
  std::uint16_t purpose_id = 0;
  std::uint16_t num_pairs = 1;
  double min_fidelity = 0.0;
  std::uint8_t priority = 0;
  bool store = false;
  bool atomic = false;
  bool measure = false;
  std::uint64_t schedule_cycle = 0;
  std::uint64_t timeout_cycle = 0;
  std::uint32_t initial_virtual_finish = 0;
  std::uint32_t est_cycles_per_pair = 1;
};

/// Policy hook: the remote node may refuse an ADD (purpose-ID rules).
using AdmissionPolicy = std::function<bool(const QueueItem&)>;

/// One replica of the distributed queue. The master (node A) is the sole
/// authority on sequence-number assignment; a two-way handshake with
/// retransmission keeps both replicas identical, and per-origin windows keep
/// the committed order fair.
class DistributedQueue {
 public:
  struct Config {
    bool master = false;
    des::SimTime retransmit_ns = 1'000'000;  // 2*RTT + one cycle, set by the runner
    int max_retries = 10;
    int fairness_window = 8;
    std::size_t inflight_window = 128;  // half the CSEQ space
  };

  using AddCallback = std::function<void(AddStatus, net::AbsQueueId)>;
  using CommitCallback = std::function<void(const QueueItem&)>;
  using OrphanCallback = std::function<void(const QueueItem&)>;

  DistributedQueue(Config cfg, des::Engine& eng, net::SimChannel& out, des::TraceLog* trace)
      : cfg_(cfg), eng_(eng), out_(out), trace_(trace) {}

  void set_admission_policy(AdmissionPolicy p) { policy_ = std::move(p); }
  /// Fires when an item becomes committed on this replica.
  void set_commit_callback(CommitCallback cb) { on_commit_ = std::move(cb); }
  /// Fires when the handshake gives up (item abandoned after max retries).
  void set_orphan_callback(OrphanCallback cb) { on_orphan_ = std::move(cb); }

  /// Starts the two-way handshake that places the request into both
  /// replicas. The callback reports commit, reject, or handshake timeout.
  void add(const AddRequest& req, AddCallback cb);

  void on_packet(const net::DqpPacket& pkt);

  // -- queue access (committed items only) --
  std::size_t size(std::uint8_t queue) const;
  bool full(std::uint8_t queue) const { return size(queue) >= kQueueCapacity; }
  const QueueItem* head_ready(std::uint8_t queue, std::uint64_t cycle) const;
  const QueueItem* peek(net::AbsQueueId aid) const;
  QueueItem* find(net::AbsQueueId aid);
  /// All committed items of one queue in sequence order.
  const std::map<std::uint64_t, QueueItem>& queue_items(std::uint8_t queue) const {
    return queues_[queue].items;
  }
  /// Head item by total order regardless of readiness.
  const QueueItem* head(std::uint8_t queue) const;

  void remove(net::AbsQueueId aid);
  /// Retained completed item brought back into service (EXPIRE recovery).
  bool reopen(net::AbsQueueId aid, std::uint16_t pairs);

  std::uint64_t retransmissions() const { return retransmissions_; }

 private:
  struct LocalQueue {
    std::map<std::uint64_t, QueueItem> items;  // committed, by abs_seq
    std::uint64_t next_abs_seq = 0;            // master only
    std::map<std::uint64_t, QueueItem> archive;  // recently completed
  };
  struct Outstanding {
    net::DqpPacket pkt;
    AddCallback cb;
    int retries = 0;
    des::EventHandle timer;
  };
  struct Staged {
    bool from_master;
    net::DqpPacket pkt;  // slave-origin ADD as received, or master's body
    AddCallback cb;      // master-origin only
  };

  void pump();
  void grant(Staged&& s);
  void send_with_retransmit(std::uint8_t cseq);
  void master_handle_add(const net::DqpPacket& pkt);
  void slave_handle_add(const net::DqpPacket& pkt);
  void handle_ack_or_rej(const net::DqpPacket& pkt);
  QueueItem item_from_packet(const net::DqpPacket& pkt, std::uint64_t abs_seq) const;
  net::DqpPacket packet_from_item(const QueueItem& it, net::DqpFrameType ft) const;
  std::uint64_t unwrap(std::uint8_t queue, std::uint8_t qseq) const;
  void commit(QueueItem item);

  Config cfg_;
  des::Engine& eng_;
  net::SimChannel& out_;
  des::TraceLog* trace_;
  AdmissionPolicy policy_;
  CommitCallback on_commit_;
  OrphanCallback on_orphan_;

  mutable std::array<LocalQueue, kQueueCount> queues_{};
  std::deque<Staged> staged_master_;
  std::deque<Staged> staged_slave_;
  std::deque<Staged> staged_local_;  // slave-side submission pacing
  int consecutive_master_ = 0;
  int consecutive_slave_ = 0;

  std::uint8_t next_cseq_ = 0;
  std::map<std::uint8_t, Outstanding> outstanding_;
  std::map<std::uint8_t, net::DqpPacket> response_cache_;  // peer cseq -> reply
  std::deque<std::uint8_t> response_cache_order_;
  std::uint64_t retransmissions_ = 0;
};

}  // namespace qlink::dqp
