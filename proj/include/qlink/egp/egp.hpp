#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "qlink/des/trace.hpp"
#include "qlink/dqp/dqp.hpp"
#include "qlink/egp/feu.hpp"
#include "qlink/mhp/mhp.hpp"
#include "qlink/net/channel.hpp"
#include "qlink/phys/node.hpp"

namespace qlink::egp {

enum class RequestKind { NL, CK, MD };

/// Northbound request (CREATE).
struct CreateRequest {
  bool type_k = true;
  std::uint16_t num_pairs = 1;
  bool atomic = false;
  bool consecutive = true;
  des::SimTime max_wait_ns = 0;  // 0 = unbounded
  std::uint16_t purpose_id = 0;
  std::uint8_t priority = 2;  // 1 NL (highest), 2 CK, 3 MD
  double min_fidelity = 0.5;
};

struct OkRecord {
  bool keep = true;
  std::uint16_t create_id = 0;
  std::uint32_t origin_id = 0;
  net::AbsQueueId aid;
  std::uint16_t seq = 0;  // entanglement id: (node A, node B, seq)
  int logical_qubit_id = 0;
  phys::QubitId qubit = 0;  // simulator handle of the delivered half (K)
  int outcome = 0;          // M
  int herald = 0;           // r: which Bell state the station announced
  qstate::Basis basis = qstate::Basis::Z;
  double goodness = 0.0;
  des::SimTime t_create = 0;
  des::SimTime t_goodness = 0;
  bool directionality = false;  // true when this node originated the request
};

struct ErrRecord {
  net::EgpError err = net::EgpError::Other;
  std::uint16_t create_id = 0;
  std::uint32_t origin_id = 0;
  bool has_range = false;
  std::uint16_t seq_low = 0;
  std::uint16_t seq_high = 0;
  des::SimTime time = 0;
};

struct TestRoundRecord {
  std::uint16_t seq = 0;
  qstate::Basis basis = qstate::Basis::Z;
  int outcome = 0;
  int herald = 0;  // r
};

struct SchedulerConfig {
  enum class Strategy { Fcfs, StrictWfq };
  Strategy strategy = Strategy::Fcfs;
  double weight_ck = 10.0;
  double weight_md = 1.0;
};

enum class RequestClose { Completed, TimedOut, Expired };

struct EgpConfig {
  int node_index = 0;  // 0 = A (queue master), 1 = B
  std::uint32_t node_id = 0;
  std::uint32_t peer_id = 1;
  SchedulerConfig sched;
  double test_fraction = 0.05;   // q
  std::size_t test_window = 2000;  // N
  int max_inflight_m = 16;
  mhp::MhpTiming timing;
  des::SimTime ab_delay_ns = 0;
  des::SimTime reply_slack_ns = 0;
  des::SimTime retransmit_ns = 1'000'000;
  int max_retries = 10;
  std::uint64_t shared_seed = 0;
};

/// Link-layer protocol instance at one node: CREATE lifecycle, deterministic
/// scheduling, qubit management, reply handling with sequence tracking and
/// EXPIRE recovery, flow control by memory advertisement, and test rounds.
class Egp final : public mhp::EgpPort {
 public:
  struct Callbacks {
    std::function<void(const OkRecord&)> on_ok;
    std::function<void(const ErrRecord&)> on_err;
    std::function<void(net::AbsQueueId, RequestKind, std::uint32_t origin, RequestClose,
                       des::SimTime submit_time)>
        on_request_closed;
    std::function<void(const TestRoundRecord&)> on_test_round;
    std::function<void(std::uint32_t origin, std::uint16_t create_id, std::uint16_t seq)>
        on_pair_revoked;
  };

  Egp(EgpConfig cfg, phys::NvNode& hw, phys::StateRegistry& reg, dqp::DistributedQueue& dq,
      FeuModel& feu, net::SimChannel& to_peer, des::Engine& eng, des::TraceLog* trace,
      Callbacks cb);

  // -- northbound --
  struct CreateOutcome {
    std::optional<std::uint16_t> create_id;
    std::optional<net::EgpError> error;
  };
  CreateOutcome create(const CreateRequest& req);

  // -- EgpPort (MHP-facing) --
  mhp::PollAnswer poll(std::uint64_t cycle) override;
  void attempt_started(std::uint64_t window, const mhp::PollAnswer& ans, phys::QubitId electron,
                       des::SimTime emit_time) override;
  void attempt_failed_locally(const mhp::PollAnswer& ans) override;
  void handle_result(const mhp::MhpResult& res) override;

  // -- peer link-layer messages --
  void on_peer_packet(const net::WirePacket& pkt);

  std::uint16_t seq_expected() const { return seq_expected_; }
  const mhp::PollAnswer& last_poll() const { return last_poll_; }
  std::size_t active_requests() const { return requests_.size() + pending_creates_.size(); }
  std::size_t attempts_in_flight() const { return attempts_.size(); }
  std::size_t queued_items() const {
    std::size_t n = 0;
    for (int q = 0; q < dqp::kQueueCount; ++q) n += dq_.size(static_cast<std::uint8_t>(q));
    return n;
  }
  /// Hash over the committed queue contents (aid, pairs_left); the two
  /// replicas' NEXT choices must agree whenever these hashes agree.
  std::uint64_t queue_fingerprint() const;

  /// Advertised free-memory view refresh (REQ(E)); fired automatically on
  /// occupancy changes.
  void advertise_memory();

  struct Stats {
    std::uint64_t polls = 0;
    std::uint64_t grants = 0;
    std::uint64_t out_of_mem = 0;
    std::uint64_t flow_blocked = 0;
    std::uint64_t reinits = 0;
    std::uint64_t gen_fails = 0;
    std::uint64_t stale_replies = 0;
    std::uint64_t proto_errors = 0;
    std::uint64_t expires_sent = 0;
    std::uint64_t expires_received = 0;
    std::uint64_t pairs_revoked = 0;
    std::uint64_t test_rounds = 0;
    std::uint64_t suspensions = 0;
  };
  const Stats& stats() const { return stats_; }
  FeuModel& feu() { return feu_; }

 private:
  struct RequestState {
    CreateRequest req;
    net::AbsQueueId aid;
    std::uint16_t create_id = 0;
    std::uint32_t origin_id = 0;
    bool mine = false;
    des::SimTime submit_time = 0;
    double alpha = 0.1;
    std::vector<OkRecord> buffered;          // non-consecutive origin batching
    std::set<std::uint16_t> delivered_seqs;  // for EXPIRE revocation
    std::map<std::uint16_t, phys::QubitId> held;  // atomic holds (seq -> qubit)
  };

  struct Attempt {
    net::AbsQueueId aid;
    phys::QubitId electron = 0;
    des::SimTime emit_time = 0;
    bool keep = false;
    bool test = false;
    qstate::Basis basis = qstate::Basis::Z;
  };

  struct PendingExpire {
    net::ErrPacket pkt;
    int retries = 0;
    des::EventHandle timer;
  };

  struct PendingRequestExpire {
    net::ExpirePacket pkt;
    int retries = 0;
    des::EventHandle timer;
  };

  static std::uint64_t aid_key(net::AbsQueueId aid) {
    return (static_cast<std::uint64_t>(aid.qid) << 8) | aid.qseq;
  }
  static bool seq_before(std::uint16_t a, std::uint16_t b) {
    return static_cast<std::uint16_t>(a - b) > 0x8000;
  }

  RequestState* find_request(net::AbsQueueId aid);
  RequestState* find_by_origin(std::uint32_t origin, std::uint16_t create_id, bool* archived);
  const dqp::QueueItem* scheduler_next(std::uint64_t cycle);
  void sweep_timeouts(std::uint64_t cycle);
  void on_committed(const dqp::QueueItem& item);
  void on_orphaned(const dqp::QueueItem& item);
  double alpha_for(const dqp::QueueItem& item);
  std::uint64_t expected_window(std::uint64_t cycle) const;
  des::SimTime reply_deadline(std::uint64_t window, des::SimTime emit_time) const;
  void free_attempt(const Attempt& a);
  void maybe_expire_gap(std::uint16_t station_seq, RequestState* rs);
  void send_expire_range(std::uint32_t origin, std::uint16_t create_id, std::uint16_t lo,
                         std::uint16_t hi);
  void deliver_pair(RequestState& rs, OkRecord rec, phys::QubitId qubit, bool hold_for_atomic);
  void complete_if_done(RequestState& rs);
  void close_request(RequestState& rs, RequestClose why);
  void handle_success(const mhp::MhpResult& res, const Attempt& a, RequestState& rs);
  void on_expire_packet(const net::ExpirePacket& pkt);
  void on_expire_ack(const net::ExpireAckPacket& pkt);
  void on_err_packet(const net::ErrPacket& pkt);
  void on_mem_packet(const net::MemAdvertPacket& pkt);
  void revoke_range(std::uint32_t origin, std::uint16_t create_id, std::uint16_t lo,
                    std::uint16_t hi);
  void err_upward(net::EgpError err, std::uint16_t create_id, std::uint32_t origin);

  EgpConfig cfg_;
  phys::NvNode& hw_;
  phys::StateRegistry& reg_;
  dqp::DistributedQueue& dq_;
  FeuModel& feu_;
  net::SimChannel& to_peer_;
  des::Engine& eng_;
  des::TraceLog* trace_;
  Callbacks cb_;

  std::uint16_t next_create_id_ = 1;
  std::map<std::uint16_t, std::pair<CreateRequest, des::SimTime>> pending_creates_;
  std::map<std::uint64_t, RequestState> requests_;
  std::map<std::uint64_t, RequestState> closed_;  // bounded archive for revocation
  std::deque<std::uint64_t> closed_order_;

  std::map<std::uint64_t, Attempt> attempts_;  // by detection window
  int inflight_m_ = 0;

  std::uint16_t seq_expected_ = 1;
  des::SimTime suspended_until_ = 0;
  des::SimTime electron_free_at_ = 0;
  bool pending_issue_ = false;

  int peer_storage_free_ = 1;
  int peer_comm_free_ = 1;
  bool mem_ack_pending_ = false;
  int mem_retries_ = 0;
  des::EventHandle mem_timer_;

  std::map<std::uint16_t, PendingExpire> expire_pending_;  // by seq_low
  std::map<std::uint64_t, PendingRequestExpire> request_expire_pending_;  // by aid key
  std::array<double, 4> last_vf_{};  // per queue class

  std::uint64_t sweep_counter_ = 0;
  std::uint64_t k_grid_ = 1;
  std::uint64_t reinit_period_cycles_ = 346;
  std::uint64_t reinit_cost_cycles_ = 33;
  mhp::PollAnswer last_poll_;
  Stats stats_;
};

}  // namespace qlink::egp
