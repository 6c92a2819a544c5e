#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>

#include "qlink/des/engine.hpp"
#include "qlink/net/channel.hpp"
#include "qlink/phys/heralding.hpp"
#include "qlink/phys/node.hpp"
#include "qlink/qstate/dm.hpp"

namespace qlink::mhp {

/// Per-request-type attempt timing. The cycle period is shared by both
/// request types; K attempts additionally wait for the midpoint reply before
/// the communication qubit frees up.
struct MhpTiming {
  des::SimTime cycle_ns = 10'120;
  des::SimTime max_arm_delay_ns = 0;  // photon arrival alignment offset base

  std::uint64_t window_of(des::SimTime t) const {
    return static_cast<std::uint64_t>(t / cycle_ns);
  }
  des::SimTime window_close(std::uint64_t w) const {
    return static_cast<des::SimTime>(w + 1) * cycle_ns;
  }
};

/// Answer of the link layer to the per-cycle poll.
struct PollAnswer {
  bool generate = false;
  net::AbsQueueId aid;
  double alpha = 0.0;
  bool keep = false;        // store the pair (K); false measures immediately
  bool test_round = false;  // measure in `basis` regardless of request type
  qstate::Basis basis = qstate::Basis::Z;
  std::uint16_t pseq = 0;
};

/// Result forwarded from the MHP to the link layer after a REPLY (or a local
/// failure).
struct MhpResult {
  int outcome = 0;  // r
  std::uint16_t seq = 0;
  net::AbsQueueId aid;
  net::MhpError err = net::MhpError::None;
  net::AbsQueueId aid_peer;
  std::uint64_t window = 0;  // derived from the reply arrival instant
};

/// Interface the MHP polls each cycle; implemented by the EGP.
class EgpPort {
 public:
  virtual ~EgpPort() = default;
  virtual PollAnswer poll(std::uint64_t cycle) = 0;
  /// Reports the hardware attempt issued for this cycle's poll answer.
  virtual void attempt_started(std::uint64_t window, const PollAnswer& ans,
                               phys::QubitId electron, des::SimTime emit_time) = 0;
  /// Local generation failure (no GEN sent).
  virtual void attempt_failed_locally(const PollAnswer& ans) = 0;
  virtual void handle_result(const MhpResult& res) = 0;
};

/// Midpoint heralding station: buffers GEN messages and photons per
/// detection window, validates them, performs the beam-splitter measurement,
/// and replies to both nodes. seq increments only on heralded success.
class Midpoint {
 public:
  Midpoint(MhpTiming timing, phys::EmissionConfig optics, phys::StateRegistry& reg,
           des::Engine& eng, std::mt19937_64& rng, des::TraceLog* trace)
      : timing_(timing), eng_(eng), trace_(trace), detector_(optics, reg, rng), reg_(reg) {}

  void set_channels(net::SimChannel* to_a, net::SimChannel* to_b) {
    to_node_[0] = to_a;
    to_node_[1] = to_b;
  }

  void gen_arrival(int node, const net::GenPacket& gen);
  void photon_arrival(int node, phys::QubitId photon);

  std::uint16_t seq() const { return seq_; }
  std::uint64_t windows_processed() const { return processed_; }
  std::uint64_t successes() const { return successes_; }

  /// Time from last arrival to the REPLY leaving: the detection window plus
  /// station electronics.
  des::SimTime detection_latency_ns() const {
    return static_cast<des::SimTime>(detector_.station().detection_window_ns) + 100;
  }

  /// Success log for post-run consistency audits: (seq, window).
  const std::vector<std::pair<std::uint16_t, std::uint64_t>>& success_log() const {
    return success_log_;
  }

 private:
  struct Window {
    std::array<std::optional<net::GenPacket>, 2> gen;
    std::array<std::optional<phys::QubitId>, 2> photon;
    bool scheduled = false;
  };

  void touch_window(std::uint64_t w);
  void process_window(std::uint64_t w);
  void reply_both(const Window& win, net::ReplyOutcome ot);
  void discard_photons(Window& win);

  MhpTiming timing_;
  des::Engine& eng_;
  des::TraceLog* trace_;
  phys::MidpointDetector detector_;
  phys::StateRegistry& reg_;
  std::array<net::SimChannel*, 2> to_node_{};
  std::map<std::uint64_t, Window> windows_;
  std::uint64_t last_processed_window_ = 0;
  bool any_processed_ = false;
  std::uint16_t seq_ = 0;
  std::uint64_t processed_ = 0;
  std::uint64_t successes_ = 0;
  std::vector<std::pair<std::uint16_t, std::uint64_t>> success_log_;
};

/// Node-side MHP: stateless per cycle. Polls the EGP, triggers the hardware,
/// sends GEN timed to the photon emission, and forwards REPLYs upward.
class NodeMhp {
 public:
  NodeMhp(int node_index, MhpTiming timing, phys::NvNode& hw, Midpoint& station,
          net::SimChannel& gen_channel, EgpPort& egp, des::Engine& eng, std::mt19937_64& rng,
          des::TraceLog* trace)
      : node_(node_index),
        timing_(timing),
        hw_(hw),
        station_(station),
        gen_channel_(gen_channel),
        egp_(egp),
        eng_(eng),
        rng_(rng),
        trace_(trace) {}

  /// Probability that the local pulse sequence fails (fault injection).
  void set_gen_fail_prob(double p) { gen_fail_prob_ = p; }

  /// Executes one MHP cycle; the runner schedules this at every cycle start.
  void on_cycle(std::uint64_t cycle);

  /// REPLY delivery from the station.
  void on_reply(const net::ReplyPacket& reply);

  des::SimTime arm_delay_ns() const {
    return net::propagation_delay_ns(hw_.arm_km());
  }
  /// Photons from both nodes must reach the station simultaneously; the
  /// shorter arm delays its trigger by the difference.
  des::SimTime trigger_offset_ns() const { return timing_.max_arm_delay_ns - arm_delay_ns(); }

  std::uint64_t attempts() const { return attempts_; }

 private:
  int node_;
  MhpTiming timing_;
  phys::NvNode& hw_;
  Midpoint& station_;
  net::SimChannel& gen_channel_;
  EgpPort& egp_;
  des::Engine& eng_;
  std::mt19937_64& rng_;
  des::TraceLog* trace_;
  double gen_fail_prob_ = 0.0;
  std::uint64_t attempts_ = 0;
};

}  // namespace qlink::mhp
