#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "qlink/des/engine.hpp"
#include "qlink/des/rng.hpp"
#include "qlink/des/trace.hpp"
#include "qlink/net/codec.hpp"

namespace qlink::net {

/// Speed of light in fiber, km/s.
inline constexpr double kFiberLightSpeedKmPerS = 206753.0;

inline des::SimTime propagation_delay_ns(double length_km) {
  return static_cast<des::SimTime>(std::llround(length_km / kFiberLightSpeedKmPerS * 1e9));
}

struct ChannelConfig {
  double length_km = 0.0;
  double p_loss = 0.0;
  des::SimTime extra_delay_ns = 0;

  des::SimTime delay_ns() const { return propagation_delay_ns(length_km) + extra_delay_ns; }
  void validate() const {
    if (length_km < 0 || p_loss < 0.0 || p_loss > 1.0 || delay_ns() < 0) {
      throw std::invalid_argument("channel: bad config");
    }
  }
};

/// Unidirectional classical channel with fixed propagation delay and
/// Bernoulli per-message loss. Fixed delay keeps delivery FIFO. Messages are
/// encoded at send and decoded at delivery, so the codec sits on the wire
/// path.
class SimChannel {
 public:
  using Receiver = std::function<void(const WirePacket&)>;

  SimChannel(std::string name, ChannelConfig cfg, des::Engine& eng, std::mt19937_64& loss_rng,
             des::TraceLog* trace)
      : name_(std::move(name)), cfg_(cfg), eng_(eng), rng_(loss_rng), trace_(trace) {
    cfg_.validate();
  }

  void set_receiver(Receiver r) { recv_ = std::move(r); }
  const std::string& name() const { return name_; }
  const ChannelConfig& config() const { return cfg_; }
  void set_loss(double p) { cfg_.p_loss = p; }

  std::uint64_t sent() const { return sent_; }
  std::uint64_t dropped() const { return dropped_; }

  void send(const WirePacket& pkt) {
    ++sent_;
    const FrameKind kind = frame_kind(pkt);
    Bytes bytes = encode(pkt);
    if (trace_) trace_->record(eng_.now(), name_, frame_name(kind), "send");
    if (des::bernoulli(rng_, cfg_.p_loss)) {
      ++dropped_;
      if (trace_) trace_->record(eng_.now(), name_, frame_name(kind), "drop");
      return;
    }
    eng_.schedule_after(cfg_.delay_ns(), [this, kind, bytes = std::move(bytes)]() {
      WirePacket decoded = decode(kind, bytes);
      if (trace_) trace_->record(eng_.now(), name_, frame_name(kind), "deliver");
      if (recv_) recv_(decoded);
    });
  }

 private:
  std::string name_;
  ChannelConfig cfg_;
  des::Engine& eng_;
  std::mt19937_64& rng_;
  des::TraceLog* trace_;
  Receiver recv_;
  std::uint64_t sent_ = 0;
  std::uint64_t dropped_ = 0;
};

}  // namespace qlink::net
