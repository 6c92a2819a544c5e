#include <random>

#include "doctest.h"
#include "qlink/des/rng.hpp"
#include "qlink/net/codec.hpp"

using namespace qlink::net;

namespace {

std::mt19937_64 gen(42);

std::uint64_t bits(int n) { return gen() & ((n == 64) ? ~0ull : ((1ull << n) - 1)); }

double fraction16() { return static_cast<double>(bits(16)) / 65535.0; }
double fraction32() { return static_cast<double>(bits(32)) / 4294967295.0; }

AbsQueueId random_aid() {
  return AbsQueueId{static_cast<std::uint8_t>(bits(4)), static_cast<std::uint8_t>(bits(8))};
}

WirePacket random_packet(FrameKind kind) {
  switch (kind) {
    case FrameKind::Gen: {
      GenPacket p;
      p.aid = random_aid();
      return p;
    }
    case FrameKind::Reply: {
      ReplyPacket p;
      const ReplyOutcome kinds[] = {ReplyOutcome::Fail,          ReplyOutcome::QueueMismatch,
                                    ReplyOutcome::TimeMismatch,  ReplyOutcome::NoMessageOther,
                                    ReplyOutcome::SuccessPsiPlus, ReplyOutcome::SuccessPsiMinus};
      p.ot = kinds[bits(8) % 6];
      p.seq = static_cast<std::uint16_t>(bits(16));
      p.aid = random_aid();
      p.aid_peer = random_aid();
      return p;
    }
    case FrameKind::DqpAdd: {
      DqpPacket p;
      p.ft = static_cast<DqpFrameType>(bits(8) % 3);
      p.cseq = static_cast<std::uint8_t>(bits(8));
      p.aid = random_aid();
      p.schedule_cycle = bits(64);
      p.timeout_cycle = bits(64);
      p.min_fidelity = fraction32();
      p.purpose_id = static_cast<std::uint16_t>(bits(16));
      p.create_id = static_cast<std::uint16_t>(bits(16));
      p.num_pairs = static_cast<std::uint16_t>(bits(16));
      p.priority = static_cast<std::uint8_t>(bits(4));
      p.initial_virtual_finish = static_cast<std::uint32_t>(bits(32));
      p.est_cycles_per_pair = static_cast<std::uint32_t>(bits(32));
      p.store = bits(1);
      p.atomic = bits(1);
      p.measure = bits(1);
      p.master_req = bits(1);
      return p;
    }
    case FrameKind::Create: {
      CreatePacket p;
      p.remote_node_id = static_cast<std::uint32_t>(bits(32));
      p.min_fidelity = fraction16();
      p.max_time_s = static_cast<std::uint16_t>(bits(16));
      p.purpose_id = static_cast<std::uint16_t>(bits(16));
      p.number = static_cast<std::uint16_t>(bits(16));
      p.priority = static_cast<std::uint8_t>(bits(4));
      p.type_k = bits(1);
      p.atomic = bits(1);
      p.consecutive = bits(1);
      return p;
    }
    case FrameKind::Expire: {
      ExpirePacket p;
      p.aid = random_aid();
      p.origin_id = static_cast<std::uint32_t>(bits(32));
      p.create_id = static_cast<std::uint16_t>(bits(16));
      p.seq = static_cast<std::uint16_t>(bits(16));
      return p;
    }
    case FrameKind::ExpireAck: {
      ExpireAckPacket p;
      p.aid = random_aid();
      p.seq = static_cast<std::uint16_t>(bits(16));
      return p;
    }
    case FrameKind::MemAdvert: {
      MemAdvertPacket p;
      p.ack = bits(1);
      p.comm = static_cast<std::uint8_t>(bits(2));
      p.storage = static_cast<std::uint8_t>(bits(4));
      return p;
    }
    case FrameKind::OkKeep: {
      OkKeepPacket p;
      p.create_id = static_cast<std::uint16_t>(bits(16));
      p.logical_qubit_id = static_cast<std::uint8_t>(bits(4));
      p.directionality = bits(1);
      p.seq = static_cast<std::uint16_t>(bits(16));
      p.purpose_id = static_cast<std::uint16_t>(bits(16));
      p.remote_node_id = static_cast<std::uint32_t>(bits(32));
      p.goodness = fraction16();
      p.goodness_time = static_cast<std::uint16_t>(bits(16));
      return p;
    }
    case FrameKind::OkMeasure: {
      OkMeasurePacket p;
      p.create_id = static_cast<std::uint16_t>(bits(16));
      p.outcome = bits(1);
      p.basis = static_cast<std::uint8_t>(bits(3));
      p.directionality = bits(1);
      p.seq = static_cast<std::uint16_t>(bits(16));
      p.purpose_id = static_cast<std::uint16_t>(bits(16));
      p.remote_node_id = static_cast<std::uint32_t>(bits(32));
      p.goodness = fraction16();
      return p;
    }
    case FrameKind::Err: {
      ErrPacket p;
      const EgpError errs[] = {EgpError::Unsupported, EgpError::MemExceeded, EgpError::OutOfMem,
                               EgpError::Denied,      EgpError::Timeout,     EgpError::Rejected,
                               EgpError::NoTime,      EgpError::Expired,     EgpError::Other};
      p.err = errs[bits(8) % 9];
      p.create_id = static_cast<std::uint16_t>(bits(16));
      p.seq_range = bits(1);
      p.seq_low = static_cast<std::uint16_t>(bits(16));
      p.seq_high = static_cast<std::uint16_t>(bits(16));
      p.origin_id = static_cast<std::uint32_t>(bits(32));
      return p;
    }
    case FrameKind::Poll: {
      PollPacket p;
      p.generate = bits(1);
      p.aid = random_aid();
      p.pseq = static_cast<std::uint16_t>(bits(10));
      p.params = static_cast<std::uint8_t>(bits(8));
      p.crc = static_cast<std::uint32_t>(bits(32));
      return p;
    }
    case FrameKind::Result: {
      ResultPacket p;
      p.outcome = static_cast<std::uint8_t>(bits(8) % 3);
      p.seq = static_cast<std::uint16_t>(bits(16));
      p.aid = random_aid();
      const MhpError errs[] = {MhpError::None, MhpError::QueueMismatch, MhpError::TimeMismatch,
                               MhpError::NoMessageOther, MhpError::GenFail};
      p.err = errs[bits(8) % 5];
      p.aid_peer = random_aid();
      p.crc = static_cast<std::uint32_t>(bits(32));
      return p;
    }
  }
  throw std::logic_error("unreachable");
}

const FrameKind kAllKinds[] = {FrameKind::Gen,       FrameKind::Reply,    FrameKind::DqpAdd,
                               FrameKind::Create,    FrameKind::Expire,   FrameKind::ExpireAck,
                               FrameKind::MemAdvert, FrameKind::OkKeep,   FrameKind::OkMeasure,
                               FrameKind::Err,       FrameKind::Poll,     FrameKind::Result};

}  // namespace

TEST_CASE("frame sizes follow the wire figures") {
  CHECK(encode(random_packet(FrameKind::Gen)).size() == 4);
  CHECK(encode(random_packet(FrameKind::Reply)).size() == 8);
  CHECK(encode(random_packet(FrameKind::DqpAdd)).size() == 44);
  CHECK(encode(random_packet(FrameKind::Create)).size() == 16);
  CHECK(encode(random_packet(FrameKind::Expire)).size() == 12);
  CHECK(encode(random_packet(FrameKind::ExpireAck)).size() == 8);
  CHECK(encode(random_packet(FrameKind::MemAdvert)).size() == 4);
  CHECK(encode(random_packet(FrameKind::OkKeep)).size() == 16);
  CHECK(encode(random_packet(FrameKind::OkMeasure)).size() == 16);
  CHECK(encode(random_packet(FrameKind::Err)).size() == 12);
  CHECK(encode(random_packet(FrameKind::Poll)).size() == 10);
  CHECK(encode(random_packet(FrameKind::Result)).size() == 12);
}

TEST_CASE("GEN round-trip") {
  GenPacket p;
  p.aid = AbsQueueId{3, 17};
  Bytes b = encode(p);
  WirePacket back = decode(FrameKind::Gen, b);
  CHECK(std::get<GenPacket>(back) == p);
}

TEST_CASE("REPLY outcome field decodes the error class values") {
  ReplyPacket p;
  p.ot = ReplyOutcome::QueueMismatch;  // wire value 001
  p.seq = 9;
  Bytes b = encode(p);
  // the OT nibble sits right after the 12-bit header
  CHECK((b[1] & 0xF) == 0b0001);
  auto back = std::get<ReplyPacket>(decode(FrameKind::Reply, b));
  CHECK(back.ot == ReplyOutcome::QueueMismatch);
  CHECK(reply_outcome_is_error(back.ot));
  CHECK(reply_outcome_r(back.ot) == 0);

  p.ot = ReplyOutcome::SuccessPsiMinus;
  back = std::get<ReplyPacket>(decode(FrameKind::Reply, encode(p)));
  CHECK(reply_outcome_r(back.ot) == 2);
  CHECK(!reply_outcome_is_error(back.ot));
}

TEST_CASE("field overflow is rejected") {
  BitWriter w;
  CHECK_THROWS_AS(w.put(256, 8), CodecError);  // QSEQ > 255
  CHECK_THROWS_AS(w.put(16, 4), CodecError);
  CHECK_NOTHROW(w.put(255, 8));
}

TEST_CASE("reserved bits are zero on encode") {
  GenPacket p;
  p.aid = AbsQueueId{0xF, 0xFF};
  Bytes b = encode(p);
  CHECK(b[3] == 0);  // trailing reserved byte
}

TEST_CASE("headered frames self-describe") {
  ExpirePacket p;
  p.aid = AbsQueueId{2, 7};
  p.origin_id = 77;
  p.create_id = 5;
  p.seq = 1000;
  Bytes b = encode(p);
  WirePacket back = decode_headered(b);
  CHECK(std::get<ExpirePacket>(back) == p);
}

TEST_CASE("round-trip fuzz across every variant") {
  for (FrameKind kind : kAllKinds) {
    for (int i = 0; i < 2000; ++i) {
      WirePacket p = random_packet(kind);
      Bytes b = encode(p);
      WirePacket back = decode(kind, b);
      CHECK(p == back);
    }
  }
}

TEST_CASE("truncated buffers raise structured errors, never crash") {
  for (FrameKind kind : kAllKinds) {
    WirePacket p = random_packet(kind);
    Bytes b = encode(p);
    for (std::size_t cut = 0; cut < b.size(); ++cut) {
      Bytes partial(b.begin(), b.begin() + cut);
      CHECK_THROWS_AS((void)decode(kind, partial), CodecError);
    }
  }
}

TEST_CASE("arbitrary bytes never crash the decoder") {
  std::mt19937_64 g(777);
  for (int i = 0; i < 20000; ++i) {
    Bytes junk(g() % 48);
    for (auto& byte : junk) byte = static_cast<std::uint8_t>(g());
    FrameKind kind = kAllKinds[g() % 12];
    try {
      WirePacket p = decode(kind, junk);
      Bytes round = encode(p);
      CHECK(round.size() == junk.size());
    } catch (const CodecError&) {
      // structured failure is the expected path
    }
  }
}
