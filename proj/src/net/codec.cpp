#include "qlink/net/codec.hpp"

#include <cmath>

namespace qlink::net {

namespace {

std::uint64_t fraction_max(int bits) { return (bits == 64) ? ~0ull : ((1ull << bits) - 1); }

}  // namespace

void BitWriter::put(std::uint64_t value, int bits) {
  if (bits < 1 || bits > 64) throw CodecError("bad field width");
  if (bits < 64 && value >> bits) throw CodecError("field overflow");
  for (int i = bits - 1; i >= 0; --i) {
    acc_ = (acc_ << 1) | ((value >> i) & 1);
    if (++used_ == 8) {
      out_.push_back(static_cast<std::uint8_t>(acc_));
      acc_ = 0;
      used_ = 0;
    }
  }
}

void BitWriter::put_fraction(double v, int bits) {
  if (v < 0.0 || v > 1.0) throw CodecError("fraction outside [0,1]");
  put(static_cast<std::uint64_t>(std::llround(v * static_cast<double>(fraction_max(bits)))), bits);
}

Bytes BitWriter::finish() {
  if (used_ > 0) {
    out_.push_back(static_cast<std::uint8_t>(acc_ << (8 - used_)));
    acc_ = 0;
    used_ = 0;
  }
  return std::move(out_);
}

std::uint64_t BitReader::get(int bits) {
  if (bits < 1 || bits > 64) throw CodecError("bad field width");
  if (bits_left() < static_cast<std::size_t>(bits)) throw CodecError("short buffer");
  std::uint64_t v = 0;
  for (int i = 0; i < bits; ++i) {
    std::size_t byte = pos_ >> 3;
    int off = 7 - static_cast<int>(pos_ & 7);
    v = (v << 1) | ((data_[byte] >> off) & 1);
    ++pos_;
  }
  return v;
}

double BitReader::get_fraction(int bits) {
  return static_cast<double>(get(bits)) / static_cast<double>(fraction_max(bits));
}

void BitReader::expect_end() const {
  if (bits_left() >= 8) throw CodecError("trailing bytes");
}

namespace {

void put_header(BitWriter& w, FrameKind k) { w.put(make_header(k), 12); }

void check_header(BitReader& r, FrameKind k) {
  if (r.get(12) != make_header(k)) throw CodecError("bad header");
}

void put_aid(BitWriter& w, const AbsQueueId& a) {
  w.put(a.qid, 4);
  w.put(a.qseq, 8);
}

AbsQueueId get_aid(BitReader& r) {
  AbsQueueId a;
  a.qid = static_cast<std::uint8_t>(r.get(4));
  a.qseq = static_cast<std::uint8_t>(r.get(8));
  return a;
}

Bytes encode_gen(const GenPacket& p) {
  BitWriter w;
  put_header(w, FrameKind::Gen);
  put_aid(w, p.aid);
  w.put(0, 8);
  return w.finish();
}

GenPacket decode_gen(BitReader& r) {
  check_header(r, FrameKind::Gen);
  GenPacket p;
  p.aid = get_aid(r);
  r.get(8);
  r.expect_end();
  return p;
}

Bytes encode_reply(const ReplyPacket& p) {
  BitWriter w;
  put_header(w, FrameKind::Reply);
  w.put(static_cast<std::uint64_t>(p.ot), 4);
  w.put(p.seq, 16);
  put_aid(w, p.aid);
  put_aid(w, p.aid_peer);
  w.put(0, 8);
  return w.finish();
}

ReplyPacket decode_reply(BitReader& r) {
  check_header(r, FrameKind::Reply);
  ReplyPacket p;
  std::uint64_t ot = r.get(4);
  switch (ot) {
    case 0b0000:
    case 0b0001:
    case 0b0010:
    case 0b0100:
    case 0b1001:
    case 0b1010:
      p.ot = static_cast<ReplyOutcome>(ot);
      break;
    default:
      throw CodecError("bad REPLY outcome code");
  }
  p.seq = static_cast<std::uint16_t>(r.get(16));
  p.aid = get_aid(r);
  p.aid_peer = get_aid(r);
  r.get(8);
  r.expect_end();
  return p;
}

Bytes encode_dqp(const DqpPacket& p) {
  BitWriter w;
  w.put(0, 10);  // OPT reserved
  w.put(static_cast<std::uint64_t>(p.ft), 2);
  w.put(p.cseq, 8);
  put_aid(w, p.aid);
  w.put(p.schedule_cycle, 64);
  w.put(p.timeout_cycle, 64);
  w.put_fraction(p.min_fidelity, 32);
  w.put(p.purpose_id, 16);
  w.put(p.create_id, 16);
  w.put(p.num_pairs, 16);
  w.put(p.priority, 4);
  w.put(0, 12);
  w.put(p.initial_virtual_finish, 32);
  w.put(p.est_cycles_per_pair, 32);
  w.put(p.store ? 1 : 0, 1);
  w.put(p.atomic ? 1 : 0, 1);
  w.put(p.measure ? 1 : 0, 1);
  w.put(p.master_req ? 1 : 0, 1);
  w.put(0, 28);
  return w.finish();
}

DqpPacket decode_dqp(BitReader& r) {
  DqpPacket p;
  r.get(10);
  std::uint64_t ft = r.get(2);
  if (ft > 0b10) throw CodecError("bad DQP frame type");
  p.ft = static_cast<DqpFrameType>(ft);
  p.cseq = static_cast<std::uint8_t>(r.get(8));
  p.aid = get_aid(r);
  p.schedule_cycle = r.get(64);
  p.timeout_cycle = r.get(64);
  p.min_fidelity = r.get_fraction(32);
  p.purpose_id = static_cast<std::uint16_t>(r.get(16));
  p.create_id = static_cast<std::uint16_t>(r.get(16));
  p.num_pairs = static_cast<std::uint16_t>(r.get(16));
  p.priority = static_cast<std::uint8_t>(r.get(4));
  r.get(12);
  p.initial_virtual_finish = static_cast<std::uint32_t>(r.get(32));
  p.est_cycles_per_pair = static_cast<std::uint32_t>(r.get(32));
  p.store = r.get(1) != 0;
  p.atomic = r.get(1) != 0;
  p.measure = r.get(1) != 0;
  p.master_req = r.get(1) != 0;
  r.get(28);
  r.expect_end();
  return p;
}

Bytes encode_create(const CreatePacket& p) {
  BitWriter w;
  w.put(p.remote_node_id, 32);
  w.put_fraction(p.min_fidelity, 16);
  w.put(p.max_time_s, 16);
  w.put(p.purpose_id, 16);
  w.put(p.number, 16);
  w.put(p.priority, 4);
  w.put(p.type_k ? 1 : 0, 1);
  w.put(p.atomic ? 1 : 0, 1);
  w.put(p.consecutive ? 1 : 0, 1);
  w.put(0, 25);
  return w.finish();
}

CreatePacket decode_create(BitReader& r) {
  CreatePacket p;
  p.remote_node_id = static_cast<std::uint32_t>(r.get(32));
  p.min_fidelity = r.get_fraction(16);
  p.max_time_s = static_cast<std::uint16_t>(r.get(16));
  p.purpose_id = static_cast<std::uint16_t>(r.get(16));
  p.number = static_cast<std::uint16_t>(r.get(16));
  p.priority = static_cast<std::uint8_t>(r.get(4));
  p.type_k = r.get(1) != 0;
  p.atomic = r.get(1) != 0;
  p.consecutive = r.get(1) != 0;
  r.get(25);
  r.expect_end();
  return p;
}

Bytes encode_expire(const ExpirePacket& p) {
  BitWriter w;
  put_header(w, FrameKind::Expire);
  put_aid(w, p.aid);
  w.put(0, 8);
  w.put(p.origin_id, 32);
  w.put(p.create_id, 16);
  w.put(p.seq, 16);
  return w.finish();
}

ExpirePacket decode_expire(BitReader& r) {
  check_header(r, FrameKind::Expire);
  ExpirePacket p;
  p.aid = get_aid(r);
  r.get(8);
  p.origin_id = static_cast<std::uint32_t>(r.get(32));
  p.create_id = static_cast<std::uint16_t>(r.get(16));
  p.seq = static_cast<std::uint16_t>(r.get(16));
  r.expect_end();
  return p;
}

Bytes encode_expire_ack(const ExpireAckPacket& p) {
  BitWriter w;
  put_header(w, FrameKind::ExpireAck);
  put_aid(w, p.aid);
  w.put(0, 8);
  w.put(p.seq, 16);
  w.put(0, 16);
  return w.finish();
}

ExpireAckPacket decode_expire_ack(BitReader& r) {
  check_header(r, FrameKind::ExpireAck);
  ExpireAckPacket p;
  p.aid = get_aid(r);
  r.get(8);
  p.seq = static_cast<std::uint16_t>(r.get(16));
  r.get(16);
  r.expect_end();
  return p;
}

Bytes encode_mem(const MemAdvertPacket& p) {
  BitWriter w;
  put_header(w, FrameKind::MemAdvert);
  w.put(p.ack ? 1 : 0, 1);
  w.put(p.comm, 2);
  w.put(p.storage, 4);
  w.put(0, 13);
  return w.finish();
}

MemAdvertPacket decode_mem(BitReader& r) {
  check_header(r, FrameKind::MemAdvert);
  MemAdvertPacket p;
  p.ack = r.get(1) != 0;
  p.comm = static_cast<std::uint8_t>(r.get(2));
  p.storage = static_cast<std::uint8_t>(r.get(4));
  r.get(13);
  r.expect_end();
  return p;
}

Bytes encode_ok_keep(const OkKeepPacket& p) {
  BitWriter w;
  w.put(static_cast<std::uint64_t>(FrameKind::OkKeep), 4);
  w.put(p.create_id, 16);
  w.put(p.logical_qubit_id, 4);
  w.put(p.directionality ? 1 : 0, 1);
  w.put(0, 7);
  w.put(p.seq, 16);
  w.put(p.purpose_id, 16);
  w.put(p.remote_node_id, 32);
  w.put_fraction(p.goodness, 16);
  w.put(p.goodness_time, 16);
  return w.finish();
}

OkKeepPacket decode_ok_keep(BitReader& r) {
  if (r.get(4) != static_cast<std::uint64_t>(FrameKind::OkKeep)) throw CodecError("bad OK type");
  OkKeepPacket p;
  p.create_id = static_cast<std::uint16_t>(r.get(16));
  p.logical_qubit_id = static_cast<std::uint8_t>(r.get(4));
  p.directionality = r.get(1) != 0;
  r.get(7);
  p.seq = static_cast<std::uint16_t>(r.get(16));
  p.purpose_id = static_cast<std::uint16_t>(r.get(16));
  p.remote_node_id = static_cast<std::uint32_t>(r.get(32));
  p.goodness = r.get_fraction(16);
  p.goodness_time = static_cast<std::uint16_t>(r.get(16));
  r.expect_end();
  return p;
}

Bytes encode_ok_measure(const OkMeasurePacket& p) {
  BitWriter w;
  w.put(static_cast<std::uint64_t>(FrameKind::OkMeasure), 4);
  w.put(p.create_id, 16);
  w.put(p.outcome ? 1 : 0, 1);
  w.put(p.basis, 3);
  w.put(p.directionality ? 1 : 0, 1);
  w.put(0, 7);
  w.put(p.seq, 16);
  w.put(p.purpose_id, 16);
  w.put(p.remote_node_id, 32);
  w.put_fraction(p.goodness, 16);
  w.put(0, 16);
  return w.finish();
}

OkMeasurePacket decode_ok_measure(BitReader& r) {
  if (r.get(4) != static_cast<std::uint64_t>(FrameKind::OkMeasure)) {
    throw CodecError("bad OK type");
  }
  OkMeasurePacket p;
  p.create_id = static_cast<std::uint16_t>(r.get(16));
  p.outcome = r.get(1) != 0;
  p.basis = static_cast<std::uint8_t>(r.get(3));
  p.directionality = r.get(1) != 0;
  r.get(7);
  p.seq = static_cast<std::uint16_t>(r.get(16));
  p.purpose_id = static_cast<std::uint16_t>(r.get(16));
  p.remote_node_id = static_cast<std::uint32_t>(r.get(32));
  p.goodness = r.get_fraction(16);
  r.get(16);
  r.expect_end();
  return p;
}

Bytes encode_err(const ErrPacket& p) {
  BitWriter w;
  w.put(static_cast<std::uint64_t>(FrameKind::Err), 4);
  w.put(p.create_id, 16);
  w.put(static_cast<std::uint64_t>(p.err), 4);
  w.put(p.seq_range ? 1 : 0, 1);
  w.put(0, 7);
  w.put(p.seq_low, 16);
  w.put(p.seq_high, 16);
  w.put(p.origin_id, 32);
  return w.finish();
}

ErrPacket decode_err(BitReader& r) {
  if (r.get(4) != static_cast<std::uint64_t>(FrameKind::Err)) throw CodecError("bad ERR type");
  ErrPacket p;
  p.create_id = static_cast<std::uint16_t>(r.get(16));
  std::uint64_t e = r.get(4);
  if (e == 0 || (e > 0x8 && e != 0xF)) throw CodecError("bad ERR code");
  p.err = static_cast<EgpError>(e);
  p.seq_range = r.get(1) != 0;
  r.get(7);
  p.seq_low = static_cast<std::uint16_t>(r.get(16));
  p.seq_high = static_cast<std::uint16_t>(r.get(16));
  p.origin_id = static_cast<std::uint32_t>(r.get(32));
  r.expect_end();
  return p;
}

Bytes encode_poll(const PollPacket& p) {
  BitWriter w;
  put_header(w, FrameKind::Poll);
  w.put(p.generate ? 1 : 0, 1);
  put_aid(w, p.aid);
  w.put(p.pseq, 10);
  w.put(0, 5);
  w.put(p.params, 8);
  w.put(p.crc, 32);
  return w.finish();
}

PollPacket decode_poll(BitReader& r) {
  check_header(r, FrameKind::Poll);
  PollPacket p;
  p.generate = r.get(1) != 0;
  p.aid = get_aid(r);
  p.pseq = static_cast<std::uint16_t>(r.get(10));
  r.get(5);
  p.params = static_cast<std::uint8_t>(r.get(8));
  p.crc = static_cast<std::uint32_t>(r.get(32));
  r.expect_end();
  return p;
}

Bytes encode_result(const ResultPacket& p) {
  BitWriter w;
  put_header(w, FrameKind::Result);
  w.put(p.outcome, 2);
  w.put(p.seq, 16);
  w.put(0, 2);
  put_aid(w, p.aid);
  w.put(static_cast<std::uint64_t>(p.err), 4);
  put_aid(w, p.aid_peer);
  w.put(0, 4);
  w.put(p.crc, 32);
  return w.finish();
}

ResultPacket decode_result(BitReader& r) {
  check_header(r, FrameKind::Result);
  ResultPacket p;
  p.outcome = static_cast<std::uint8_t>(r.get(2));
  if (p.outcome > 2) throw CodecError("bad RESULT outcome");
  p.seq = static_cast<std::uint16_t>(r.get(16));
  r.get(2);
  p.aid = get_aid(r);
  std::uint64_t e = r.get(4);
  switch (e) {
    case 0b0000:
    case 0b0001:
    case 0b0010:
    case 0b0100:
    case 0b0111:
      p.err = static_cast<MhpError>(e);
      break;
    default:
      throw CodecError("bad RESULT error code");
  }
  p.aid_peer = get_aid(r);
  r.get(4);
  p.crc = static_cast<std::uint32_t>(r.get(32));
  r.expect_end();
  return p;
}

}  // namespace

bool reply_outcome_is_error(ReplyOutcome ot) {
  return ot == ReplyOutcome::QueueMismatch || ot == ReplyOutcome::TimeMismatch ||
         ot == ReplyOutcome::NoMessageOther;
}

int reply_outcome_r(ReplyOutcome ot) {
  switch (ot) {
    case ReplyOutcome::SuccessPsiPlus: return 1;
    case ReplyOutcome::SuccessPsiMinus: return 2;
    default: return 0;
  }
}

ReplyOutcome reply_outcome_from_r(int r) {
  switch (r) {
    case 1: return ReplyOutcome::SuccessPsiPlus;
    case 2: return ReplyOutcome::SuccessPsiMinus;
    default: return ReplyOutcome::Fail;
  }
}

FrameKind frame_kind(const WirePacket& pkt) {
  struct Visitor {
    FrameKind operator()(const GenPacket&) const { return FrameKind::Gen; }
    FrameKind operator()(const ReplyPacket&) const { return FrameKind::Reply; }
    FrameKind operator()(const DqpPacket&) const { return FrameKind::DqpAdd; }
    FrameKind operator()(const CreatePacket&) const { return FrameKind::Create; }
    FrameKind operator()(const ExpirePacket&) const { return FrameKind::Expire; }
    FrameKind operator()(const ExpireAckPacket&) const { return FrameKind::ExpireAck; }
    FrameKind operator()(const MemAdvertPacket&) const { return FrameKind::MemAdvert; }
    FrameKind operator()(const OkKeepPacket&) const { return FrameKind::OkKeep; }
    FrameKind operator()(const OkMeasurePacket&) const { return FrameKind::OkMeasure; }
    FrameKind operator()(const ErrPacket&) const { return FrameKind::Err; }
    FrameKind operator()(const PollPacket&) const { return FrameKind::Poll; }
    FrameKind operator()(const ResultPacket&) const { return FrameKind::Result; }
  };
  return std::visit(Visitor{}, pkt);
}

std::string frame_name(FrameKind k) {
  switch (k) {
    case FrameKind::Gen: return "GEN";
    case FrameKind::Reply: return "REPLY";
    case FrameKind::DqpAdd: return "DQP";
    case FrameKind::Create: return "CREATE";
    case FrameKind::Expire: return "EXPIRE";
    case FrameKind::ExpireAck: return "EXPIRE_ACK";
    case FrameKind::MemAdvert: return "MEM";
    case FrameKind::OkKeep: return "OK_K";
    case FrameKind::OkMeasure: return "OK_M";
    case FrameKind::Err: return "ERR";
    case FrameKind::Poll: return "POLL";
    case FrameKind::Result: return "RESULT";
  }
  return "UNKNOWN";
}

Bytes encode(const WirePacket& pkt) {
  struct Visitor {
    Bytes operator()(const GenPacket& p) const { return encode_gen(p); }
    Bytes operator()(const ReplyPacket& p) const { return encode_reply(p); }
    Bytes operator()(const DqpPacket& p) const { return encode_dqp(p); }
    Bytes operator()(const CreatePacket& p) const { return encode_create(p); }
    Bytes operator()(const ExpirePacket& p) const { return encode_expire(p); }
    Bytes operator()(const ExpireAckPacket& p) const { return encode_expire_ack(p); }
    Bytes operator()(const MemAdvertPacket& p) const { return encode_mem(p); }
    Bytes operator()(const OkKeepPacket& p) const { return encode_ok_keep(p); }
    Bytes operator()(const OkMeasurePacket& p) const { return encode_ok_measure(p); }
    Bytes operator()(const ErrPacket& p) const { return encode_err(p); }
    Bytes operator()(const PollPacket& p) const { return encode_poll(p); }
    Bytes operator()(const ResultPacket& p) const { return encode_result(p); }
  };
  return std::visit(Visitor{}, pkt);
}

WirePacket decode(FrameKind kind, std::span<const std::uint8_t> data) {
  BitReader r(data);
  switch (kind) {
    case FrameKind::Gen: return decode_gen(r);
    case FrameKind::Reply: return decode_reply(r);
    case FrameKind::DqpAdd: return decode_dqp(r);
    case FrameKind::Create: return decode_create(r);
    case FrameKind::Expire: return decode_expire(r);
    case FrameKind::ExpireAck: return decode_expire_ack(r);
    case FrameKind::MemAdvert: return decode_mem(r);
    case FrameKind::OkKeep: return decode_ok_keep(r);
    case FrameKind::OkMeasure: return decode_ok_measure(r);
    case FrameKind::Err: return decode_err(r);
    case FrameKind::Poll: return decode_poll(r);
    case FrameKind::Result: return decode_result(r);
  }
  throw CodecError("unknown frame kind");
}

WirePacket decode_headered(std::span<const std::uint8_t> data) {
  BitReader peek(data);
  std::uint64_t header = peek.get(12);
  if ((header >> 4) != kProtocolTag) throw CodecError("bad protocol tag");
  auto kind = static_cast<FrameKind>(header & 0xF);
  switch (kind) {
    case FrameKind::Gen:
    case FrameKind::Reply:
    case FrameKind::Expire:
    case FrameKind::ExpireAck:
    case FrameKind::MemAdvert:
    case FrameKind::Poll:
    case FrameKind::Result:
      return decode(kind, data);
    default:
      throw CodecError("frame kind is not headered");
  }
}

}  // namespace qlink::net
