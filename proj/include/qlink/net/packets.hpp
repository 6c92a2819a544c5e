#pragma once

#include <cstdint>
#include <string>
#include <variant>

namespace qlink::net {

/// 12-bit header carried by the framed packets: an 8-bit protocol/version
/// tag plus a 4-bit frame kind, so frames are self-describing on a shared
/// channel.
inline constexpr std::uint16_t kProtocolTag = 0xA1;

enum class FrameKind : std::uint8_t {
  Gen = 0x1,
  Reply = 0x2,
  DqpAdd = 0x3,
  Create = 0x4,
  Expire = 0x5,
  ExpireAck = 0x6,
  MemAdvert = 0x7,
  OkKeep = 0x8,
  OkMeasure = 0x9,
  Err = 0xA,
  Poll = 0xB,
  Result = 0xC,
};

inline std::uint16_t make_header(FrameKind k) {
  return static_cast<std::uint16_t>((kProtocolTag << 4) | static_cast<std::uint16_t>(k));
}

/// REPLY outcome/error field. Error codes follow the wire figure values;
/// heralding outcomes carry the high bit so the encodings cannot collide.
enum class ReplyOutcome : std::uint8_t {
  Fail = 0b0000,
  QueueMismatch = 0b0001,
  TimeMismatch = 0b0010,
  NoMessageOther = 0b0100,
  SuccessPsiPlus = 0b1001,
  SuccessPsiMinus = 0b1010,
};

bool reply_outcome_is_error(ReplyOutcome ot);
/// r in {0,1,2} for Fail/SuccessPsiPlus/SuccessPsiMinus; errors map to 0.
int reply_outcome_r(ReplyOutcome ot);
ReplyOutcome reply_outcome_from_r(int r);

/// MHP-internal error codes (RESULT.err and GEN_FAIL reporting).
enum class MhpError : std::uint8_t {
  None = 0b0000,
  QueueMismatch = 0b0001,
  TimeMismatch = 0b0010,
  NoMessageOther = 0b0100,
  GenFail = 0b0111,
};

/// (queue index, sequence within queue); the null value 0/0 with `present`
/// false encodes the zero string.
struct AbsQueueId {
  std::uint8_t qid = 0;   // 4 bits
  std::uint8_t qseq = 0;  // 8 bits
  bool operator==(const AbsQueueId&) const = default;
};

struct GenPacket {
  AbsQueueId aid;
  bool operator==(const GenPacket&) const = default;
};

struct ReplyPacket {
  ReplyOutcome ot = ReplyOutcome::Fail;
  std::uint16_t seq = 0;
  AbsQueueId aid;
  AbsQueueId aid_peer;  // zero string when absent
  bool operator==(const ReplyPacket&) const = default;
};

enum class DqpFrameType : std::uint8_t { Add = 0b00, Ack = 0b01, Rej = 0b10 };

struct DqpPacket {
  DqpFrameType ft = DqpFrameType::Add;
  std::uint8_t cseq = 0;
  AbsQueueId aid;
  std::uint64_t schedule_cycle = 0;
  std::uint64_t timeout_cycle = 0;
  double min_fidelity = 0.0;  // Q0.32 on the wire
  std::uint16_t purpose_id = 0;
  std::uint16_t create_id = 0;
  std::uint16_t num_pairs = 0;
  std::uint8_t priority = 0;  // 4 bits
  std::uint32_t initial_virtual_finish = 0;
  std::uint32_t est_cycles_per_pair = 0;
  bool store = false;       // STR
  bool atomic = false;      // ATM
  bool measure = false;     // MD
  bool master_req = false;  // MR
  bool operator==(const DqpPacket&) const = default;
};

struct CreatePacket {
  std::uint32_t remote_node_id = 0;
  double min_fidelity = 0.0;     // Q0.16 on the wire
  std::uint16_t max_time_s = 0;  // seconds; 0 = no bound
  std::uint16_t purpose_id = 0;
  std::uint16_t number = 1;
  std::uint8_t priority = 0;
  bool type_k = true;  // T flag: keep (true) or measure (false)
  bool atomic = false;
  bool consecutive = false;
  bool operator==(const CreatePacket&) const = default;
};

struct ExpirePacket {
  AbsQueueId aid;
  std::uint32_t origin_id = 0;
  std::uint16_t create_id = 0;
  std::uint16_t seq = 0;  // sender's up-to-date expected MHP sequence
  bool operator==(const ExpirePacket&) const = default;
};

struct ExpireAckPacket {
  AbsQueueId aid;
  std::uint16_t seq = 0;  // acknowledger's expected MHP sequence
  bool operator==(const ExpireAckPacket&) const = default;
};

struct MemAdvertPacket {
  bool ack = false;          // Type bit: 0 REQ(E), 1 ACK(E)
  std::uint8_t comm = 0;     // CMS, 2 bits
  std::uint8_t storage = 0;  // STRG, 4 bits
  bool operator==(const MemAdvertPacket&) const = default;
};

struct OkKeepPacket {
  std::uint16_t create_id = 0;
  std::uint8_t logical_qubit_id = 0;  // 4 bits
  bool directionality = false;
  std::uint16_t seq = 0;
  std::uint16_t purpose_id = 0;
  std::uint32_t remote_node_id = 0;
  double goodness = 0.0;           // Q0.16 on the wire
  std::uint16_t goodness_time = 0;  // seconds, saturating
  bool operator==(const OkKeepPacket&) const = default;
};

struct OkMeasurePacket {
  std::uint16_t create_id = 0;
  bool outcome = false;
  std::uint8_t basis = 0;  // 3 bits
  bool directionality = false;
  std::uint16_t seq = 0;
  std::uint16_t purpose_id = 0;
  std::uint32_t remote_node_id = 0;
  double goodness = 0.0;
  bool operator==(const OkMeasurePacket&) const = default;
};

enum class EgpError : std::uint8_t {
  Unsupported = 0x1,   // UNSUPP
  MemExceeded = 0x2,   // MEMEXCEEDED
  OutOfMem = 0x3,      // OUTOFMEM
  Denied = 0x4,        // DENIED
  Timeout = 0x5,       // ERR_TIMEOUT
  Rejected = 0x6,      // ERR_REJECTED
  NoTime = 0x7,        // ERR_NOTIME
  Expired = 0x8,       // ERR_EXPIRE
  Other = 0xF,
};

struct ErrPacket {
  EgpError err = EgpError::Other;
  std::uint16_t create_id = 0;
  bool seq_range = false;  // S flag
  std::uint16_t seq_low = 0;
  std::uint16_t seq_high = 0;  // inclusive
  std::uint32_t origin_id = 0;
  bool operator==(const ErrPacket&) const = default;
};

/// Poll answer from EGP to MHP.
struct PollPacket {
  bool generate = false;  // GEN flag
  AbsQueueId aid;
  std::uint16_t pseq = 0;    // 10 bits
  std::uint8_t params = 0;   // bright-state parameter index
  std::uint32_t crc = 0;
  bool operator==(const PollPacket&) const = default;
};

/// RESULT from MHP to EGP.
struct ResultPacket {
  std::uint8_t outcome = 0;  // 2 bits, r
  std::uint16_t seq = 0;
  AbsQueueId aid;
  MhpError err = MhpError::None;
  AbsQueueId aid_peer;
  std::uint32_t crc = 0;
  bool operator==(const ResultPacket&) const = default;
};

using WirePacket =
    std::variant<GenPacket, ReplyPacket, DqpPacket, CreatePacket, ExpirePacket, ExpireAckPacket,
                 MemAdvertPacket, OkKeepPacket, OkMeasurePacket, ErrPacket, PollPacket,
                 ResultPacket>;

FrameKind frame_kind(const WirePacket& pkt);
std::string frame_name(FrameKind k);

}  // namespace qlink::net
