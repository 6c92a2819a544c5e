#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "qlink/net/packets.hpp"

namespace qlink::net {

using Bytes = std::vector<std::uint8_t>;

/// Structured codec failure (overflowing field on encode, short or malformed
/// buffer on decode). Decoding never crashes on arbitrary input.
class CodecError : public std::runtime_error {
 public:
  explicit CodecError(const std::string& what) : std::runtime_error(what) {}
};

/// Big-endian bit packing: fields appended most-significant-bit first, in
/// figure order, padded with zero bits to whole bytes.
class BitWriter {
 public:
  void put(std::uint64_t value, int bits);
  void put_fraction(double v, int bits);  // fixed point Q0.<bits>
  Bytes finish();

 private:
  Bytes out_;
  std::uint64_t acc_ = 0;
  int used_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> data) : data_(data) {}
  std::uint64_t get(int bits);
  double get_fraction(int bits);
  void expect_end() const;
  std::size_t bits_left() const { return data_.size() * 8 - pos_; }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

Bytes encode(const WirePacket& pkt);

/// Decodes a frame of the given kind (channel context or the embedded
/// header/type field determines the kind in practice).
WirePacket decode(FrameKind kind, std::span<const std::uint8_t> data);

/// Decodes using the 12-bit header of headered frames; throws CodecError for
/// unheadered kinds (CREATE, OK, ERR frames carry a Type field instead).
WirePacket decode_headered(std::span<const std::uint8_t> data);

}  // namespace qlink::net
