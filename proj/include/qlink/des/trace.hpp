#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>

#include "qlink/des/engine.hpp"
#include "qlink/des/rng.hpp"

namespace qlink::des {

/// Run trace: one CSV row per record (time,channel,what,disposition).
/// Always maintains a rolling FNV hash and row count so deterministic-replay
/// checks do not require retaining the full text; retention is optional.
class TraceLog {
 public:
  explicit TraceLog(bool retain = false) : retain_(retain) {
    if (retain_) text_ = header();
  }

  static std::string header() { return "time_ns,channel,what,disposition\n"; }

  void record(SimTime t, std::string_view channel, std::string_view what,
              std::string_view disposition) {
    line_.clear();
    line_ += std::to_string(t);
    line_ += ',';
    line_ += channel;
    line_ += ',';
    line_ += what;
    line_ += ',';
    line_ += disposition;
    line_ += '\n';
    hash_ = splitmix64(hash_ ^ fnv1a(line_));
    ++rows_;
    if (retain_) text_ += line_;
  }

  std::uint64_t hash() const { return hash_; }
  std::uint64_t rows() const { return rows_; }
  bool retaining() const { return retain_; }
  const std::string& text() const { return text_; }

  void write_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open trace file: " + path);
    out << (retain_ ? text_ : header());
  }

 private:
  bool retain_;
  std::string text_;
  std::string line_;
  std::uint64_t hash_ = 0x6a09e667f3bcc908ull;
  std::uint64_t rows_ = 0;
};

}  // namespace qlink::des
