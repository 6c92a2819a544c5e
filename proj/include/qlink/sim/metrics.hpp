#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qlink/egp/egp.hpp"

namespace qlink::sim {

using egp::RequestKind;

inline const char* kind_name(RequestKind k) {
  switch (k) {
    case RequestKind::NL: return "NL";
    case RequestKind::CK: return "CK";
    case RequestKind::MD: return "MD";
  }
  return "?";
}

struct PairRecord {
  RequestKind kind = RequestKind::MD;
  std::uint32_t origin = 0;
  std::uint16_t create_id = 0;
  std::uint16_t seq = 0;
  bool keep = false;
  des::SimTime submit_time = 0;
  des::SimTime delivered_time = 0;
  double goodness = 0.0;
  double true_fidelity = -1.0;  // K pairs: privileged read at delivery
  bool revoked = false;
};

struct RequestRecord {
  RequestKind kind = RequestKind::MD;
  std::uint32_t origin = 0;
  std::uint16_t pairs = 1;
  des::SimTime submit_time = 0;
  des::SimTime close_time = 0;
  std::string status;  // completed / timeout / expired / unsupp / ...
  double latency_s = 0.0;
  double scaled_latency_s = 0.0;
};

struct KindSummary {
  std::uint64_t pairs = 0;
  std::uint64_t requests_completed = 0;
  double throughput_per_s = 0.0;
  double mean_fidelity = -1.0;     // K: privileged; MD: QBER-derived
  double mean_goodness = 0.0;
  double mean_latency_s = 0.0;
  double mean_scaled_latency_s = 0.0;
};

struct MetricsReport {
  std::uint64_t seed = 0;
  std::string preset;
  std::string scheduler;
  double duration_s = 0.0;
  double p_loss = 0.0;

  std::vector<PairRecord> pairs;
  std::vector<RequestRecord> requests;
  std::vector<std::pair<double, std::size_t>> queue_length;  // (t_s, total length)

  std::uint64_t oks = 0;
  std::uint64_t expired_pairs = 0;
  std::uint64_t err_timeout = 0;
  std::uint64_t err_unsupp = 0;
  std::uint64_t err_denied = 0;
  std::uint64_t err_notime = 0;
  std::uint64_t out_of_mem_events = 0;
  std::uint64_t heralds = 0;
  std::uint64_t attempts = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_dropped = 0;
  std::uint64_t expire_ranges = 0;
  std::uint64_t test_rounds = 0;
  std::uint64_t grants = 0;
  std::uint64_t flow_blocked = 0;
  std::uint64_t reinits = 0;
  std::uint64_t suspensions = 0;
  std::uint64_t stale_replies = 0;
  std::uint64_t proto_errors = 0;

  std::array<double, 3> md_qber{0, 0, 0};  // X, Y, Z
  std::optional<double> md_fidelity;       // from the QBER identity

  KindSummary summary(RequestKind kind, std::optional<std::uint32_t> origin = {}) const;

  std::string to_json() const;
  static MetricsReport from_json(const std::string& text);
  /// requests.csv / pairs.csv / summary.json under `dir`.
  void export_files(const std::string& dir) const;

  static std::string requests_csv_header();
  static std::string pairs_csv_header();
};

struct RunResult {
  MetricsReport report;
  bool invariants_ok = true;
  std::vector<std::string> violations;
  std::uint64_t trace_hash = 0;
  std::uint64_t trace_rows = 0;
  std::string trace_text;  // retained only when the scenario asks for it
};

}  // namespace qlink::sim
