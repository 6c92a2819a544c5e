#include "qlink/sim/metrics.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace qlink::sim {

using nlohmann::json;

KindSummary MetricsReport::summary(RequestKind kind, std::optional<std::uint32_t> origin) const {
  KindSummary s;
  double fid_sum = 0.0, good_sum = 0.0;
  std::uint64_t fid_n = 0;
  for (const PairRecord& p : pairs) {
    if (p.kind != kind || p.revoked) continue;
    if (origin && p.origin != *origin) continue;
    ++s.pairs;
    good_sum += p.goodness;
    if (p.true_fidelity >= 0.0) {
      fid_sum += p.true_fidelity;
      ++fid_n;
    }
  }
  double lat_sum = 0.0, scaled_sum = 0.0;
  for (const RequestRecord& r : requests) {
    if (r.kind != kind || r.status != "completed") continue;
    if (origin && r.origin != *origin) continue;
    ++s.requests_completed;
    lat_sum += r.latency_s;
    scaled_sum += r.scaled_latency_s;
  }
  s.throughput_per_s = duration_s > 0 ? static_cast<double>(s.pairs) / duration_s : 0.0;
  if (fid_n > 0) {
    s.mean_fidelity = fid_sum / fid_n;
  } else if (kind == RequestKind::MD && md_fidelity) {
    s.mean_fidelity = *md_fidelity;
  }
  if (s.pairs > 0) s.mean_goodness = good_sum / s.pairs;
  if (s.requests_completed > 0) {
    s.mean_latency_s = lat_sum / s.requests_completed;
    s.mean_scaled_latency_s = scaled_sum / s.requests_completed;
  }
  return s;
}

namespace {

json pair_to_json(const PairRecord& p) {
  return json{{"kind", kind_name(p.kind)},
              {"origin", p.origin},
              {"create_id", p.create_id},
              {"seq", p.seq},
              {"keep", p.keep},
              {"submit_ns", p.submit_time},
              {"delivered_ns", p.delivered_time},
              {"goodness", p.goodness},
              {"true_fidelity", p.true_fidelity},
              {"revoked", p.revoked}};
}

PairRecord pair_from_json(const json& j) {
  PairRecord p;
  std::string k = j.at("kind");
  p.kind = k == "NL" ? RequestKind::NL : k == "CK" ? RequestKind::CK : RequestKind::MD;
  p.origin = j.at("origin");
  p.create_id = j.at("create_id");
  p.seq = j.at("seq");
  p.keep = j.at("keep");
  p.submit_time = j.at("submit_ns");
  p.delivered_time = j.at("delivered_ns");
  p.goodness = j.at("goodness");
  p.true_fidelity = j.at("true_fidelity");
  p.revoked = j.at("revoked");
  return p;
}

json request_to_json(const RequestRecord& r) {
  return json{{"kind", kind_name(r.kind)},    {"origin", r.origin},
              {"pairs", r.pairs},             {"submit_ns", r.submit_time},
              {"close_ns", r.close_time},     {"status", r.status},
              {"latency_s", r.latency_s},     {"scaled_latency_s", r.scaled_latency_s}};
}

RequestRecord request_from_json(const json& j) {
  RequestRecord r;
  std::string k = j.at("kind");
  r.kind = k == "NL" ? RequestKind::NL : k == "CK" ? RequestKind::CK : RequestKind::MD;
  r.origin = j.at("origin");
  r.pairs = j.at("pairs");
  r.submit_time = j.at("submit_ns");
  r.close_time = j.at("close_ns");
  r.status = j.at("status");
  r.latency_s = j.at("latency_s");
  r.scaled_latency_s = j.at("scaled_latency_s");
  return r;
}

}  // namespace

std::string MetricsReport::to_json() const {
  json j;
  j["seed"] = seed;
  j["preset"] = preset;
  j["scheduler"] = scheduler;
  j["duration_s"] = duration_s;
  j["p_loss"] = p_loss;
  j["counts"] = {{"oks", oks},
                 {"expired_pairs", expired_pairs},
                 {"err_timeout", err_timeout},
                 {"err_unsupp", err_unsupp},
                 {"err_denied", err_denied},
                 {"err_notime", err_notime},
                 {"out_of_mem_events", out_of_mem_events},
                 {"heralds", heralds},
                 {"attempts", attempts},
                 {"messages_sent", messages_sent},
                 {"messages_dropped", messages_dropped},
                 {"expire_ranges", expire_ranges},
                 {"test_rounds", test_rounds}};
  j["md_qber"] = md_qber;
  if (md_fidelity) j["md_fidelity"] = *md_fidelity;
  j["pairs"] = json::array();
  for (const auto& p : pairs) j["pairs"].push_back(pair_to_json(p));
  j["requests"] = json::array();
  for (const auto& r : requests) j["requests"].push_back(request_to_json(r));
  j["queue_length"] = queue_length;
  return j.dump(2);
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  json j = json::parse(text);
  MetricsReport m;
  m.seed = j.at("seed");
  m.preset = j.at("preset");
  m.scheduler = j.at("scheduler");
  m.duration_s = j.at("duration_s");
  m.p_loss = j.at("p_loss");
  const json& c = j.at("counts");
  m.oks = c.at("oks");
  m.expired_pairs = c.at("expired_pairs");
  m.err_timeout = c.at("err_timeout");
  m.err_unsupp = c.at("err_unsupp");
  m.err_denied = c.at("err_denied");
  m.err_notime = c.at("err_notime");
  m.out_of_mem_events = c.at("out_of_mem_events");
  m.heralds = c.at("heralds");
  m.attempts = c.at("attempts");
  m.messages_sent = c.at("messages_sent");
  m.messages_dropped = c.at("messages_dropped");
  m.expire_ranges = c.at("expire_ranges");
  m.test_rounds = c.at("test_rounds");
  m.md_qber = j.at("md_qber");
  if (j.contains("md_fidelity")) m.md_fidelity = j.at("md_fidelity").get<double>();
  for (const auto& p : j.at("pairs")) m.pairs.push_back(pair_from_json(p));
  for (const auto& r : j.at("requests")) m.requests.push_back(request_from_json(r));
  for (const auto& q : j.at("queue_length")) {
    m.queue_length.emplace_back(q.at(0).get<double>(), q.at(1).get<std::size_t>());
  }
  return m;
}

std::string MetricsReport::requests_csv_header() {
  return "kind,origin,pairs,submit_ns,close_ns,status,latency_s,scaled_latency_s\n";
}

std::string MetricsReport::pairs_csv_header() {
  return "kind,origin,create_id,seq,keep,submit_ns,delivered_ns,goodness,true_fidelity,revoked\n";
}

void MetricsReport::export_files(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "requests.csv");
    out << requests_csv_header();
    for (const RequestRecord& r : requests) {
      out << kind_name(r.kind) << ',' << r.origin << ',' << r.pairs << ',' << r.submit_time << ','
          << r.close_time << ',' << r.status << ',' << r.latency_s << ',' << r.scaled_latency_s
          << '\n';
    }
  }
  {
    std::ofstream out(fs::path(dir) / "pairs.csv");
    out << pairs_csv_header();
    for (const PairRecord& p : pairs) {
      out << kind_name(p.kind) << ',' << p.origin << ',' << p.create_id << ',' << p.seq << ','
          << (p.keep ? 1 : 0) << ',' << p.submit_time << ',' << p.delivered_time << ','
          << p.goodness << ',' << p.true_fidelity << ',' << (p.revoked ? 1 : 0) << '\n';
    }
  }
  {
    std::ofstream out(fs::path(dir) / "summary.json");
    out << to_json();
  }
}

}  // namespace qlink::sim
