#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qlink/des/rng.hpp"
#include "qlink/des/trace.hpp"
#include "qlink/sim/runner.hpp"
#include "qlink/sim/sweep.hpp"
#include "qlink/sim/validate.hpp"

using namespace qlink;
using sim::Preset;
using sim::RunResult;
using sim::ScenarioConfig;
using sim::WorkloadConfig;

namespace {

struct CommonOpts {
  std::string preset = "lab";
  std::uint64_t seed = 1;
  double duration_s = 5.0;
  double p_loss = 0.0;
  std::string scheduler = "fcfs";
  std::string out_dir;
  std::string config_file;
  std::string pattern;
  std::string kind = "MD";
  double fraction = 0.99;
  int k_max = 1;
  std::string origin = "random";
  double min_fidelity = 0.64;
  double max_wait_s = 0.0;
  bool drain = false;
  double gen_fail = 0.0;
  std::string trace_file;
};

// flat key = value lines with [scenario] / [workload] / [scheduler] sections
void apply_config_file(const std::string& path, CommonOpts& o) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::string line, section;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    if (line.front() == '[') {
      section = line.substr(1, line.find(']') - 1);
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t");
      auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (section == "scenario") {
      if (key == "preset") o.preset = val;
      else if (key == "seed") o.seed = std::stoull(val);
      else if (key == "duration_s") o.duration_s = std::stod(val);
      else if (key == "p_loss") o.p_loss = std::stod(val);
    } else if (section == "scheduler") {
      if (key == "strategy") o.scheduler = val;
    } else if (section == "workload") {
      if (key == "pattern") o.pattern = val;
      else if (key == "kind") o.kind = val;
      else if (key == "fraction") o.fraction = std::stod(val);
      else if (key == "k_max") o.k_max = std::stoi(val);
      else if (key == "origin") o.origin = val;
      else if (key == "min_fidelity") o.min_fidelity = std::stod(val);
      else if (key == "max_wait_s") o.max_wait_s = std::stod(val);
      else if (key == "drain") o.drain = (val == "1" || val == "true");
    }
  }
}

ScenarioConfig make_scenario(const CommonOpts& o) {
  ScenarioConfig sc = ScenarioConfig::make(sim::preset_from_string(o.preset));
  sc.seed = o.seed;
  sc.duration_ns = static_cast<des::SimTime>(o.duration_s * 1e9);
  sc.p_loss = o.p_loss;
  sc.sched.strategy = (o.scheduler == "wfq" || o.scheduler == "strict-wfq")
                          ? egp::SchedulerConfig::Strategy::StrictWfq
                          : egp::SchedulerConfig::Strategy::Fcfs;
  sc.gen_fail_prob = o.gen_fail;
  sc.retain_trace = !o.trace_file.empty();
  return sc;
}

egp::RequestKind kind_from_string(const std::string& s) {
  if (s == "NL" || s == "nl") return egp::RequestKind::NL;
  if (s == "CK" || s == "ck") return egp::RequestKind::CK;
  if (s == "MD" || s == "md") return egp::RequestKind::MD;
  throw std::runtime_error("unknown kind: " + s);
}

WorkloadConfig make_workload(const CommonOpts& o) {
  WorkloadConfig wl;
  if (!o.pattern.empty()) {
    wl = WorkloadConfig::pattern(o.pattern);
  } else {
    WorkloadConfig::Origin origin = o.origin == "a"   ? WorkloadConfig::Origin::AllA
                                    : o.origin == "b" ? WorkloadConfig::Origin::AllB
                                                      : WorkloadConfig::Origin::Random;
    wl = WorkloadConfig::single(kind_from_string(o.kind), o.fraction, o.k_max, origin);
  }
  wl.min_fidelity = o.min_fidelity;
  wl.max_wait_ns = static_cast<des::SimTime>(o.max_wait_s * 1e9);
  wl.drain = o.drain;
  return wl;
}

int report_run(const RunResult& res, const CommonOpts& o) {
  using egp::RequestKind;
  const auto& rep = res.report;
  std::printf("run: preset=%s scheduler=%s seed=%llu duration=%.2fs p_loss=%g\n",
              rep.preset.c_str(), rep.scheduler.c_str(),
              static_cast<unsigned long long>(rep.seed), rep.duration_s, rep.p_loss);
  std::printf("  attempts=%llu heralds=%llu oks=%llu expired=%llu timeouts=%llu msgs=%llu "
              "drops=%llu\n",
              static_cast<unsigned long long>(rep.attempts),
              static_cast<unsigned long long>(rep.heralds),
              static_cast<unsigned long long>(rep.oks),
              static_cast<unsigned long long>(rep.expired_pairs),
              static_cast<unsigned long long>(rep.err_timeout),
              static_cast<unsigned long long>(rep.messages_sent),
              static_cast<unsigned long long>(rep.messages_dropped));
  for (RequestKind k : {RequestKind::NL, RequestKind::CK, RequestKind::MD}) {
    auto s = rep.summary(k);
    if (s.pairs == 0 && s.requests_completed == 0) continue;
    std::printf("  %s: pairs=%llu throughput=%.3f/s fidelity=%.4f goodness=%.4f "
                "latency=%.3fs scaled=%.3fs\n",
                sim::kind_name(k), static_cast<unsigned long long>(s.pairs), s.throughput_per_s,
                s.mean_fidelity, s.mean_goodness, s.mean_latency_s, s.mean_scaled_latency_s);
  }
  std::printf("  grants=%llu proto_errors=%llu flow_blocked=%llu oom=%llu reinits=%llu "
              "suspensions=%llu stale=%llu expires=%llu tests=%llu\n",
              static_cast<unsigned long long>(rep.grants),
              static_cast<unsigned long long>(rep.proto_errors),
              static_cast<unsigned long long>(rep.flow_blocked),
              static_cast<unsigned long long>(rep.out_of_mem_events),
              static_cast<unsigned long long>(rep.reinits),
              static_cast<unsigned long long>(rep.suspensions),
              static_cast<unsigned long long>(rep.stale_replies),
              static_cast<unsigned long long>(rep.expire_ranges),
              static_cast<unsigned long long>(rep.test_rounds));
  if (rep.md_fidelity) {
    std::printf("  MD QBER (X,Y,Z) = (%.4f, %.4f, %.4f) -> F = %.4f\n", rep.md_qber[0],
                rep.md_qber[1], rep.md_qber[2], *rep.md_fidelity);
  }
  if (!o.out_dir.empty()) {
    rep.export_files(o.out_dir);
    std::printf("  exported requests.csv, pairs.csv, summary.json to %s\n", o.out_dir.c_str());
  }
  if (!o.trace_file.empty()) {
    std::ofstream trace_out(o.trace_file);
    trace_out << res.trace_text;
    std::printf("  trace (%llu rows) written to %s\n",
                static_cast<unsigned long long>(res.trace_rows), o.trace_file.c_str());
  }
  if (!res.invariants_ok) {
    for (const auto& v : res.violations) std::printf("  INVARIANT VIOLATION: %s\n", v.c_str());
    return 1;
  }
  std::printf("  invariants: ok\n");
  return 0;
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heralded-entanglement link layer simulator"};
  app.require_subcommand(1);

  CommonOpts o;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--preset", o.preset, "lab or qlink");
    cmd->add_option("--seed", o.seed, "run seed");
    cmd->add_option("--duration", o.duration_s, "workload window, seconds");
    cmd->add_option("--ploss", o.p_loss, "classical per-message loss probability");
    cmd->add_option("--scheduler", o.scheduler, "fcfs or wfq");
    cmd->add_option("--out", o.out_dir, "output directory for CSV/JSON export");
    cmd->add_option("--config", o.config_file, "config file (key=value sections)");
    cmd->add_option("--pattern", o.pattern,
                    "usage pattern (Uniform, MoreNL, MoreCK, MoreMD, NoNLMoreCK, NoNLMoreMD)");
    cmd->add_option("--kind", o.kind, "single-kind workload: NL, CK or MD");
    cmd->add_option("--fraction", o.fraction, "load fraction f_P");
    cmd->add_option("--kmax", o.k_max, "maximum pairs per request");
    cmd->add_option("--origin", o.origin, "request origin: a, b or random");
    cmd->add_option("--fmin", o.min_fidelity, "requested minimum fidelity");
    cmd->add_option("--max-wait", o.max_wait_s, "request timeout, seconds (0 = none)");
    cmd->add_flag("--drain", o.drain, "keep cycling after the load window until quiescent");
    cmd->add_option("--genfail", o.gen_fail, "local pulse-sequence failure probability");
    cmd->add_option("--trace", o.trace_file, "write the classical-message trace CSV here");
  };

  auto* run_cmd = app.add_subcommand("run", "run one scenario");
  add_common(run_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "grid of runs over one parameter");
  add_common(sweep_cmd);
  std::string sweep_param = "ploss";
  std::string sweep_values = "0";
  int sweep_seeds = 5;
  int threads = 0;
  sweep_cmd->add_option("--param", sweep_param, "alpha, fmin, fp or ploss");
  sweep_cmd->add_option("--values", sweep_values, "comma-separated grid values");
  sweep_cmd->add_option("--seeds", sweep_seeds, "seeds per grid point");
  sweep_cmd->add_option("--threads", threads, "worker threads (0 = hardware)");

  auto* validate_cmd = app.add_subcommand("validate", "physical-layer validation sweep");
  add_common(validate_cmd);
  std::string alphas = "0.1,0.2,0.3,0.5";
  std::uint64_t pairs = 300;
  validate_cmd->add_option("--alphas", alphas, "comma-separated bright-state populations");
  validate_cmd->add_option("--pairs", pairs, "heralded pairs per point");

  auto* feu_cmd = app.add_subcommand("calibrate-feu", "build and export the FEU table");
  add_common(feu_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (!o.config_file.empty()) apply_config_file(o.config_file, o);

    if (run_cmd->parsed()) {
      RunResult res = sim::run_scenario(make_scenario(o), make_workload(o));
      return report_run(res, o);
    }

    if (validate_cmd->parsed()) {
      ScenarioConfig sc = make_scenario(o);
      sc.calibrate();
      std::mt19937_64 rng(sc.seed);
      std::printf("alpha   attempts   heralds  p_succ      F(true)   F(corr,psi+)    F(corr,psi-)\n");
      for (double a : parse_values(alphas)) {
        auto pt = sim::validate_alpha(sc, a, pairs, 500000000ull, rng);
        std::printf("%-7.3f %-10llu %-8llu %-11.3e %-9.4f %.4f+-%.4f  %.4f+-%.4f\n", a,
                    static_cast<unsigned long long>(pt.attempts),
                    static_cast<unsigned long long>(pt.heralds), pt.p_succ_hat, pt.mean_fidelity,
                    pt.corr_fidelity[0], pt.corr_sigma[0], pt.corr_fidelity[1], pt.corr_sigma[1]);
      }
      return 0;
    }

    if (feu_cmd->parsed()) {
      ScenarioConfig sc = make_scenario(o);
      sc.calibrate();
      egp::FeuModel feu = egp::FeuModel::build(sc.feu_scenario());
      nlohmann::json j;
      j["preset"] = sim::preset_name(sc.preset);
      j["collection_scale"] = sc.emission.collection_scale;
      j["table"] = nlohmann::json::array();
      for (const auto& e : feu.table()) {
        j["table"].push_back({{"alpha", e.alpha},
                              {"p_succ", e.p_succ},
                              {"fidelity_herald", e.fidelity_herald},
                              {"fidelity_keep", e.fidelity_keep}});
      }
      std::string path = o.out_dir.empty() ? "feu_table.json" : o.out_dir + "/feu_table.json";
      if (!o.out_dir.empty()) std::filesystem::create_directories(o.out_dir);
      std::ofstream out(path);
      out << j.dump(2);
      std::printf("FEU table (%zu points) written to %s\n", feu.table().size(), path.c_str());
      return 0;
    }

    if (sweep_cmd->parsed()) {
      ScenarioConfig base = make_scenario(o);
      base.calibrate();
      if (sweep_param == "alpha") {
        std::mt19937_64 rng(base.seed);
        std::printf("alpha,p_succ,fidelity\n");
        for (double a : parse_values(sweep_values)) {
          auto pt = sim::validate_alpha(base, a, 300, 200000000ull, rng);
          std::printf("%g,%.6e,%.5f\n", a, pt.p_succ_hat, pt.mean_fidelity);
        }
        return 0;
      }
      std::vector<sim::SweepJob> jobs;
      std::vector<std::pair<double, std::uint64_t>> labels;
      for (double v : parse_values(sweep_values)) {
        for (int s = 0; s < sweep_seeds; ++s) {
          CommonOpts oo = o;
          if (sweep_param == "ploss") oo.p_loss = v;
          else if (sweep_param == "fmin") oo.min_fidelity = v;
          else if (sweep_param == "fp") oo.fraction = v;
          else throw std::runtime_error("unknown sweep parameter: " + sweep_param);
          ScenarioConfig sc = make_scenario(oo);
          sc.emission.collection_scale = base.emission.collection_scale;
          sc.calibrated = true;
          sc.seed = o.seed + static_cast<std::uint64_t>(s);
          jobs.push_back({sc, make_workload(oo)});
          labels.emplace_back(v, sc.seed);
        }
      }
      int nthreads = threads > 0 ? threads : sim::hardware_threads();
      auto results = sim::run_sweep(jobs, nthreads);
      std::printf("param,value,seed,kind,pairs,throughput,fidelity,scaled_latency_s,ok\n");
      bool all_ok = true;
      for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& rep = results[i].report;
        all_ok = all_ok && results[i].invariants_ok;
        for (egp::RequestKind k :
             {egp::RequestKind::NL, egp::RequestKind::CK, egp::RequestKind::MD}) {
          auto s = rep.summary(k);
          if (s.pairs == 0 && s.requests_completed == 0) continue;
          std::printf("%s,%g,%llu,%s,%llu,%.4f,%.4f,%.4f,%d\n", sweep_param.c_str(),
                      labels[i].first, static_cast<unsigned long long>(labels[i].second),
                      sim::kind_name(k), static_cast<unsigned long long>(s.pairs),
                      s.throughput_per_s, s.mean_fidelity, s.mean_scaled_latency_s,
                      results[i].invariants_ok ? 1 : 0);
        }
      }
      return all_ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
