// Acceptance suite: runs every gated criterion at its stated tolerance and
// prints one pass/fail line per criterion. Exit code 0 only when all pass.

#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "qlink/des/rng.hpp"
#include "qlink/net/codec.hpp"
#include "qlink/qstate/bessel.hpp"
#include "qlink/qstate/channels.hpp"
#include "qlink/qstate/povm.hpp"
#include "qlink/sim/runner.hpp"
#include "qlink/sim/sweep.hpp"
#include "qlink/sim/validate.hpp"

using namespace qlink;
using namespace qlink::sim;
using egp::RequestKind;

namespace {

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] %-34s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

double rel_diff(double a, double b) {
  double denom = std::max(std::abs(a), std::abs(b));
  return denom > 0 ? std::abs(a - b) / denom : 0.0;
}

// Regularized incomplete beta via Lentz's continued fraction.
double betacf(double a, double b, double x) {
  const int kMaxIter = 200;
  const double eps = 3e-12, fpmin = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

double inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
              b * std::log(1.0 - x);
  double front = std::exp(ln);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

// one-sided p-value that the paired differences have positive mean
double paired_t_p_value(const std::vector<double>& d) {
  const double n = static_cast<double>(d.size());
  double m = mean(d);
  double sd = sample_sd(d);
  if (sd == 0.0) return m > 0 ? 0.0 : 1.0;
  double t = m / (sd / std::sqrt(n));
  double nu = n - 1.0;
  double p_two = inc_beta(nu / 2.0, 0.5, nu / (nu + t * t));
  return t > 0 ? p_two / 2.0 : 1.0 - p_two / 2.0;
}

// ---------------------------------------------------------------------------

void criterion_1_physical_calibration() {
  ScenarioConfig sc = ScenarioConfig::lab();
  sc.calibrate();  // single-point calibration at alpha = 0.1
  std::mt19937_64 rng(12345);
  bool ok = true;
  std::string detail;
  double prev_f = 2.0;
  for (double alpha : {0.1, 0.2, 0.3, 0.5}) {
    std::uint64_t pairs = alpha <= 0.15 ? 20000 : 6000;
    auto pt = validate_alpha(sc, alpha, pairs, 800'000'000, rng);
    double target = alpha * 1e-3;
    double rel = pt.p_succ_hat / target - 1.0;
    bool p_ok = std::abs(rel) <= 0.15;
    bool f_dec = pt.mean_fidelity < prev_f;
    bool f_band = alpha > 0.3 || std::abs(pt.mean_fidelity - (1.0 - alpha)) <= 0.07;
    ok = ok && p_ok && f_dec && f_band;
    char buf[160];
    std::snprintf(buf, sizeof buf, "a=%.1f n=%llu p=%.3e(%+.1f%%) F=%.4f(1-a%+.4f); ", alpha,
                  static_cast<unsigned long long>(pt.heralds), pt.p_succ_hat, rel * 100,
                  pt.mean_fidelity, pt.mean_fidelity - (1 - alpha));
    detail += buf;
    prev_f = pt.mean_fidelity;
  }
  report("1 physical calibration", ok, detail);
}

void criterion_2_qber_identity() {
  using namespace qlink::qstate;
  // constructed channel: bit flip 8%, phase flip 5% on one half of PsiMinus
  DensityMatrix rho = DensityMatrix::from_pure(bell_state(Bell::PsiMinus));
  apply_channel(rho, KrausChannel::dephasing(0.05), {0});
  Mat x = pauli_x();
  DensityMatrix flipped = rho;
  apply_channel(flipped, KrausChannel::unitary(x), {0});
  DensityMatrix mixed(Mat((0.92 * rho.mat() + 0.08 * flipped.mat()).eval()));

  // analytic QBERs: probability of EQUAL outcomes per basis (PsiMinus is
  // anti-correlated everywhere, equal = error)
  std::array<double, 3> analytic{};
  Povm ideal = readout_povm(1.0, 1.0);
  for (int b = 0; b < 3; ++b) {
    DensityMatrix r = mixed;
    Mat u = basis_rotation(static_cast<Basis>(b));
    apply_channel(r, KrausChannel::unitary(u), {0});
    apply_channel(r, KrausChannel::unitary(u), {1});
    double p_equal = 0.0;
    for (int m = 0; m < 2; ++m) {
      Mat ea = embed(ideal.elements[m], std::vector<int>{0}, 2);
      Mat eb = embed(ideal.elements[m], std::vector<int>{1}, 2);
      p_equal += ((ea * eb * r.mat()).trace()).real();
    }
    analytic[b] = p_equal;
  }
  double f_analytic = egp::qber_to_fidelity(analytic[0], analytic[1], analytic[2]);

  // estimator over a window of N = 2000 sampled test rounds
  const std::size_t N = 2000;
  egp::FeuModel feu;
  {
    ScenarioConfig sc = ScenarioConfig::lab();
    feu = egp::FeuModel::build(sc.feu_scenario());
  }
  feu.set_window(N);
  std::mt19937_64 rng(777);
  std::array<std::uint64_t, 3> n_per{};
  for (std::size_t i = 0; i < N; ++i) {
    int b = static_cast<int>(rng() % 3);
    DensityMatrix r = mixed;
    Mat u = basis_rotation(static_cast<Basis>(b));
    apply_channel(r, KrausChannel::unitary(u), {0});
    apply_channel(r, KrausChannel::unitary(u), {1});
    // joint sampling in the computational basis
    double cell[4];
    int idx = 0;
    for (int ma = 0; ma < 2; ++ma) {
      for (int mb = 0; mb < 2; ++mb) {
        Mat ea = embed(ideal.elements[ma], std::vector<int>{0}, 2);
        Mat eb = embed(ideal.elements[mb], std::vector<int>{1}, 2);
        cell[idx++] = ((ea * eb * r.mat()).trace()).real();
      }
    }
    double ucum = des::uniform01(rng), acc = 0.0;
    int chosen = 3;
    for (int c = 0; c < 4; ++c) {
      acc += cell[c];
      if (ucum < acc) {
        chosen = c;
        break;
      }
    }
    bool equal = (chosen >> 1) == (chosen & 1);
    feu.record_test_round(static_cast<Basis>(b), equal);
    ++n_per[b];
  }
  auto est = feu.estimated_fidelity();
  double sigma2 = 0.0;
  for (int b = 0; b < 3; ++b) {
    sigma2 += 0.25 * analytic[b] * (1 - analytic[b]) / static_cast<double>(n_per[b]);
  }
  double sigma = std::sqrt(sigma2);
  bool ok = est.has_value() && std::abs(*est - f_analytic) <= 3 * sigma;
  char buf[160];
  std::snprintf(buf, sizeof buf, "analytic F=%.4f estimator F=%.4f |d|=%.4f 3s=%.4f N=%zu",
                f_analytic, est.value_or(-1.0), std::abs(est.value_or(-1) - f_analytic),
                3 * sigma, N);
  report("2 QBER identity", ok, buf);
}

struct RobustnessPoint {
  double fidelity = -1.0;
  double throughput = 0.0;
  double latency = 0.0;
  bool invariants = true;
};

RobustnessPoint robustness_point(RequestKind kind, double p_loss, int seeds, double secs) {
  std::vector<SweepJob> jobs;
  for (int s = 0; s < seeds; ++s) {
    SweepJob j;
    j.scenario = ScenarioConfig::qlink();
    j.scenario.seed = 5000 + static_cast<std::uint64_t>(s);
    j.scenario.duration_ns = static_cast<des::SimTime>(secs * 1e9);
    j.scenario.p_loss = p_loss;
    j.workload = WorkloadConfig::single(kind, 0.99, 3);
    j.workload.max_wait_ns = 12'000'000'000;
    j.workload.drain = true;
    j.workload.drain_limit_ns = 40'000'000'000;
    jobs.push_back(j);
  }
  auto results = run_sweep(jobs, 1);
  RobustnessPoint pt;
  double fid_sum = 0.0;
  std::uint64_t fid_n = 0, pair_n = 0;
  std::vector<double> lat;
  for (auto& r : results) {
    pt.invariants = pt.invariants && r.invariants_ok;
    for (const auto& p : r.report.pairs) {
      if (p.revoked) continue;
      ++pair_n;
      if (p.true_fidelity >= 0) {
        fid_sum += p.true_fidelity;
        ++fid_n;
      }
    }
    if (kind == RequestKind::MD) {
      // pool QBER-based fidelity via run-level estimates weighted by pairs
      if (r.report.md_fidelity) {
        fid_sum += *r.report.md_fidelity * static_cast<double>(r.report.pairs.size());
        fid_n += r.report.pairs.size();
      }
    }
    for (const auto& rq : r.report.requests) {
      if (rq.status == "completed") lat.push_back(rq.scaled_latency_s);
    }
  }
  pt.fidelity = fid_n ? fid_sum / static_cast<double>(fid_n) : -1.0;
  pt.throughput = static_cast<double>(pair_n) / (secs * seeds);
  pt.latency = mean(lat);
  return pt;
}

void criterion_3_robustness() {
  const double losses[] = {1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4};
  const int seeds = 20;
  bool ok = true;
  std::string detail;
  for (RequestKind kind : {RequestKind::NL, RequestKind::CK, RequestKind::MD}) {
    const double secs = kind == RequestKind::MD ? 3.0 : 6.0;
    RobustnessPoint base = robustness_point(kind, 0.0, seeds, secs);
    ok = ok && base.invariants;
    double worst_f = 0.0, worst_t = 0.0, worst_l = 0.0;
    for (double p : losses) {
      RobustnessPoint pt = robustness_point(kind, p, seeds, secs);
      ok = ok && pt.invariants;
      worst_f = std::max(worst_f, rel_diff(pt.fidelity, base.fidelity));
      worst_t = std::max(worst_t, rel_diff(pt.throughput, base.throughput));
      worst_l = std::max(worst_l, rel_diff(pt.latency, base.latency));
    }
    ok = ok && worst_f <= 0.02 && worst_t <= 0.06;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s dF=%.4f dT=%.4f (dL=%.3f reported); ",
                  kind_name(kind), worst_f, worst_t, worst_l);
    detail += buf;
  }
  report("3 robustness under message loss", ok, detail);
}

void criterion_4_scheduling() {
  const int seeds = 20;
  const double secs = 30.0;
  std::vector<double> nl_fcfs, nl_wfq, md_fcfs, md_wfq, f_fcfs, f_wfq;
  for (int s = 0; s < seeds; ++s) {
    for (int strat = 0; strat < 2; ++strat) {
      SweepJob j;
      j.scenario = ScenarioConfig::qlink();
      j.scenario.seed = 9000 + static_cast<std::uint64_t>(s);
      j.scenario.duration_ns = static_cast<des::SimTime>(secs * 1e9);
      j.scenario.sched.strategy = strat == 0 ? egp::SchedulerConfig::Strategy::Fcfs
                                             : egp::SchedulerConfig::Strategy::StrictWfq;
      j.workload = WorkloadConfig::scheduling_mix();
      auto res = run_scenario(j.scenario, j.workload);
      auto nl = res.report.summary(RequestKind::NL);
      auto md = res.report.summary(RequestKind::MD);
      double fid_sum = 0.0;
      std::uint64_t fid_n = 0;
      for (const auto& p : res.report.pairs) {
        if (!p.revoked && p.true_fidelity >= 0) {
          fid_sum += p.true_fidelity;
          ++fid_n;
        }
      }
      double fid = fid_n ? fid_sum / static_cast<double>(fid_n) : 0.0;
      if (strat == 0) {
        nl_fcfs.push_back(nl.mean_scaled_latency_s);
        md_fcfs.push_back(md.mean_scaled_latency_s);
        f_fcfs.push_back(fid);
      } else {
        nl_wfq.push_back(nl.mean_scaled_latency_s);
        md_wfq.push_back(md.mean_scaled_latency_s);
        f_wfq.push_back(fid);
      }
    }
  }
  std::vector<double> d_nl, d_md, d_f;
  for (int s = 0; s < seeds; ++s) {
    d_nl.push_back(nl_fcfs[s] - nl_wfq[s]);  // positive when WFQ is faster for NL
    d_md.push_back(md_wfq[s] - md_fcfs[s]);  // positive when WFQ slows MD
    d_f.push_back(f_fcfs[s] - f_wfq[s]);
  }
  double p_nl = paired_t_p_value(d_nl);
  bool md_up = mean(d_md) > 0;
  // fidelity indistinguishable: the paired difference is tiny or not
  // significant at the 1% level
  double p_f_one_sided = paired_t_p_value(d_f);
  double p_f = 2.0 * std::min(p_f_one_sided, 1.0 - p_f_one_sided);
  bool f_same = p_f >= 0.01 || std::abs(mean(d_f)) <= 0.01;
  bool ok = (p_nl < 0.01) && md_up && f_same;
  char buf[220];
  std::snprintf(buf, sizeof buf,
                "NL SL %.2fs->%.2fs (p=%.2e) MD SL %.2fs->%.2fs F %.4f vs %.4f (p=%.2f)",
                mean(nl_fcfs), mean(nl_wfq), p_nl, mean(md_fcfs), mean(md_wfq), mean(f_fcfs),
                mean(f_wfq), p_f);
  report("4 scheduling orderings", ok, buf);
}

void criterion_5_throughput_orderings() {
  const int seeds = 10;
  auto run_kind = [&](Preset preset, RequestKind kind, double secs, std::uint64_t base_seed) {
    std::vector<double> th;
    for (int s = 0; s < seeds; ++s) {
      SweepJob j;
      j.scenario = ScenarioConfig::make(preset);
      j.scenario.seed = base_seed + static_cast<std::uint64_t>(s);
      j.scenario.duration_ns = static_cast<des::SimTime>(secs * 1e9);
      j.workload = WorkloadConfig::single(kind, 0.99, 3);
      auto res = run_scenario(j.scenario, j.workload);
      std::uint64_t n = 0;
      for (const auto& p : res.report.pairs) {
        if (!p.revoked) ++n;
      }
      th.push_back(static_cast<double>(n) / secs);
    }
    return th;
  };
  auto lab_md = run_kind(Preset::Lab, RequestKind::MD, 8.0, 100);
  auto lab_k = run_kind(Preset::Lab, RequestKind::CK, 8.0, 100);
  auto ql_k = run_kind(Preset::QLink, RequestKind::CK, 25.0, 100);

  std::vector<double> d_mdk;
  for (int s = 0; s < seeds; ++s) d_mdk.push_back(lab_md[s] - lab_k[s]);
  double p_md = paired_t_p_value(d_mdk);
  double factor = mean(lab_k) / mean(ql_k);
  bool ok = (mean(lab_md) > mean(lab_k)) && (p_md < 0.05) && factor >= 8.0 && factor <= 20.0;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "Lab MD %.2f/s > Lab K %.2f/s (p=%.2e); Lab K / QLink K = %.2f/%.3f = %.1f",
                mean(lab_md), mean(lab_k), p_md, mean(lab_k), mean(ql_k), factor);
  report("5 throughput orderings", ok, buf);
}

void criterion_6_property_suites() {
  using namespace qlink::qstate;
  bool ok = true;
  std::string detail;

  {  // density matrix invariants across 1e5 random channel applications
    std::mt19937_64 g(99);
    DensityMatrix rho = DensityMatrix::from_pure(bell_state(Bell::PsiPlus));
    bool good = true;
    for (int i = 0; i < 100000; ++i) {
      int which = static_cast<int>(g() % 4);
      int target = static_cast<int>(g() % 2);
      double p = des::uniform01(g);
      switch (which) {
        case 0: apply_channel(rho, KrausChannel::dephasing(p), {target}); break;
        case 1: apply_channel(rho, KrausChannel::depolarizing(p), {target}); break;
        case 2: apply_channel(rho, KrausChannel::amplitude_damping(p * 0.1), {target}); break;
        case 3: apply_channel(rho, KrausChannel::unitary(pauli_y()), {target}); break;
      }
      if (i % 10000 == 0) good = good && rho.is_trace_one() && rho.is_hermitian() && rho.is_psd();
    }
    good = good && rho.is_trace_one() && rho.is_hermitian() && rho.is_psd();
    ok = ok && good;
    detail += good ? "dm:ok " : "dm:FAIL ";
  }

  {  // POVM completeness for 1e3 random mu + Kraus consistency for real mu
    std::mt19937_64 g(7);
    bool good = true;
    for (int i = 0; i < 1000; ++i) {
      double r = std::sqrt(des::uniform01(g));
      double th = 2 * M_PI * des::uniform01(g);
      Cplx mu = std::polar(r, th);
      good = good && beamsplitter_povm(mu, true).complete(1e-10) &&
             beamsplitter_povm(mu, false).complete(1e-10);
    }
    for (int i = 0; i < 300; ++i) {
      double mu = 2 * des::uniform01(g) - 1;
      Povm p = beamsplitter_povm(mu, false);
      for (std::size_t k = 0; k < p.elements.size(); ++k) {
        Mat back = (*p.kraus)[k].adjoint() * (*p.kraus)[k];
        good = good && (back - p.elements[k]).cwiseAbs().maxCoeff() < 1e-10;
      }
    }
    ok = ok && good;
    detail += good ? "povm:ok " : "povm:FAIL ";
  }

  {  // packet codec round-trip fuzz, 1e5 per variant
    std::mt19937_64 g(4242);
    bool good = true;
    using namespace qlink::net;
    auto rand_fraction = [&](int bits) {
      std::uint64_t max = (1ull << bits) - 1;
      return static_cast<double>(g() & max) / static_cast<double>(max);
    };
    for (int i = 0; i < 100000 && good; ++i) {
      DqpPacket p;
      p.ft = static_cast<DqpFrameType>(g() % 3);
      p.cseq = static_cast<std::uint8_t>(g());
      p.aid = AbsQueueId{static_cast<std::uint8_t>(g() & 0xF), static_cast<std::uint8_t>(g())};
      p.schedule_cycle = g();
      p.timeout_cycle = g();
      p.min_fidelity = rand_fraction(32);
      p.purpose_id = static_cast<std::uint16_t>(g());
      p.create_id = static_cast<std::uint16_t>(g());
      p.num_pairs = static_cast<std::uint16_t>(g());
      p.priority = static_cast<std::uint8_t>(g() & 0xF);
      p.initial_virtual_finish = static_cast<std::uint32_t>(g());
      p.est_cycles_per_pair = static_cast<std::uint32_t>(g());
      p.store = g() & 1;
      p.atomic = g() & 1;
      p.measure = g() & 1;
      p.master_req = g() & 1;
      good = good && std::get<DqpPacket>(decode(FrameKind::DqpAdd, encode(p))) == p;

      ReplyPacket rep;
      const ReplyOutcome kinds[] = {ReplyOutcome::Fail,           ReplyOutcome::QueueMismatch,
                                    ReplyOutcome::TimeMismatch,   ReplyOutcome::NoMessageOther,
                                    ReplyOutcome::SuccessPsiPlus, ReplyOutcome::SuccessPsiMinus};
      rep.ot = kinds[g() % 6];
      rep.seq = static_cast<std::uint16_t>(g());
      rep.aid = AbsQueueId{static_cast<std::uint8_t>(g() & 0xF), static_cast<std::uint8_t>(g())};
      rep.aid_peer = AbsQueueId{static_cast<std::uint8_t>(g() & 0xF), static_cast<std::uint8_t>(g())};
      good = good && std::get<ReplyPacket>(decode(FrameKind::Reply, encode(rep))) == rep;

      GenPacket gen;
      gen.aid = rep.aid;
      good = good && std::get<GenPacket>(decode(FrameKind::Gen, encode(gen))) == gen;

      OkKeepPacket okk;
      okk.create_id = static_cast<std::uint16_t>(g());
      okk.logical_qubit_id = static_cast<std::uint8_t>(g() & 0xF);
      okk.directionality = g() & 1;
      okk.seq = static_cast<std::uint16_t>(g());
      okk.purpose_id = static_cast<std::uint16_t>(g());
      okk.remote_node_id = static_cast<std::uint32_t>(g());
      okk.goodness = rand_fraction(16);
      okk.goodness_time = static_cast<std::uint16_t>(g());
      good = good && std::get<OkKeepPacket>(decode(FrameKind::OkKeep, encode(okk))) == okk;

      ErrPacket err;
      err.err = EgpError::Expired;
      err.create_id = static_cast<std::uint16_t>(g());
      err.seq_range = g() & 1;
      err.seq_low = static_cast<std::uint16_t>(g());
      err.seq_high = static_cast<std::uint16_t>(g());
      err.origin_id = static_cast<std::uint32_t>(g());
      good = good && std::get<ErrPacket>(decode(FrameKind::Err, encode(err))) == err;
    }
    ok = ok && good;
    detail += good ? "codec:ok " : "codec:FAIL ";
  }

  {  // deterministic replay + NEXT determinism + OK/EXPIRE consistency
    ScenarioConfig sc = ScenarioConfig::qlink();
    sc.seed = 4242;
    sc.duration_ns = 2'000'000'000;
    sc.p_loss = 1e-4;
    sc.retain_trace = true;
    WorkloadConfig wl = WorkloadConfig::single(RequestKind::MD, 0.99, 3);
    wl.max_wait_ns = 8'000'000'000;
    wl.drain = true;
    RunResult a = run_scenario(sc, wl);
    RunResult b = run_scenario(sc, wl);
    bool replay = a.trace_hash == b.trace_hash && a.trace_text == b.trace_text &&
                  a.report.to_json() == b.report.to_json();
    bool consistent = a.invariants_ok;
    ok = ok && replay && consistent;
    detail += replay ? "replay:ok " : "replay:FAIL ";
    detail += consistent ? "traces:ok" : "traces:FAIL";
    if (!consistent) {
      for (auto& v : a.violations) detail += " [" + v + "]";
    }
  }
  report("6 property suites", ok, detail);
}

void criterion_7_fairness() {
  const int seeds = 24;
  const double secs = 10.0;
  bool ok = true;
  std::string detail;
  for (RequestKind kind : {RequestKind::MD, RequestKind::CK}) {
    std::map<std::uint32_t, std::uint64_t> pairs_by_origin;
    std::map<std::uint32_t, std::pair<double, std::uint64_t>> fid_by_origin;
    for (int s = 0; s < seeds; ++s) {
      SweepJob j;
      j.scenario = ScenarioConfig::lab();
      j.scenario.seed = 7000 + static_cast<std::uint64_t>(s);
      j.scenario.duration_ns = static_cast<des::SimTime>(secs * 1e9);
      j.workload = WorkloadConfig::single(kind, 0.7, 1, WorkloadConfig::Origin::Random);
      auto res = run_scenario(j.scenario, j.workload);
      for (const auto& p : res.report.pairs) {
        if (p.revoked) continue;
        ++pairs_by_origin[p.origin];
        if (p.true_fidelity >= 0) {
          fid_by_origin[p.origin].first += p.true_fidelity;
          ++fid_by_origin[p.origin].second;
        } else if (p.goodness > 0) {
          fid_by_origin[p.origin].first += p.goodness;
          ++fid_by_origin[p.origin].second;
        }
      }
    }
    double ta = static_cast<double>(pairs_by_origin[1]);
    double tb = static_cast<double>(pairs_by_origin[2]);
    double th_diff = rel_diff(ta, tb);
    double fa = fid_by_origin[1].second ? fid_by_origin[1].first / fid_by_origin[1].second : 0;
    double fb = fid_by_origin[2].second ? fid_by_origin[2].first / fid_by_origin[2].second : 0;
    double f_diff = rel_diff(fa, fb);
    bool kind_ok = th_diff <= 0.10 && f_diff <= 0.04;
    ok = ok && kind_ok;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s pairs A/B=%llu/%llu dT=%.3f F A/B=%.4f/%.4f dF=%.4f; ",
                  kind_name(kind), static_cast<unsigned long long>(pairs_by_origin[1]),
                  static_cast<unsigned long long>(pairs_by_origin[2]), th_diff, fa, fb, f_diff);
    detail += buf;
  }
  report("7 fairness by origin", ok, detail);
}

}  // namespace

int main(int argc, char** argv) {
  bool quick = argc > 1 && std::string(argv[1]) == "--quick";
  std::printf("acceptance suite%s\n", quick ? " (quick subset)" : "");
  criterion_1_physical_calibration();
  criterion_2_qber_identity();
  if (!quick) {
    criterion_3_robustness();
    criterion_4_scheduling();
    criterion_5_throughput_orderings();
  }
  criterion_6_property_suites();
  if (!quick) criterion_7_fairness();
  std::printf("%s\n", failures == 0 ? "ALL CRITERIA PASSED" : "CRITERIA FAILED");
  return failures == 0 ? 0 : 1;
}
