#include "mprx/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <thread>

namespace mprx {

const char* receiver_name(Receiver r) {
  switch (r) {
    case Receiver::EpQaL: return "EP-QA-L";
    case Receiver::EpQa: return "EP-QA";
    case Receiver::BpGa: return "BP-GA";
    case Receiver::MfbPcsi: return "MFB-PCSI";
  }
  return "?";
}

Receiver receiver_from_name(const std::string& name) {
  if (name == "EP-QA-L" || name == "ep-qa-l") return Receiver::EpQaL;
  if (name == "EP-QA" || name == "ep-qa") return Receiver::EpQa;
  if (name == "BP-GA" || name == "bp-ga") return Receiver::BpGa;
  if (name == "MFB-PCSI" || name == "mfb-pcsi") return Receiver::MfbPcsi;
  throw ConfigError("unknown receiver variant: " + name);
}

void SimConfig::validate() const {
  frame.validate();
  if (rows < 1 || cols < 1) throw ConfigError("array geometry must be positive");
  if (taps < 1) throw ConfigError("need at least one channel tap");
  if (taps > frame.subcarriers) throw ConfigError("more taps than subcarriers");
  if (turbo_iters < 1) throw ConfigError("need at least one turbo iteration");
  if (inner_first < 1 || inner_rest < 1) throw ConfigError("inner iterations must be >= 1");
  if (ebn0_grid.empty()) throw ConfigError("empty Eb/N0 grid");
  if (trials < 1) throw ConfigError("need at least one trial");
  if (workers < 1) throw ConfigError("need at least one worker");
  if (damping < 0.0 || damping >= 1.0) throw ConfigError("damping must be in [0, 1)");
  if (frame.pilot_count < taps)
    std::fprintf(stderr, "warning: K_p (%d) below tap count (%d); pilot-only estimation is underdetermined\n",
                 frame.pilot_count, taps);
}

TurboResult run_turbo_receiver(const Frame& frame, const RxObservation& rx,
                               const SimConfig& cfg) {
  const FrameConfig& fc = frame.cfg;
  const Constellation cons = Constellation::make(fc.bits_per_symbol);
  DetectorDims dims{fc.symbols, cfg.antennas(), fc.users, fc.subcarriers};
  std::vector<std::uint8_t> active(static_cast<std::size_t>(fc.symbols) * fc.subcarriers, 0);
  for (const auto& [t, k] : frame.data_pos) active[static_cast<std::size_t>(t) * fc.subcarriers + k] = 1;

  DetectorState det = init_detector(dims, active);
  det.damping = cfg.damping;
  EstimatorState est = init_estimator(dims.M, dims.N, dims.K, cfg.taps);
  const bool learned = cfg.receiver == Receiver::EpQaL;
  if (!learned) oracle_pdp_mode(est, exponential_pdp(cfg.taps, cfg.pdp_decay));
  const bool bpga = cfg.receiver == Receiver::BpGa;
  BpgaState bp;
  if (bpga) bp = init_bpga(dims, cons);

  pilot_messages(rx, frame, rx.noise_var, det);

  const std::size_t coded_len = frame.coded_bits[0].size();
  std::vector<std::vector<double>> la(fc.users, std::vector<double>(coded_len, 0.0));
  std::vector<std::vector<double>> le(fc.users, std::vector<double>(coded_len, 0.0));
  const Trellis trellis(cfg.code);

  TurboResult out;
  out.h_hat.reserve(cfg.turbo_iters);
  out.bits.resize(cfg.turbo_iters);

  for (int iter = 0; iter < cfg.turbo_iters; ++iter) {
    // Estimation half. The first iteration is pilot-only; afterwards the
    // transition nodes first emit f->w messages built from the previous
    // pass's symbol messages, then the GMP consumes them.
    if (iter > 0) {
      interference_stats(det, rx, rx.noise_var);
      if (bpga)
        bpga_msg_to_w(det, bp, cons);
      else
        ep_msg_to_w(det);
    }
    pdp_update(est);  // refreshes the prior only in learned mode
    gmp_pass(est, det, iter == 0 ? cfg.inner_first : cfg.inner_rest, cfg.zero_based_taps);
    out.h_hat.push_back(est.h_mean);
    {
      std::vector<double> pdp_now(static_cast<std::size_t>(dims.N) * cfg.taps);
      for (int n = 0; n < dims.N; ++n)
        for (int l = 0; l < cfg.taps; ++l)
          pdp_now[static_cast<std::size_t>(n) * cfg.taps + l] = learned_power(est, n, l);
      out.learned_pdp.push_back(std::move(pdp_now));
    }

    // Detection half against the refreshed channel messages.
    interference_stats(det, rx, rx.noise_var);
    if (bpga) {
      bpga_deltas(det, bp, cons);
      bpga_extrinsic_llrs(det, bp, frame, cons, la, &le);
    } else {
      ep_msg_to_x(det);
      combine_to_mapper(det);
      detector_extrinsic_llrs(det, frame, cons, la, &le);
    }

    out.bits[iter].resize(fc.users);
    for (int n = 0; n < fc.users; ++n) {
      std::vector<double> dein(coded_len);
      for (std::size_t i = 0; i < coded_len; ++i) dein[frame.perms[n][i]] = le[n][i];
      DecodeResult dec = bcjr_decode(dein, trellis, cfg.code.terminate);
      for (std::size_t i = 0; i < coded_len; ++i) {
        double v = dec.extrinsic[frame.perms[n][i]];
        la[n][i] = v > kLlrClamp ? kLlrClamp : (v < -kLlrClamp ? -kLlrClamp : v);
      }
      out.bits[iter][n] = std::move(dec.info_bits);
    }

    if (bpga)
      bpga_update_symbols(det, bp, frame, cons, la);
    else
      detector_update_symbols(det, frame, cons, la);

    if (cfg.early_exit && iter > 0 && out.bits[iter] == out.bits[iter - 1]) {
      // decisions settled: replicate the snapshots for the remaining rounds
      for (int rest = iter + 1; rest < cfg.turbo_iters; ++rest) {
        out.h_hat.push_back(out.h_hat.back());
        out.learned_pdp.push_back(out.learned_pdp.back());
        out.bits[rest] = out.bits[iter];
      }
      break;
    }
  }
  return out;
}

double nmse(const ChannelRealization& truth, const std::vector<cplx>& h_hat, int* skipped) {
  double acc = 0.0;
  int used = 0, skip = 0;
  for (int m = 0; m < truth.M; ++m)
    for (int n = 0; n < truth.N; ++n) {
      double num = 0.0, den = 0.0;
      for (int l = 0; l < truth.L; ++l) {
        const std::size_t i = truth.cir_idx(m, n, l);
        num += std::norm(truth.cir[i] - h_hat[i]);
        den += std::norm(truth.cir[i]);
      }
      if (den <= 0.0) {
        ++skip;
        continue;
      }
      acc += num / den;
      ++used;
    }
  if (skip > 0)
    std::fprintf(stderr, "warning: nmse skipped %d zero-energy link%s\n", skip,
                 skip == 1 ? "" : "s");
  if (skipped) *skipped = skip;
  if (used == 0) return 0.0;
  return acc / used;
}

double ber(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  if (a.size() != b.size()) throw ConfigError("ber: length mismatch");
  if (a.empty()) return 0.0;
  long e = 0;
  for (std::size_t i = 0; i < a.size(); ++i) e += (a[i] ^ b[i]) & 1;
  return static_cast<double>(e) / static_cast<double>(a.size());
}

std::vector<std::vector<std::uint8_t>> mfb_pcsi(const Frame& frame, const RxObservation& rx,
                                                const ChannelRealization& truth,
                                                const CodeConfig& code) {
  const FrameConfig& fc = frame.cfg;
  const Constellation cons = Constellation::make(fc.bits_per_symbol);
  const Trellis trellis(code);
  const int q = fc.bits_per_symbol;
  std::vector<std::vector<std::uint8_t>> out(fc.users);
  std::vector<double> la_zero(q, 0.0);
  std::vector<double> le(q, 0.0);
  for (int n = 0; n < fc.users; ++n) {
    std::vector<double> coded_llr(frame.coded_bits[n].size());
    for (std::size_t i = 0; i < frame.data_pos.size(); ++i) {
      const auto [t, k] = frame.data_pos[i];
      cplx mf(0, 0);
      double h2 = 0.0;
      for (int m = 0; m < truth.M; ++m) {
        cplx cancelled = rx.y[rx.idx(t, m, k)];
        for (int n2 = 0; n2 < fc.users; ++n2) {
          if (n2 == n) continue;
          cancelled -= truth.cfr[truth.cfr_idx(m, n2, k)] * frame.x[frame.x_idx(t, n2, k)];
        }
        mf += std::conj(truth.cfr[truth.cfr_idx(m, n, k)]) * cancelled;
        h2 += std::norm(truth.cfr[truth.cfr_idx(m, n, k)]);
      }
      const cplx eff = mf / h2;
      const double eff_var = rx.noise_var / h2;
      extrinsic_llrs(eff, eff_var, la_zero, cons, le.data());
      for (int b = 0; b < q; ++b) coded_llr[i * q + b] = le[b];
    }
    std::vector<double> dein(coded_llr.size());
    for (std::size_t i = 0; i < coded_llr.size(); ++i) dein[frame.perms[n][i]] = coded_llr[i];
    out[n] = bcjr_decode(dein, trellis, code.terminate).info_bits;
  }
  return out;
}

// ---------------------------------------------------------------------------

const char* flop_algo_name(FlopAlgo a) {
  switch (a) {
    case FlopAlgo::EpQaL: return "EP-QA-L";
    case FlopAlgo::EpQa: return "EP-QA";
    case FlopAlgo::BpGa: return "BP-GA";
    case FlopAlgo::BpMf: return "BP-MF";
    case FlopAlgo::BpMfM: return "BP-MF-M";
  }
  return "?";
}

double flops_detection(const FlopConfig& c, FlopAlgo algo) {
  const double T = c.T, M = c.M, N = c.N, K = c.K, Kp = c.Kp, Q = c.Q;
  const double A = std::pow(2.0, c.Q);
  const double llr_term = (23 * A + 3 * Q * A + Q) * T * N * K;
  switch (algo) {
    case FlopAlgo::EpQaL:
    case FlopAlgo::EpQa:
      return 47 * T * M * N * K + (11 * N + 4) * M * (K - Kp) + llr_term;
    case FlopAlgo::BpGa:
      return (28 * A + 33) * T * M * N * K + (2 * A + 3 * Q * A + Q) * T * N * K;
    case FlopAlgo::BpMf:
      return 19 * T * M * N * K + (11 * N + 4) * M * (K - Kp) + llr_term;
    case FlopAlgo::BpMfM:
      return 33 * T * M * N * K + (11 * N + 4) * M * (K - Kp) + llr_term;
  }
  return 0.0;
}

double flops_channel_estimation(const FlopConfig& c, FlopAlgo algo) {
  const double T = c.T, M = c.M, N = c.N, K = c.K, Kp = c.Kp, L = c.L, G = c.G;
  switch (algo) {
    case FlopAlgo::EpQaL:
      return M * N * (20 * K * std::log2(K) + 30 * T * K + 11 * K - 26 * T * Kp + 13 * Kp + 18 * L - 2);
    case FlopAlgo::EpQa:
    case FlopAlgo::BpGa:
      return M * N * (20 * K * std::log2(K) + 30 * T * K + 11 * K - 26 * T * Kp + 13 * Kp + 14 * L - 2);
    case FlopAlgo::BpMf:
      return M * N * (16 * K * K * K + 12 * K * K + 17 * T * K - K) + 2 * T * N * K - 2 * N * K - 2 * M * N;
    case FlopAlgo::BpMfM:
      return M * N * (118 * G * G + 68 * G - 4) * K - 112 * G * G * G - 92 * G * G * G + 5 * G;
  }
  return 0.0;
}

double flop_estimate(const FlopConfig& c, FlopAlgo algo) {
  return flops_detection(c, algo) + flops_channel_estimation(c, algo);
}

// ---------------------------------------------------------------------------

TrialMetrics run_trial(const SimConfig& cfg, std::size_t grid_index, std::size_t trial_index,
                       TurboResult* detail) {
  const FrameConfig& fc = cfg.frame;
  const double ebn0 = cfg.ebn0_grid[grid_index];
  const double eta = spectral_efficiency(fc, fc.cp_len);
  const double sigma2 =
      ebn0_to_symbol_noise(ebn0, fc, cfg.antennas(), cfg.code.rate(), eta);

  Rng rng_ch = Rng::derive(cfg.master_seed, {grid_index, trial_index, 0});
  Rng rng_bits = Rng::derive(cfg.master_seed, {grid_index, trial_index, 1});
  Rng rng_noise = Rng::derive(cfg.master_seed, {grid_index, trial_index, 2});
  const std::uint64_t frame_seed = Rng::derive(cfg.master_seed, {grid_index, trial_index, 3}).next();

  const ArrayGeometry geom{cfg.rows, cfg.cols, 1.0, 1.0};
  const PowerDelayProfile pdp = exponential_pdp(cfg.taps, cfg.pdp_decay);
  const ChannelRealization ch = sample_channel(rng_ch, geom, fc.users, cfg.taps,
                                               fc.subcarriers, pdp, cfg.angles,
                                               cfg.zero_based_taps);

  const Constellation cons = Constellation::make(fc.bits_per_symbol);
  const int n_info = info_bits_per_user(fc, cfg.code);
  std::vector<std::vector<std::uint8_t>> bits(fc.users, std::vector<std::uint8_t>(n_info));
  for (auto& u : bits)
    for (auto& b : u) b = static_cast<std::uint8_t>(rng_bits.next() & 1);
  const Frame frame = assemble_frame(bits, fc, cfg.code, cons, frame_seed);
  const RxObservation rx = synthesize_rx(ch, frame, sigma2, rng_noise);

  TrialMetrics tm;
  tm.bits_per_iter = static_cast<long>(fc.users) * n_info;
  if (cfg.receiver == Receiver::MfbPcsi) {
    auto hat = mfb_pcsi(frame, rx, ch, cfg.code);
    long errs = 0;
    for (int n = 0; n < fc.users; ++n)
      for (int i = 0; i < n_info; ++i) errs += (hat[n][i] ^ bits[n][i]) & 1;
    tm.nmse.push_back(0.0);
    tm.bit_errors.push_back(errs);
    return tm;
  }

  const TurboResult res = run_turbo_receiver(frame, rx, cfg);
  tm.nmse.resize(cfg.turbo_iters);
  tm.bit_errors.resize(cfg.turbo_iters);
  for (int it = 0; it < cfg.turbo_iters; ++it) {
    tm.nmse[it] = nmse(ch, res.h_hat[it]);
    long errs = 0;
    for (int n = 0; n < fc.users; ++n)
      for (int i = 0; i < n_info; ++i) errs += (res.bits[it][n][i] ^ bits[n][i]) & 1;
    tm.bit_errors[it] = errs;
  }
  if (detail) *detail = res;
  return tm;
}

std::vector<MetricRecord> monte_carlo(const SimConfig& cfg) {
  cfg.validate();
  const std::size_t n_grid = cfg.ebn0_grid.size();
  const std::size_t n_tasks = n_grid * static_cast<std::size_t>(cfg.trials);
  std::vector<TrialMetrics> results(n_tasks);

  std::atomic<std::size_t> cursor{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t task = cursor.fetch_add(1);
      if (task >= n_tasks) return;
      const std::size_t g = task / cfg.trials;
      const std::size_t t = task % cfg.trials;
      results[task] = run_trial(cfg, g, t);
    }
  };
  if (cfg.workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(cfg.workers);
    for (int i = 0; i < cfg.workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // ordered reduction: identical output for any worker count
  std::vector<MetricRecord> records;
  for (std::size_t g = 0; g < n_grid; ++g) {
    const std::size_t iters = results[g * cfg.trials].nmse.size();
    for (std::size_t it = 0; it < iters; ++it) {
      MetricRecord rec;
      rec.variant = receiver_name(cfg.receiver);
      rec.ebn0_db = cfg.ebn0_grid[g];
      rec.turbo_iter = static_cast<int>(it) + 1;
      rec.seed = cfg.master_seed;
      double nm = 0.0;
      long errs = 0, bits = 0;
      for (int t = 0; t < cfg.trials; ++t) {
        const TrialMetrics& tm = results[g * cfg.trials + t];
        nm += tm.nmse[it];
        errs += tm.bit_errors[it];
        bits += tm.bits_per_iter;
      }
      rec.nmse = nm / cfg.trials;
      rec.ber = bits > 0 ? static_cast<double>(errs) / static_cast<double>(bits) : 0.0;
      rec.frames = cfg.trials;
      rec.bits = bits;
      records.push_back(std::move(rec));
    }
  }
  return records;
}

void write_metrics_csv(const std::vector<MetricRecord>& records, std::ostream& out) {
  out << "variant,eb_n0_db,turbo_iter,nmse,ber,frames,bits,seed\n";
  char buf[256];
  for (const MetricRecord& r : records) {
    std::snprintf(buf, sizeof(buf), "%s,%.10g,%d,%.10g,%.10g,%ld,%ld,%llu\n", r.variant.c_str(),
                  r.ebn0_db, r.turbo_iter, r.nmse, r.ber, r.frames, r.bits,
                  static_cast<unsigned long long>(r.seed));
    out << buf;
  }
}

std::string metrics_csv_string(const std::vector<MetricRecord>& records) {
  std::ostringstream ss;
  write_metrics_csv(records, ss);
  return ss.str();
}

}  // namespace mprx
