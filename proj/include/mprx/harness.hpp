#ifndef MPRX_HARNESS_HPP
#define MPRX_HARNESS_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mprx/channel_estimator.hpp"
#include "mprx/channel_model.hpp"
#include "mprx/decoder.hpp"
#include "mprx/ep_detector.hpp"
#include "mprx/link.hpp"
#include "mprx/txchain.hpp"

namespace mprx {

enum class Receiver { EpQaL, EpQa, BpGa, MfbPcsi };

const char* receiver_name(Receiver r);
Receiver receiver_from_name(const std::string& name);

struct SimConfig {
  int rows = 2;  // D
  int cols = 4;  // W
  FrameConfig frame;
  CodeConfig code;
  int taps = 8;  // L
  double pdp_decay = 6.0;
  AngleRanges angles;
  bool zero_based_taps = false;

  int turbo_iters = 8;
  int inner_first = 5;  // GMP inner iterations at the first turbo iteration
  int inner_rest = 1;
  Receiver receiver = Receiver::EpQaL;
  double damping = 0.0;     // EP message damping, 0 = off (default schedule)
  bool early_exit = false;  // stop once the decoded bits stop changing

  std::vector<double> ebn0_grid = {4, 6, 8, 10, 12};
  int trials = 100;
  std::uint64_t master_seed = 1;
  int workers = 1;

  int antennas() const { return rows * cols; }
  void validate() const;
};

/// Per turbo iteration: estimated CIR, hard information bits per user, and
/// the learned per-(user,tap) powers (diagnostics).
struct TurboResult {
  std::vector<std::vector<cplx>> h_hat;                    // iter -> M*N*L
  std::vector<std::vector<std::vector<std::uint8_t>>> bits;  // iter -> user -> info bits
  std::vector<std::vector<double>> learned_pdp;            // iter -> N*L
};

/// Full receiver schedule: pilot messages, then per turbo iteration a GMP
/// pass (5 inner at the first iteration, 1 after) followed by a
/// detection-decoding pass. The first iteration's channel estimate is
/// pilot-only; later GMP passes consume the f->w messages of the previous
/// detection pass.
TurboResult run_turbo_receiver(const Frame& frame, const RxObservation& rx,
                               const SimConfig& cfg);

/// Tap-energy-normalized squared error averaged over the (m,n) links.
/// Links with zero true energy are excluded (their count is reported
/// through skipped, when non-null).
double nmse(const ChannelRealization& truth, const std::vector<cplx>& h_hat,
            int* skipped = nullptr);

double ber(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b);

/// Matched-filter bound: per user, perfect cancellation of the other users
/// with the true channel, maximum-ratio combining, exact LLRs, one BCJR
/// pass. Returns hard info bits per user.
std::vector<std::vector<std::uint8_t>> mfb_pcsi(const Frame& frame, const RxObservation& rx,
                                                const ChannelRealization& truth,
                                                const CodeConfig& code = {});

// ---------------------------------------------------------------------------
// Complexity tables (FLOPs per turbo iteration).

enum class FlopAlgo { EpQaL, EpQa, BpGa, BpMf, BpMfM };

const char* flop_algo_name(FlopAlgo a);

struct FlopConfig {
  int T = 8, M = 64, N = 8, K = 128, Kp = 16, L = 16, Q = 4;
  int G = 4;  // Markov group size of the BP-MF-M estimator
};

double flops_detection(const FlopConfig& cfg, FlopAlgo algo);
double flops_channel_estimation(const FlopConfig& cfg, FlopAlgo algo);
double flop_estimate(const FlopConfig& cfg, FlopAlgo algo);

// ---------------------------------------------------------------------------
// Monte Carlo driver.

struct MetricRecord {
  std::string variant;
  double ebn0_db = 0.0;
  int turbo_iter = 0;
  double nmse = 0.0;
  double ber = 0.0;
  long frames = 0;
  long bits = 0;
  std::uint64_t seed = 0;
};

struct TrialMetrics {
  std::vector<double> nmse;      // per iteration
  std::vector<long> bit_errors;  // per iteration
  long bits_per_iter = 0;
};

/// One frame end to end at the given grid point. Deterministic in
/// (cfg, master_seed, grid_index, trial_index). When detail is non-null the
/// full per-iteration receiver output is copied out (diagnostics).
TrialMetrics run_trial(const SimConfig& cfg, std::size_t grid_index, std::size_t trial_index,
                       TurboResult* detail = nullptr);

/// Theta independent trials per grid point, aggregated per (Eb/N0, iteration).
/// Deterministic for a fixed master seed and any worker count.
std::vector<MetricRecord> monte_carlo(const SimConfig& cfg);

void write_metrics_csv(const std::vector<MetricRecord>& records, std::ostream& out);
std::string metrics_csv_string(const std::vector<MetricRecord>& records);

}  // namespace mprx

#endif  // MPRX_HARNESS_HPP
