// mprx command line: link-level simulation, complexity tables, channel export.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "mprx/harness.hpp"

using nlohmann::json;

namespace {

struct CliOptions {
  mprx::SimConfig cfg;
  std::string variant = "EP-QA-L";
  std::string out_path;
  std::string pdp_dump_path;
};

// JSON schema (all keys optional): rows, cols, users, subcarriers, pilots,
// symbols, cp_len, bits_per_symbol, taps, pdp_decay, turbo_iters,
// inner_first, inner_rest, variant, ebn0 (array), trials, seed, workers,
// zero_based_taps. Flags given on the command line override the file.
void apply_json_config(const std::string& path, CliOptions& opt) {
  std::ifstream f(path);
  if (!f) throw mprx::ConfigError("cannot open config file: " + path);
  json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw mprx::ConfigError(std::string("config parse error: ") + e.what());
  }
  auto& cfg = opt.cfg;
  try {
    if (j.contains("rows")) cfg.rows = j["rows"];
    if (j.contains("cols")) cfg.cols = j["cols"];
    if (j.contains("users")) cfg.frame.users = j["users"];
    if (j.contains("subcarriers")) cfg.frame.subcarriers = j["subcarriers"];
    if (j.contains("pilots")) cfg.frame.pilot_count = j["pilots"];
    if (j.contains("symbols")) cfg.frame.symbols = j["symbols"];
    if (j.contains("cp_len")) cfg.frame.cp_len = j["cp_len"];
    if (j.contains("bits_per_symbol")) cfg.frame.bits_per_symbol = j["bits_per_symbol"];
    if (j.contains("taps")) cfg.taps = j["taps"];
    if (j.contains("pdp_decay")) cfg.pdp_decay = j["pdp_decay"];
    if (j.contains("turbo_iters")) cfg.turbo_iters = j["turbo_iters"];
    if (j.contains("inner_first")) cfg.inner_first = j["inner_first"];
    if (j.contains("inner_rest")) cfg.inner_rest = j["inner_rest"];
    if (j.contains("variant")) opt.variant = j["variant"];
    if (j.contains("ebn0")) cfg.ebn0_grid = j["ebn0"].get<std::vector<double>>();
    if (j.contains("trials")) cfg.trials = j["trials"];
    if (j.contains("seed")) cfg.master_seed = j["seed"].get<std::uint64_t>();
    if (j.contains("workers")) cfg.workers = j["workers"];
    if (j.contains("zero_based_taps")) cfg.zero_based_taps = j["zero_based_taps"];
    if (j.contains("damping")) cfg.damping = j["damping"];
    if (j.contains("early_exit")) cfg.early_exit = j["early_exit"];
  } catch (const json::exception& e) {
    throw mprx::ConfigError(std::string("config value error: ") + e.what());
  }
}

void add_sim_flags(CLI::App* cmd, CliOptions& opt, std::string& config_path) {
  auto& cfg = opt.cfg;
  cmd->add_option("--config", config_path, "JSON config file (flags override it)");
  cmd->add_option("--rows", cfg.rows, "array rows D");
  cmd->add_option("--cols", cfg.cols, "array columns W");
  cmd->add_option("--users", cfg.frame.users, "users N");
  cmd->add_option("--subcarriers", cfg.frame.subcarriers, "subcarriers K");
  cmd->add_option("--pilots", cfg.frame.pilot_count, "pilot subcarriers per user K_p");
  cmd->add_option("--symbols", cfg.frame.symbols, "OFDM symbols per frame T");
  cmd->add_option("--cp-len", cfg.frame.cp_len, "cyclic prefix length (bookkeeping)");
  cmd->add_option("--bits-per-symbol", cfg.frame.bits_per_symbol, "2=QPSK 4=16QAM 6=64QAM");
  cmd->add_option("--taps", cfg.taps, "channel taps L");
  cmd->add_option("--pdp-decay", cfg.pdp_decay, "exponential PDP decay scale");
  cmd->add_option("--iterations", cfg.turbo_iters, "turbo iterations I");
  cmd->add_option("--inner-first", cfg.inner_first, "GMP inner iterations at turbo iteration 1");
  cmd->add_option("--inner-rest", cfg.inner_rest, "GMP inner iterations afterwards");
  cmd->add_option("--variant", opt.variant, "EP-QA-L | EP-QA | BP-GA | MFB-PCSI");
  cmd->add_option("--ebn0", cfg.ebn0_grid, "Eb/N0 grid in dB")->expected(-1);
  cmd->add_option("--trials", cfg.trials, "Monte Carlo trials per grid point");
  cmd->add_option("--seed", cfg.master_seed, "master seed");
  cmd->add_option("--workers", cfg.workers, "worker threads");
  cmd->add_flag("--zero-based-taps", cfg.zero_based_taps, "tap delays 0..L-1 instead of 1..L");
  cmd->add_option("--damping", cfg.damping, "EP message damping in [0,1), default off");
  cmd->add_flag("--early-exit", cfg.early_exit, "stop a frame once decisions settle");
  cmd->add_option("--pdp-dump", opt.pdp_dump_path,
                  "write the learned PDP per turbo iteration of one diagnostic frame");
  cmd->add_option("--out", opt.out_path, "output CSV path (default stdout)");
}

int cmd_simulate(CliOptions& opt) {
  opt.cfg.receiver = mprx::receiver_from_name(opt.variant);
  opt.cfg.validate();
  std::vector<mprx::MetricRecord> recs = mprx::monte_carlo(opt.cfg);
  if (opt.out_path.empty()) {
    mprx::write_metrics_csv(recs, std::cout);
  } else {
    std::ofstream f(opt.out_path);
    if (!f) throw std::runtime_error("cannot open " + opt.out_path);
    mprx::write_metrics_csv(recs, f);
  }
  if (!opt.pdp_dump_path.empty()) {
    if (opt.cfg.receiver == mprx::Receiver::MfbPcsi)
      throw mprx::ConfigError("--pdp-dump needs an iterative receiver variant");
    mprx::TurboResult detail;
    mprx::run_trial(opt.cfg, 0, 0, &detail);
    std::ofstream f(opt.pdp_dump_path);
    if (!f) throw std::runtime_error("cannot open " + opt.pdp_dump_path);
    f << "turbo_iter,user,tap,learned_power\n";
    const int taps = opt.cfg.taps;
    for (std::size_t it = 0; it < detail.learned_pdp.size(); ++it)
      for (int n = 0; n < opt.cfg.frame.users; ++n)
        for (int l = 0; l < taps; ++l)
          f << (it + 1) << ',' << n << ',' << l << ','
            << detail.learned_pdp[it][static_cast<std::size_t>(n) * taps + l] << '\n';
  }
  return 0;
}

int cmd_flops(const mprx::FlopConfig& fc, const std::vector<int>& k_list,
              const std::string& out_path, bool scale_pilots) {
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot open " + out_path);
    out = &file;
  }
  (*out) << "algorithm,K,detection_flops,channel_est_flops,total_flops\n";
  using mprx::FlopAlgo;
  const FlopAlgo algos[] = {FlopAlgo::EpQaL, FlopAlgo::EpQa, FlopAlgo::BpGa, FlopAlgo::BpMf,
                            FlopAlgo::BpMfM};
  char buf[256];
  for (int k : k_list) {
    mprx::FlopConfig c = fc;
    c.K = k;
    if (scale_pilots) {
      c.Kp = k / 8;
      c.L = k / 8;
    }
    for (FlopAlgo a : algos) {
      const double det = mprx::flops_detection(c, a);
      const double est = mprx::flops_channel_estimation(c, a);
      std::snprintf(buf, sizeof(buf), "%s,%d,%.10g,%.10g,%.10g\n", mprx::flop_algo_name(a), k,
                    det, est, det + est);
      (*out) << buf;
    }
  }
  return 0;
}

int cmd_gen_channel(mprx::SimConfig& cfg, const std::string& out_path,
                    const std::string& csv_path) {
  mprx::Rng rng = mprx::Rng::derive(cfg.master_seed, {0});
  const mprx::ArrayGeometry geom{cfg.rows, cfg.cols, 1.0, 1.0};
  const mprx::PowerDelayProfile pdp = mprx::exponential_pdp(cfg.taps, cfg.pdp_decay);
  const mprx::ChannelRealization ch =
      mprx::sample_channel(rng, geom, cfg.frame.users, cfg.taps, cfg.frame.subcarriers, pdp,
                           cfg.angles, cfg.zero_based_taps);
  if (out_path.empty() && csv_path.empty())
    throw mprx::ConfigError("gen-channel: give --out and/or --csv");
  if (!out_path.empty()) mprx::write_channel_binary(ch, out_path);
  if (!csv_path.empty()) mprx::write_channel_csv(ch, csv_path);
  return 0;
}

std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mprx: message-passing receiver simulator for uplink MIMO-OFDM"};
  app.require_subcommand(1);

  CliOptions sim_opt;
  std::string config_path;
  CLI::App* sim = app.add_subcommand("simulate", "run Monte Carlo BER/NMSE sweeps");
  add_sim_flags(sim, sim_opt, config_path);

  mprx::FlopConfig flop_cfg;
  std::vector<int> k_list = {64, 128, 256, 512, 1024};
  std::string flop_out;
  bool scale_pilots = true;
  CLI::App* fl = app.add_subcommand("flops", "per-iteration complexity tables");
  fl->add_option("--symbols", flop_cfg.T, "OFDM symbols T");
  fl->add_option("--antennas", flop_cfg.M, "receive antennas M");
  fl->add_option("--users", flop_cfg.N, "users N");
  fl->add_option("--bits-per-symbol", flop_cfg.Q, "bits per symbol Q");
  fl->add_option("--group", flop_cfg.G, "Markov group size G");
  fl->add_option("--subcarriers", k_list, "K values")->expected(-1);
  fl->add_flag("!--no-scaled-pilots", scale_pilots,
               "keep K_p and L fixed instead of K/8");
  fl->add_option("--pilots", flop_cfg.Kp, "pilot count (with --no-scaled-pilots)");
  fl->add_option("--taps", flop_cfg.L, "tap count (with --no-scaled-pilots)");
  fl->add_option("--out", flop_out, "output CSV path (default stdout)");

  CliOptions gen_opt;
  std::string gen_csv;
  CLI::App* gen = app.add_subcommand("gen-channel", "export a channel realization");
  gen->add_option("--rows", gen_opt.cfg.rows, "array rows D");
  gen->add_option("--cols", gen_opt.cfg.cols, "array columns W");
  gen->add_option("--users", gen_opt.cfg.frame.users, "users N");
  gen->add_option("--subcarriers", gen_opt.cfg.frame.subcarriers, "subcarriers K");
  gen->add_option("--taps", gen_opt.cfg.taps, "channel taps L");
  gen->add_option("--pdp-decay", gen_opt.cfg.pdp_decay, "exponential PDP decay scale");
  gen->add_option("--seed", gen_opt.cfg.master_seed, "seed");
  gen->add_flag("--zero-based-taps", gen_opt.cfg.zero_based_taps, "tap delays 0..L-1");
  gen->add_option("--out", gen_opt.out_path, "binary output path");
  gen->add_option("--csv", gen_csv, "CSV output path");

  try {
    // config file first so explicit flags take precedence during parse
    const std::string pre = find_config_arg(argc, argv);
    if (!pre.empty()) apply_json_config(pre, sim_opt);
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      int code = app.exit(e);
      return code == 0 ? 0 : 2;
    }
    if (sim->parsed()) return cmd_simulate(sim_opt);
    if (fl->parsed()) return cmd_flops(flop_cfg, k_list, flop_out, scale_pilots);
    if (gen->parsed()) return cmd_gen_channel(gen_opt.cfg, gen_opt.out_path, gen_csv);
  } catch (const mprx::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
