// Command-line benchmark harness: training, SER sweeps, robustness
// protocols, complexity profiling and oracle consistency checks.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "mpdet/amp.hpp"
#include "mpdet/baselines.hpp"
#include "mpdet/bench.hpp"
#include "mpdet/errors.hpp"
#include "mpdet/opcount.hpp"
#include "mpdet/oracle.hpp"
#include "mpdet/pmf.hpp"
#include "mpdet/train.hpp"

namespace {

constexpr int kExitBadArguments = 2;
constexpr int kExitNumericalFailure = 3;

struct MimoSize {
  int M = 16;
  int N = 16;
};

MimoSize parse_mimo(const std::string& text) {
  MimoSize out;
  char sep = 0;
  if (std::sscanf(text.c_str(), "%d%c%d", &out.M, &sep, &out.N) != 3 ||
      (sep != 'x' && sep != 'X') || out.M < 1 || out.N < 1) {
    throw mpdet::InvalidArgument("--mimo expects MxN, e.g. 16x16");
  }
  return out;
}

int parse_mod(const std::string& text) {
  if (text == "qpsk" || text == "4qam") return 4;
  if (text == "16qam") return 16;
  if (text == "64qam") return 64;
  throw mpdet::InvalidArgument("--mod expects one of qpsk, 16qam, 64qam");
}

std::vector<double> parse_snr_grid(const std::string& text) {
  double a = 0, b = 0, step = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &a, &b, &step) == 3) {
    if (step <= 0 || b < a) {
      throw mpdet::InvalidArgument("--snr expects a:b:step with step > 0");
    }
    std::vector<double> grid;
    for (double s = a; s <= b + 1e-9; s += step) grid.push_back(s);
    return grid;
  }
  if (std::sscanf(text.c_str(), "%lf", &a) == 1 &&
      text.find(':') == std::string::npos) {
    return {a};
  }
  throw mpdet::InvalidArgument("--snr expects a:b:step or a single value");
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    out.push_back(std::stoi(text.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  if (out.empty()) throw mpdet::InvalidArgument("empty integer list");
  return out;
}

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> names;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    names.push_back(text.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return names;
}

void emit_rows(const std::vector<mpdet::SweepRow>& rows,
               const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << mpdet::to_csv(rows);
  } else {
    mpdet::write_csv(rows, out_path);
    std::cout << "wrote " << rows.size() << " rows to " << out_path << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"message-passing MIMO detection toolkit"};
  app.set_config("--config", "", "line-oriented key = value defaults");
  app.require_subcommand(1);
  app.fallthrough();  // shared options may follow the subcommand

  // Shared options (also valid as config-file keys).
  std::string mimo = "16x16";
  std::string mod = "qpsk";
  std::string snr = "8:14:2";
  int layers = 10;
  int gnn_rounds = 2;
  long long trials = 10000;
  long long min_errors = 100;
  long long max_trials = 0;
  std::uint64_t seed = 1;
  std::string checkpoint_path;
  std::string out_path;
  int threads = 0;
  app.add_option("--mimo", mimo, "system size MxN")->capture_default_str();
  app.add_option("--mod", mod, "modulation: qpsk, 16qam, 64qam")
      ->capture_default_str();
  app.add_option("--snr", snr, "SNR grid in dB as a:b:step")
      ->capture_default_str();
  app.add_option("--layers", layers, "unfolded/iteration depth T")
      ->capture_default_str();
  app.add_option("--gnn-rounds", gnn_rounds, "message-passing rounds L")
      ->capture_default_str();
  app.add_option("--trials", trials, "per-point trial floor")
      ->capture_default_str();
  app.add_option("--min-errors", min_errors, "early-stop error target")
      ->capture_default_str();
  app.add_option("--max-trials", max_trials,
                 "hard per-point cap (0 = 20x trials)");
  app.add_option("--seed", seed, "base RNG seed")->capture_default_str();
  app.add_option("--checkpoint", checkpoint_path, "checkpoint path");
  app.add_option("--out", out_path, "output CSV path (default stdout)");
  app.add_option("--threads", threads, "worker threads (0 = hardware)");

  auto* train_cmd = app.add_subcommand("train", "train the unfolded detector");
  int epochs = 30;
  int samples_per_epoch = 20000;
  int batch_size = 64;
  double lr = 1e-3;
  double train_snr = 20.0;
  int val_samples = 2000;
  std::string train_users;
  train_cmd->add_option("--epochs", epochs)->capture_default_str();
  train_cmd->add_option("--samples-per-epoch", samples_per_epoch)
      ->capture_default_str();
  train_cmd->add_option("--batch-size", batch_size)->capture_default_str();
  train_cmd->add_option("--lr", lr, "Adam learning rate")
      ->capture_default_str();
  train_cmd->add_option("--train-snr", train_snr, "training SNR in dB")
      ->capture_default_str();
  train_cmd->add_option("--train-users", train_users,
                        "comma list of user counts to mix (default: N)");
  train_cmd->add_option("--val-samples", val_samples)->capture_default_str();

  std::string detectors = "amp";
  auto* sweep_cmd = app.add_subcommand("sweep", "Monte-Carlo SER sweep");
  sweep_cmd->add_option("--detectors", detectors,
                        "comma list: amp, amp-gnn, oamp, mmse, map")
      ->capture_default_str();

  int test_users = 0;
  auto* users_cmd = app.add_subcommand(
      "robust-users", "evaluate a fixed checkpoint at another user count");
  users_cmd->add_option("--detectors", detectors)->capture_default_str();
  users_cmd->add_option("--test-users", test_users, "user count at test time")
      ->required();

  double channel_error_var = 0.0;
  auto* csi_cmd = app.add_subcommand(
      "robust-csi", "sweep with imperfect channel knowledge");
  csi_cmd->add_option("--detectors", detectors)->capture_default_str();
  csi_cmd->add_option("--channel-error-var", channel_error_var,
                      "variance of the channel error")
      ->required();

  auto* complexity_cmd =
      app.add_subcommand("complexity", "closed-form multiplication counts");

  long long oracle_trials = 200;
  auto* oracle_cmd = app.add_subcommand(
      "oracle-check", "exact-enumeration consistency checks (small systems)");
  oracle_cmd->add_option("--trials", oracle_trials)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help or --version
    app.exit(e);
    return kExitBadArguments;
  }

  try {
    const MimoSize size = parse_mimo(mimo);
    const int Q = parse_mod(mod);

    if (*train_cmd) {
      mpdet::TrainConfig tc;
      tc.epochs = epochs;
      tc.samples_per_epoch = samples_per_epoch;
      tc.batch_size = batch_size;
      tc.learning_rate = lr;
      tc.train_snr_db = train_snr;
      tc.M = size.M;
      tc.train_user_counts = train_users.empty()
                                 ? std::vector<int>{size.N}
                                 : parse_int_list(train_users);
      tc.Q = Q;
      tc.T = layers;
      tc.L = gnn_rounds;
      tc.seed = seed;
      tc.threads = threads;
      tc.val_samples = val_samples;
      if (checkpoint_path.empty()) {
        throw mpdet::InvalidArgument("train requires --checkpoint OUTPUT");
      }
      mpdet::Checkpoint ck = mpdet::train(tc, &std::cout);
      mpdet::save_checkpoint(ck, checkpoint_path);
      std::cout << "saved checkpoint (best epoch " << ck.epoch << ") to "
                << checkpoint_path << "\n";
      return 0;
    }

    mpdet::BenchSpec spec;
    spec.detectors = split_names(detectors);
    spec.M = size.M;
    spec.N = size.N;
    spec.Q = Q;
    spec.snr_db = parse_snr_grid(snr);
    spec.min_trials = trials;
    spec.min_errors = min_errors;
    spec.max_trials = max_trials;
    spec.seed = seed;
    spec.checkpoint_path = checkpoint_path;
    spec.T = layers;
    spec.L = gnn_rounds;
    spec.threads = threads;

    if (*sweep_cmd) {
      emit_rows(mpdet::run_ser_sweep(spec), out_path);
      return 0;
    }
    if (*users_cmd) {
      spec.test_N = test_users;
      emit_rows(mpdet::run_robustness_users(spec), out_path);
      return 0;
    }
    if (*csi_cmd) {
      spec.channel_error_var = channel_error_var;
      emit_rows(mpdet::run_robustness_csi(spec), out_path);
      return 0;
    }

    if (*complexity_cmd) {
      mpdet::OpCountReport rep =
          mpdet::count_ops(size.M, size.N, Q, layers, gnn_rounds);
      const std::int64_t ref =
          mpdet::lmmse_reference_count(size.M, size.N, layers);
      std::cout << rep.to_string();
      std::cout << "lmmse-based reference: " << ref << " (ratio "
                << double(rep.total) / double(ref) << ")\n";
      return 0;
    }

    if (*oracle_cmd) {
      const mpdet::Constellation c = mpdet::make_constellation(Q);
      long long map_err = 0, amp_err = 0, mmse_err = 0, symbols = 0;
      double worst_dev = 0.0;
      for (long long t = 0; t < oracle_trials; ++t) {
        mpdet::Rng rng = mpdet::make_stream(seed, 0x04ac1eULL, t);
        mpdet::Sample s = mpdet::sample_transmission(
            size.M, size.N, c, spec.snr_db.front(), rng);
        mpdet::OracleResult oracle = mpdet::oracle_marginals(s.system, c);
        map_err +=
            mpdet::count_symbol_errors(oracle.map_labels, s.labels, size.N);
        amp_err += mpdet::count_symbol_errors(
            mpdet::amp_detect(s.system, c, layers).hard, s.labels, size.N);
        mmse_err += mpdet::count_symbol_errors(
            mpdet::mmse_detect(s.system, c).hard, s.labels, size.N);
        symbols += size.N;
        for (int d = 0; d < 2 * size.N; ++d) {
          worst_dev = std::max(worst_dev,
                               std::abs(oracle.marginals.row(d).sum() - 1.0));
        }
      }
      std::cout << "oracle-check: " << symbols << " symbols at "
                << spec.snr_db.front() << " dB\n"
                << "  map errors " << map_err << ", amp errors " << amp_err
                << ", mmse errors " << mmse_err << "\n"
                << "  worst marginal normalization deviation " << worst_dev
                << "\n";
      const bool ok =
          map_err <= amp_err && map_err <= mmse_err && worst_dev < 1e-9;
      std::cout << (ok ? "oracle-check PASS\n" : "oracle-check FAIL\n");
      return ok ? 0 : kExitNumericalFailure;
    }
  } catch (const mpdet::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadArguments;
  } catch (const mpdet::NonFiniteError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadArguments;
  }
  return 0;
}
