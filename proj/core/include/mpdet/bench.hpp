#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mpdet/system.hpp"

namespace mpdet {

/// Monte-Carlo benchmark description. Trials are channel-and-symbol i.i.d.
/// (one transmitted vector per channel draw). Per-trial RNG streams derive
/// from (seed, point index, trial index), so every listed detector sees the
/// same realizations and results are independent of the thread count.
struct BenchSpec {
  std::vector<std::string> detectors;  // amp, amp-gnn, oamp, mmse, map
  int M = 16, N = 16, Q = 4;
  std::vector<double> snr_db;
  long long min_trials = 1000;  // always run at least this many
  long long min_errors = 100;   // stop a point early once reached
  long long max_trials = 0;     // hard cap; 0 means 20 x min_trials
  std::uint64_t seed = 1;
  std::string checkpoint_path;  // required when amp-gnn is listed
  int T = 10, L = 2;            // iteration depth for amp / oamp / amp-gnn
  int test_N = 0;               // robustness: user count at evaluation time
  double channel_error_var = 0.0;
  int threads = 0;
};

struct SweepRow {
  std::string detector;
  int M = 0, N = 0, Q = 0;
  double snr_db = 0.0;
  long long trials = 0, errors = 0;
  double ser = 0.0;
  std::uint64_t seed = 0;
  std::string notes;

  long long symbols() const { return trials * N; }
  double standard_error() const;
};

/// SER per (detector, SNR) point with early stop at min_errors.
std::vector<SweepRow> run_ser_sweep(const BenchSpec& spec);

/// Evaluates the listed detectors at test_N users (checkpoint unchanged);
/// rejects test_N > M.
std::vector<SweepRow> run_robustness_users(const BenchSpec& spec);

/// Detectors receive H + E with E ~ CN(0, channel_error_var) while the
/// data is generated with H. channel_error_var = 0 reproduces the clean
/// sweep exactly.
std::vector<SweepRow> run_robustness_csi(const BenchSpec& spec);

std::string to_csv(const std::vector<SweepRow>& rows);
void write_csv(const std::vector<SweepRow>& rows, const std::string& path);

/// SNR at which a detector's SER curve crosses the target, by linear
/// interpolation in (snr, log ser) over this detector's rows. NaN when the
/// curve does not bracket the target.
double snr_at_ser(const std::vector<SweepRow>& rows, const std::string& detector,
                  double target_ser);

}  // namespace mpdet
