#include "mpdet/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <thread>

#include "mpdet/amp.hpp"
#include "mpdet/amp_gnn.hpp"
#include "mpdet/baselines.hpp"
#include "mpdet/errors.hpp"
#include "mpdet/oracle.hpp"
#include "mpdet/train.hpp"

namespace mpdet {

double SweepRow::standard_error() const {
  const double n = double(symbols());
  if (n <= 0) return 0.0;
  return std::sqrt(std::max(ser * (1.0 - ser), 0.0) / n);
}

namespace {

using Detector = std::function<std::vector<int>(const LinearSystem&)>;

Detector make_detector(const std::string& name, const BenchSpec& spec,
                       const Constellation& c) {
  if (name == "mmse") {
    return [&c](const LinearSystem& sys) { return mmse_detect(sys, c).hard; };
  }
  if (name == "amp") {
    const int T = spec.T;
    return [&c, T](const LinearSystem& sys) { return amp_detect(sys, c, T).hard; };
  }
  if (name == "oamp") {
    const int T = spec.T;
    return [&c, T](const LinearSystem& sys) { return oamp_detect(sys, c, T).hard; };
  }
  if (name == "map") {
    return [&c](const LinearSystem& sys) { return map_detect(sys, c); };
  }
  if (name == "amp-gnn") {
    if (spec.checkpoint_path.empty()) {
      throw InvalidArgument("detector amp-gnn requires --checkpoint");
    }
    Checkpoint ck = load_checkpoint(spec.checkpoint_path);
    auto cfg = std::make_shared<AmpGnnConfig>();
    cfg->T = spec.T > 0 ? spec.T : ck.T;
    cfg->L = spec.L > 0 ? spec.L : ck.L;
    cfg->constellation = c;
    cfg->params = ck.params;
    return [cfg](const LinearSystem& sys) {
      return amp_gnn_detect(sys, *cfg).soft.hard;
    };
  }
  throw InvalidArgument("unknown detector '" + name + "'");
}

std::vector<SweepRow> run_core(const BenchSpec& spec, int eval_N,
                               std::string extra_notes) {
  if (spec.snr_db.empty()) throw InvalidArgument("empty SNR grid");
  if (spec.detectors.empty()) throw InvalidArgument("no detectors listed");
  const Constellation c = make_constellation(spec.Q);

  int threads = spec.threads > 0
                    ? spec.threads
                    : std::max(1u, std::thread::hardware_concurrency());
  const long long min_trials = std::max<long long>(1, spec.min_trials);
  const long long max_trials =
      spec.max_trials > 0 ? spec.max_trials : 20 * min_trials;
  constexpr long long kChunk = 256;  // early-stop granularity, thread-safe

  std::vector<SweepRow> rows;
  for (const auto& name : spec.detectors) {
    Detector detect = make_detector(name, spec, c);
    for (std::size_t pi = 0; pi < spec.snr_db.size(); ++pi) {
      const double snr = spec.snr_db[pi];
      long long trials = 0, errors = 0;
      while (trials < max_trials &&
             (trials < min_trials || errors < spec.min_errors)) {
        const long long todo = std::min(kChunk, max_trials - trials);
        std::vector<long long> err(threads, 0);
        std::vector<std::exception_ptr> fail(threads);
        auto work = [&](int w) {
          try {
            for (long long k = w; k < todo; k += threads) {
              const long long trial = trials + k;
              Rng rng = make_stream(spec.seed, pi, std::uint64_t(trial));
              Sample s;
              if (spec.channel_error_var > 0.0) {
                Rng erng = make_stream(spec.seed, pi, std::uint64_t(trial),
                                       0xC51ULL);
                s = sample_transmission_csi_error(spec.M, eval_N, c, snr,
                                                  spec.channel_error_var, rng,
                                                  erng);
              } else {
                s = sample_transmission(spec.M, eval_N, c, snr, rng);
              }
              err[w] += count_symbol_errors(detect(s.system), s.labels, eval_N);
            }
          } catch (...) {
            fail[w] = std::current_exception();
          }
        };
        if (threads == 1) {
          work(0);
        } else {
          std::vector<std::thread> pool;
          for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
          for (auto& th : pool) th.join();
        }
        for (auto& e : fail) {
          if (e) std::rethrow_exception(e);
        }
        for (long long v : err) errors += v;
        trials += todo;
      }

      SweepRow row;
      row.detector = name;
      row.M = spec.M;
      row.N = eval_N;
      row.Q = spec.Q;
      row.snr_db = snr;
      row.trials = trials;
      row.errors = errors;
      row.ser = double(errors) / double(trials * eval_N);
      row.seed = spec.seed;
      row.notes = extra_notes;
      if (errors < 100) {
        row.notes += row.notes.empty() ? "low_confidence" : ";low_confidence";
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace

std::vector<SweepRow> run_ser_sweep(const BenchSpec& spec) {
  return run_core(spec, spec.N, "");
}

std::vector<SweepRow> run_robustness_users(const BenchSpec& spec) {
  const int test_N = spec.test_N > 0 ? spec.test_N : spec.N;
  if (test_N > spec.M) {
    throw InvalidArgument(
        "test_N exceeds the antenna count M (overloaded systems are not "
        "supported)");
  }
  return run_core(spec, test_N, "test_N=" + std::to_string(test_N));
}

std::vector<SweepRow> run_robustness_csi(const BenchSpec& spec) {
  if (spec.channel_error_var < 0.0) {
    throw InvalidArgument("channel_error_var must be >= 0");
  }
  std::string notes;
  if (spec.channel_error_var > 0.0) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "sigma2_e=%g", spec.channel_error_var);
    notes = buf;
  }
  return run_core(spec, spec.N, notes);
}

std::string to_csv(const std::vector<SweepRow>& rows) {
  std::string out = "detector,M,N,Q,snr_db,trials,errors,ser,seed,notes\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%d,%d,%.6g,%lld,%lld,%.10g,%llu,%s\n",
                  r.detector.c_str(), r.M, r.N, r.Q, r.snr_db, r.trials,
                  r.errors, r.ser, static_cast<unsigned long long>(r.seed),
                  r.notes.c_str());
    out += buf;
  }
  return out;
}

void write_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot open output file: " + path);
  out << to_csv(rows);
}

double snr_at_ser(const std::vector<SweepRow>& rows, const std::string& detector,
                  double target_ser) {
  std::vector<const SweepRow*> pts;
  for (const auto& r : rows) {
    if (r.detector == detector) pts.push_back(&r);
  }
  std::sort(pts.begin(), pts.end(), [](const SweepRow* a, const SweepRow* b) {
    return a->snr_db < b->snr_db;
  });
  auto eff = [](const SweepRow* r) {
    // Zero-error points enter at half an error to keep the log finite.
    return std::max(r->ser, 0.5 / double(r->symbols()));
  };
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double e1 = eff(pts[i]);
    const double e2 = eff(pts[i + 1]);
    if ((e1 >= target_ser && e2 <= target_ser)) {
      const double l1 = std::log10(e1), l2 = std::log10(e2);
      const double lt = std::log10(target_ser);
      if (l1 == l2) return pts[i]->snr_db;
      return pts[i]->snr_db + (pts[i + 1]->snr_db - pts[i]->snr_db) *
                                  (lt - l1) / (l2 - l1);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace mpdet
