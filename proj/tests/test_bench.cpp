#include <doctest.h>

#include <cmath>

#include "mpdet/bench.hpp"
#include "mpdet/errors.hpp"
#include "mpdet/train.hpp"

using namespace mpdet;

namespace {

BenchSpec small_spec() {
  BenchSpec spec;
  spec.detectors = {"mmse"};
  spec.M = 4;
  spec.N = 4;
  spec.Q = 4;
  spec.snr_db = {6.0, 10.0};
  spec.min_trials = 300;
  spec.min_errors = 30;
  spec.seed = 77;
  return spec;
}

}  // namespace

TEST_SUITE_BEGIN("bench");

TEST_CASE("csv output is deterministic and schema stable") {
  BenchSpec spec = small_spec();
  auto rows1 = run_ser_sweep(spec);
  auto rows2 = run_ser_sweep(spec);
  CHECK(to_csv(rows1) == to_csv(rows2));
  CHECK(to_csv(rows1).rfind("detector,M,N,Q,snr_db,trials,errors,ser,seed,notes\n",
                            0) == 0);

  spec.threads = 1;
  auto rows3 = run_ser_sweep(spec);
  spec.threads = 2;
  auto rows4 = run_ser_sweep(spec);
  CHECK(to_csv(rows3) == to_csv(rows4));  // thread count cannot matter
}

TEST_CASE("ser values are sane and non-increasing in snr") {
  BenchSpec spec = small_spec();
  spec.detectors = {"mmse", "amp"};
  spec.snr_db = {4.0, 8.0, 12.0};
  spec.min_trials = 600;
  auto rows = run_ser_sweep(spec);
  REQUIRE(rows.size() == 6);
  for (const auto& r : rows) {
    CHECK(r.ser >= 0.0);
    CHECK(r.ser <= 1.0);
    CHECK(r.errors <= r.symbols());
  }
  for (int d = 0; d < 2; ++d) {
    for (int i = 1; i < 3; ++i) {
      const auto& a = rows[d * 3 + i - 1];
      const auto& b = rows[d * 3 + i];
      const double slack =
          2.0 * std::sqrt(std::pow(a.standard_error(), 2) +
                          std::pow(b.standard_error(), 2));
      CHECK(b.ser <= a.ser + slack);
    }
  }
}

TEST_CASE("a noiseless point reports zero errors and a confidence flag") {
  BenchSpec spec = small_spec();
  spec.snr_db = {60.0};
  spec.min_trials = 500;
  auto rows = run_ser_sweep(spec);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].errors == 0);
  CHECK(rows[0].ser == 0.0);
  CHECK(rows[0].trials >= 500);
  CHECK(rows[0].notes.find("low_confidence") != std::string::npos);
}

TEST_CASE("early stop kicks in once enough errors are seen") {
  BenchSpec spec = small_spec();
  spec.snr_db = {0.0};  // very noisy: errors arrive immediately
  spec.min_trials = 256;
  spec.max_trials = 100000;
  spec.min_errors = 50;
  auto rows = run_ser_sweep(spec);
  CHECK(rows[0].errors >= 50);
  CHECK(rows[0].trials < 10000);  // stopped long before the cap
}

TEST_CASE("invalid specs are rejected") {
  BenchSpec spec = small_spec();
  spec.detectors = {"does-not-exist"};
  CHECK_THROWS_AS(run_ser_sweep(spec), InvalidArgument);

  BenchSpec no_ck = small_spec();
  no_ck.detectors = {"amp-gnn"};
  CHECK_THROWS_AS(run_ser_sweep(no_ck), InvalidArgument);

  BenchSpec empty = small_spec();
  empty.snr_db = {};
  CHECK_THROWS_AS(run_ser_sweep(empty), InvalidArgument);

  BenchSpec users = small_spec();
  users.test_N = 6;  // exceeds M = 4
  CHECK_THROWS_AS(run_robustness_users(users), InvalidArgument);
}

TEST_CASE("user-count robustness evaluates at the test count") {
  BenchSpec spec = small_spec();
  spec.M = 8;
  spec.N = 8;
  spec.test_N = 5;
  spec.detectors = {"amp"};
  spec.snr_db = {10.0};
  auto rows = run_robustness_users(spec);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].N == 5);
  CHECK(rows[0].notes.find("test_N=5") != std::string::npos);
}

TEST_CASE("csi error runs reduce to the clean sweep at zero variance") {
  BenchSpec spec = small_spec();
  spec.detectors = {"amp"};
  auto clean = run_ser_sweep(spec);
  spec.channel_error_var = 0.0;
  auto zero = run_robustness_csi(spec);
  CHECK(to_csv(clean) == to_csv(zero));

  // Catastrophic channel error drives the detector toward guessing.
  spec.channel_error_var = 1.0;
  spec.snr_db = {20.0};
  spec.min_trials = 400;
  auto wrecked = run_robustness_csi(spec);
  CHECK(wrecked[0].ser > 0.4);
  CHECK(wrecked[0].notes.find("sigma2_e=1") != std::string::npos);
}

TEST_CASE("a trained-elsewhere checkpoint drives the amp-gnn detector") {
  Checkpoint ck;
  ck.T = 3;
  ck.L = 1;
  ck.params = make_mpnn_params(8, 16, 8, 2, 555);
  save_checkpoint(ck, "/tmp/mpdet_bench_ck.bin");

  BenchSpec spec = small_spec();
  spec.detectors = {"amp-gnn"};
  spec.checkpoint_path = "/tmp/mpdet_bench_ck.bin";
  spec.T = 3;
  spec.L = 1;
  spec.min_trials = 50;
  spec.min_errors = 5;
  spec.snr_db = {10.0};
  auto rows = run_ser_sweep(spec);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].trials >= 50);
  CHECK(rows[0].ser <= 1.0);
}

TEST_CASE("snr interpolation finds the crossing in log space") {
  std::vector<SweepRow> rows;
  for (auto [snr, ser] : {std::pair{8.0, 1e-1}, {10.0, 1e-2}, {12.0, 1e-3}}) {
    SweepRow r;
    r.detector = "x";
    r.N = 4;
    r.snr_db = snr;
    r.trials = 1000000;
    r.errors = std::llround(ser * 4e6);
    r.ser = ser;
    rows.push_back(r);
  }
  CHECK(snr_at_ser(rows, "x", 1e-2) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(snr_at_ser(rows, "x", 3e-2) ==
        doctest::Approx(8.0 + 2.0 * (std::log10(1e-1) - std::log10(3e-2)) /
                                  (std::log10(1e-1) - std::log10(1e-2)))
            .epsilon(1e-12));
  CHECK(std::isnan(snr_at_ser(rows, "x", 1e-5)));
  CHECK(std::isnan(snr_at_ser(rows, "other", 1e-2)));
}

TEST_SUITE_END();
