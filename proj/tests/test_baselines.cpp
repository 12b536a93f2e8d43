#include <doctest.h>

#include <cmath>

#include "mpdet/amp.hpp"
#include "mpdet/baselines.hpp"
#include "mpdet/errors.hpp"
#include "mpdet/oracle.hpp"
#include "mpdet/pmf.hpp"
#include "mpdet/system.hpp"

using namespace mpdet;

TEST_SUITE_BEGIN("baselines");

TEST_CASE("regularized inverse on an identity channel") {
  const Constellation c = make_constellation(4);
  LinearSystem sys;
  sys.H = Eigen::MatrixXcd::Identity(2, 2);
  sys.y = Eigen::VectorXcd::Zero(2);
  sys.y[0] = 1.0;
  sys.sigma2 = 1.0;
  embed_real(sys);
  MmseResult res = mmse_detect(sys, c);
  CHECK(res.x_hat[0] == doctest::Approx(0.5).epsilon(1e-12));  // 1/(1+sigma2)
  CHECK(std::abs(res.x_hat[1]) < 1e-12);
  CHECK(std::abs(res.x_hat[2]) < 1e-12);
  CHECK(std::abs(res.x_hat[3]) < 1e-12);
}

TEST_CASE("regularized inverse approaches the exact inverse at high snr") {
  const Constellation c = make_constellation(4);
  Rng rng = make_stream(201);
  Sample s = sample_transmission(4, 4, c, 90.0, rng);
  MmseResult res = mmse_detect(s.system, c);
  Eigen::VectorXcd direct = s.system.H.fullPivLu().solve(s.system.y);
  CHECK((res.x_hat - embed_vector(direct)).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("solver path matches the explicit inverse formula") {
  const Constellation c = make_constellation(16);
  for (int rep = 0; rep < 1000; ++rep) {
    Rng rng = make_stream(202, rep);
    Sample s = sample_transmission(4, 4, c, 10.0, rng);
    MmseResult res = mmse_detect(s.system, c);
    const Eigen::MatrixXd& A = s.system.H_real;
    Eigen::MatrixXd G = A.transpose() * A +
                        s.system.sigma2 * Eigen::MatrixXd::Identity(8, 8);
    Eigen::VectorXd explicit_x = G.inverse() * (A.transpose() * s.system.y_real);
    CHECK((res.x_hat - explicit_x).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("oamp is de-correlated at every iteration") {
  const Constellation c = make_constellation(4);
  for (int rep = 0; rep < 20; ++rep) {
    Rng rng = make_stream(203, rep);
    Sample s = sample_transmission(8, 8, c, 4.0 + rep, rng);
    OampResult res = oamp_detect(s.system, c, 10);
    REQUIRE(res.decorrelation.size() == 10);
    for (double tr : res.decorrelation) CHECK(std::abs(tr) < 1e-10);
  }
}

TEST_CASE("oamp detects cleanly at high snr") {
  // The rare residual failures happen on channels with condition numbers
  // in the hundreds, where the regularized inverse errs as well.
  const Constellation c = make_constellation(4);
  long errors = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Rng rng = make_stream(204, trial);
    Sample s = sample_transmission(4, 4, c, 40.0, rng);
    const int e =
        count_symbol_errors(oamp_detect(s.system, c, 10).hard, s.labels, 4);
    if (e > 0) {
      CHECK(count_symbol_errors(mmse_detect(s.system, c).hard, s.labels, 4) > 0);
    }
    errors += e;
  }
  CHECK(errors <= 4);  // SER at most 1e-3
}

TEST_CASE("oamp does not lose to amp at moderate snr") {
  const Constellation c = make_constellation(4);
  const int N = 16, trials = 600;
  long err_oamp = 0, err_amp = 0;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = make_stream(205, trial);
    Sample s = sample_transmission(N, N, c, 11.0, rng);
    err_oamp += count_symbol_errors(oamp_detect(s.system, c, 10).hard,
                                    s.labels, N);
    err_amp += count_symbol_errors(amp_detect(s.system, c, 10).hard,
                                   s.labels, N);
  }
  // Paired trials; equality within Monte-Carlo noise is acceptable, a
  // clear loss is not.
  const double symbols = double(trials) * N;
  const double band =
      2.0 * std::sqrt(double(err_oamp + err_amp)) / symbols;
  CHECK(double(err_oamp) / symbols <= double(err_amp) / symbols + band);
}

TEST_CASE("oracle marginal equals the scalar denoiser for one user") {
  for (int q : {4, 16, 64}) {
    const Constellation c = make_constellation(q);
    Rng rng = make_stream(206, q);
    Sample s = sample_transmission(1, 1, c, 8.0, rng);
    OracleResult oracle = oracle_marginals(s.system, c);
    CHECK(oracle.evaluation_count ==
          std::int64_t(std::pow(double(c.pam_size()), 2.0)));

    // One complex user: each real dimension is a scalar AWGN channel with
    // gain |a| after matched filtering; evaluate the denoiser on the
    // decoupled observation and compare pmfs.
    const Eigen::MatrixXd& A = s.system.H_real;
    for (int dim = 0; dim < 2; ++dim) {
      const Eigen::VectorXd col = A.col(dim);
      const double g2 = col.squaredNorm();
      const double r = col.dot(s.system.y_real) / g2;
      const double Sigma = s.system.sigma2_real / g2;
      Eigen::VectorXd pmf = denoiser_pmf({r, Sigma}, c);
      CHECK((oracle.marginals.row(dim).transpose() - pmf).cwiseAbs().maxCoeff() <
            1e-12);
    }
  }
}

TEST_CASE("oracle basics: normalization, map, noiseless recovery") {
  const Constellation c = make_constellation(4);
  Rng rng = make_stream(207);
  Sample s = sample_transmission(3, 3, c, 55.0, rng);
  OracleResult oracle = oracle_marginals(s.system, c);
  CHECK(oracle.evaluation_count == 64);  // 2^(2*3)
  for (int d = 0; d < 6; ++d) {
    CHECK(oracle.marginals.row(d).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(oracle.map_labels == s.labels);  // effectively noiseless

  // Size bound: QPSK with N = 12 needs 2^24 > 10^7 candidates.
  Rng rng2 = make_stream(208);
  Sample big = sample_transmission(12, 12, c, 10.0, rng2);
  CHECK_THROWS_AS(oracle_marginals(big.system, c), InvalidArgument);
}

TEST_CASE("map detector matches an exhaustive complex-domain search") {
  const Constellation c = make_constellation(4);
  for (int rep = 0; rep < 50; ++rep) {
    Rng rng = make_stream(209, rep);
    Sample s = sample_transmission(2, 2, c, 6.0, rng);
    std::vector<int> got = map_detect(s.system, c);

    // Independent oracle: all 16 complex candidate vectors.
    double best = 1e300;
    std::vector<int> want;
    for (int i0 = 0; i0 < 4; ++i0) {
      for (int i1 = 0; i1 < 4; ++i1) {
        Eigen::VectorXcd x(2);
        x << c.points[i0], c.points[i1];
        const double d = (s.system.y - s.system.H * x).squaredNorm();
        if (d < best) {
          best = d;
          // points are laid out re-major: index = re * k + im
          want = {i0 / 2, i1 / 2, i0 % 2, i1 % 2};
        }
      }
    }
    CHECK(got == want);
  }
}

TEST_CASE("map dominates the other detectors on matched realizations") {
  const Constellation c = make_constellation(4);
  const int N = 4, trials = 600;
  long err_map = 0, err_amp = 0, err_mmse = 0, err_oamp = 0;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = make_stream(210, trial);
    Sample s = sample_transmission(N, N, c, 9.0, rng);
    err_map += count_symbol_errors(map_detect(s.system, c), s.labels, N);
    err_amp += count_symbol_errors(amp_detect(s.system, c, 10).hard, s.labels, N);
    err_oamp +=
        count_symbol_errors(oamp_detect(s.system, c, 10).hard, s.labels, N);
    err_mmse += count_symbol_errors(mmse_detect(s.system, c).hard, s.labels, N);
  }
  CHECK(err_map <= err_amp);
  CHECK(err_map <= err_oamp);
  CHECK(err_map <= err_mmse);
  CHECK(err_map < trials * N / 4);  // sanity: far from guessing
}

TEST_CASE("noiseless map recovers the transmitted vector") {
  const Constellation c = make_constellation(16);
  Rng rng = make_stream(211);
  Sample s = sample_transmission(3, 2, c, 70.0, rng);
  CHECK(map_detect(s.system, c) == s.labels);
}

TEST_SUITE_END();
