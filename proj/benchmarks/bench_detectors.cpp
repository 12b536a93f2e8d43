#include <benchmark/benchmark.h>

#include "mpdet/amp.hpp"
#include "mpdet/amp_gnn.hpp"
#include "mpdet/baselines.hpp"
#include "mpdet/mpnn.hpp"
#include "mpdet/pmf.hpp"
#include "mpdet/system.hpp"
#include "mpdet/train.hpp"

using namespace mpdet;

namespace {

Sample fixed_sample(int M, int N, double snr) {
  const Constellation c = make_constellation(4);
  Rng rng = make_stream(12345);
  return sample_transmission(M, N, c, snr, rng);
}

}  // namespace

static void BM_DenoisePam(benchmark::State& state) {
  const Constellation c = make_constellation(int(state.range(0)));
  double mean, var;
  double r = -0.73;
  for (auto _ : state) {
    denoise_pam({r, 0.21}, c, mean, var);
    benchmark::DoNotOptimize(mean);
    r = -r;
  }
}
BENCHMARK(BM_DenoisePam)->Arg(4)->Arg(16)->Arg(64);

static void BM_AmpDetect(benchmark::State& state) {
  const int N = int(state.range(0));
  const Constellation c = make_constellation(4);
  Sample s = fixed_sample(N, N, 10.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(amp_detect(s.system, c, 10));
  }
}
BENCHMARK(BM_AmpDetect)->Arg(16)->Arg(32)->Arg(64);

static void BM_OampDetect(benchmark::State& state) {
  const int N = int(state.range(0));
  const Constellation c = make_constellation(4);
  Sample s = fixed_sample(N, N, 10.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(oamp_detect(s.system, c, 10));
  }
}
BENCHMARK(BM_OampDetect)->Arg(16)->Arg(32);

static void BM_GnnRound(benchmark::State& state) {
  const int N = int(state.range(0));
  Sample s = fixed_sample(N, N, 10.0);
  GraphFeatures f = make_graph_features(s.system);
  MpnnParams p = make_mpnn_params(8, 16, 8, 2, 1);
  MpnnState st;
  st.u = encoder_init(f, p);
  st.g = Eigen::MatrixXd::Zero(2 * N, 16);
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(2 * N, 2, 0.3);
  for (auto _ : state) {
    Eigen::MatrixXd msg = propagate(st.u, f, p);
    benchmark::DoNotOptimize(aggregate(st, msg, d, p));
  }
}
BENCHMARK(BM_GnnRound)->Arg(8)->Arg(16)->Arg(32);

static void BM_AmpGnnDetect(benchmark::State& state) {
  const int N = int(state.range(0));
  AmpGnnConfig cfg;
  cfg.constellation = make_constellation(4);
  cfg.params = make_mpnn_params(8, 16, 8, 2, 1);
  Sample s = fixed_sample(N, N, 10.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(amp_gnn_detect(s.system, cfg));
  }
}
BENCHMARK(BM_AmpGnnDetect)->Arg(8)->Arg(16)->Arg(32);

static void BM_BackwardBatch(benchmark::State& state) {
  AmpGnnConfig cfg;
  cfg.T = 10;
  cfg.L = 2;
  cfg.constellation = make_constellation(4);
  cfg.params = make_mpnn_params(8, 16, 8, 2, 1);
  Rng rng = make_stream(777);
  std::vector<Sample> batch =
      generate_batch(8, int(state.range(0)), int(state.range(0)),
                     cfg.constellation, 20.0, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(backward_batch(batch, cfg, 1));
  }
}
BENCHMARK(BM_BackwardBatch)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
