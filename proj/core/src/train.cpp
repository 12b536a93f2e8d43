#include "mpdet/train.hpp"

#include <cmath>
#include <ostream>
#include <thread>

#include "mpdet/errors.hpp"

namespace mpdet {

AdamState make_adam_state(const MpnnParams& params) {
  return {zeros_like(params), zeros_like(params), 0};
}

void adam_step(MpnnParams& params, const MpnnParams& grads, AdamState& state,
               double lr) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(beta2, double(state.step));

  auto pr = tensor_refs(params);
  auto gr = tensor_refs(const_cast<MpnnParams&>(grads));
  auto mr = tensor_refs(state.m);
  auto vr = tensor_refs(state.v);
  for (size_t i = 0; i < pr.size(); ++i) {
    Eigen::Map<Eigen::ArrayXd> p(pr[i].data, pr[i].size());
    Eigen::Map<const Eigen::ArrayXd> g(gr[i].data, gr[i].size());
    Eigen::Map<Eigen::ArrayXd> m(mr[i].data, mr[i].size());
    Eigen::Map<Eigen::ArrayXd> v(vr[i].data, vr[i].size());
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.square();
    p -= lr * (m / bc1) / ((v / bc2).sqrt() + eps);
  }
}

void TrainConfig::validate() const {
  if (epochs < 1 || samples_per_epoch < 1 || batch_size < 1 || M < 1 ||
      T < 1 || L < 1 || val_samples < 1) {
    throw InvalidArgument("training configuration fields must be positive");
  }
  if (batch_size > samples_per_epoch) {
    throw InvalidArgument("batch_size exceeds samples_per_epoch");
  }
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be > 0");
  if (train_user_counts.empty()) {
    throw InvalidArgument("at least one user count is required");
  }
  for (int n : train_user_counts) {
    if (n < 1) throw InvalidArgument("user counts must be >= 1");
  }
}

namespace {

/// Validation SER of the current parameters on a freshly seeded set.
double validation_ser(const TrainConfig& cfg, const Constellation& c,
                      const MpnnParams& params) {
  AmpGnnConfig dcfg{cfg.T, cfg.L, c, params};
  const int groups = static_cast<int>(cfg.train_user_counts.size());
  const int per_group = std::max(1, cfg.val_samples / groups);

  int threads = cfg.threads > 0
                    ? cfg.threads
                    : std::max(1u, std::thread::hardware_concurrency());
  long long errors = 0, symbols = 0;

  for (int gi = 0; gi < groups; ++gi) {
    const int N = cfg.train_user_counts[gi];
    std::vector<long long> err(threads, 0);
    std::vector<std::exception_ptr> fail(threads);
    auto work = [&](int w) {
      try {
        for (int s = w; s < per_group; s += threads) {
          Rng rng = make_stream(cfg.seed, 0x76616cULL, std::uint64_t(gi),
                                std::uint64_t(s));
          Sample sample = sample_transmission(cfg.M, N, c, cfg.train_snr_db, rng);
          AmpGnnResult res = amp_gnn_detect(sample.system, dcfg);
          err[w] += count_symbol_errors(res.soft.hard, sample.labels, N);
        }
      } catch (...) {
        fail[w] = std::current_exception();
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
    for (auto& e : fail) {
      if (e) std::rethrow_exception(e);
    }
    for (long long v : err) errors += v;
    symbols += static_cast<long long>(per_group) * N;
  }
  return double(errors) / double(symbols);
}

}  // namespace

Checkpoint train(const TrainConfig& config, std::ostream* log,
                 const Checkpoint* resume_from) {
  config.validate();
  const Constellation c = make_constellation(config.Q);
  const int sq = c.pam_size();

  MpnnParams params;
  int start_epoch = 0;
  if (resume_from) {
    params = resume_from->params;
    if (params.sq != sq) {
      throw InvalidArgument("checkpoint readout size does not match Q");
    }
    start_epoch = resume_from->epoch;
  } else {
    params = make_mpnn_params(config.nu, config.nh1, config.nh2, sq, config.seed);
  }

  AdamState adam = make_adam_state(params);
  AmpGnnConfig dcfg{config.T, config.L, c, params};

  Checkpoint best;
  best.version = 1;
  best.T = config.T;
  best.L = config.L;
  best.seed = config.seed;
  best.params = params;
  best.epoch = start_epoch;
  if (resume_from) {
    best.loss_history = resume_from->loss_history;
    best.val_ser_history = resume_from->val_ser_history;
  }
  double best_ser = std::numeric_limits<double>::infinity();

  const int batches =
      std::max(1, config.samples_per_epoch / config.batch_size);
  const int groups = static_cast<int>(config.train_user_counts.size());

  for (int epoch = start_epoch; epoch < start_epoch + config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (int b = 0; b < batches; ++b) {
      const int N = config.train_user_counts[b % groups];
      Rng rng = make_stream(config.seed, 0x747261696eULL,
                            std::uint64_t(epoch), std::uint64_t(b));
      std::vector<Sample> batch =
          generate_batch(config.batch_size, config.M, N, c,
                         config.train_snr_db, rng);
      dcfg.params = params;
      BackwardResult bw = backward_batch(batch, dcfg, config.threads);
      if (!std::isfinite(bw.loss)) {
        throw NonFiniteError("training diverged (non-finite loss)", epoch);
      }
      epoch_loss += bw.loss;
      adam_step(params, bw.grads, adam, config.learning_rate);
    }
    epoch_loss /= batches;

    const double val_ser = validation_ser(config, c, params);
    best.loss_history.push_back(epoch_loss);
    best.val_ser_history.push_back(val_ser);
    if (val_ser <= best_ser) {
      best_ser = val_ser;
      best.params = params;
      best.epoch = epoch + 1;
    }
    if (log) {
      (*log) << "epoch " << (epoch + 1) << "  loss " << epoch_loss
             << "  val_ser " << val_ser << "\n";
      log->flush();
    }
  }
  return best;
}

}  // namespace mpdet
