#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mpdet/amp_gnn.hpp"
#include "mpdet/mpnn.hpp"
#include "mpdet/system.hpp"

namespace mpdet {

/// Squared Euclidean distance between the final soft estimate and the
/// transmitted real symbols.
double loss_l2(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& x_true);

struct BackwardResult {
  double loss = 0.0;   // mean per-sample loss
  MpnnParams grads;    // gradient of the mean loss, shapes mirror the params
};

/// Exact reverse-mode gradients of the mean per-sample L2 loss through the
/// whole unfolded detector: every AMP linear step, message-passing round,
/// GRU update, readout, softmax and moment computation. Gradients are
/// reduced over samples in index order, so results do not depend on the
/// thread count. Throws NonFiniteError naming the offending tensor if any
/// gradient is non-finite.
BackwardResult backward_batch(const std::vector<Sample>& batch,
                              const AmpGnnConfig& cfg, int threads = 0);

/// Single-sample reverse pass over a recorded forward trace; accumulates
/// unscaled gradients into grads and returns the sample loss. Exposed for
/// tests that want to probe the tape directly.
double backward_sample(const Sample& sample, const AmpGnnConfig& cfg,
                       const AmpGnnTrace& trace, MpnnParams& grads);

struct AdamState {
  MpnnParams m, v;
  long step = 0;
};

AdamState make_adam_state(const MpnnParams& params);

/// Standard bias-corrected Adam (beta1 0.9, beta2 0.999, eps 1e-8).
void adam_step(MpnnParams& params, const MpnnParams& grads, AdamState& state,
               double lr);

struct TrainConfig {
  int epochs = 30;
  int samples_per_epoch = 20000;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double train_snr_db = 20.0;
  int M = 16;
  std::vector<int> train_user_counts = {16};  // batches cycle through these N
  int Q = 4;
  int T = 10;
  int L = 2;
  int nu = 8, nh1 = 16, nh2 = 8;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency
  int val_samples = 2000;

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_ser = 0.0;
};

/// Self-describing parameter archive. Tensors are stored row-major as
/// little-endian 64-bit floats after a textual directory; see
/// docs/checkpoint-format.md for the exact byte layout.
struct Checkpoint {
  int version = 1;
  int T = 0, L = 0;          // unfolded depth used at training time
  MpnnParams params;
  int epoch = 0;             // epoch that produced these tensors
  std::uint64_t seed = 0;
  std::vector<double> loss_history;
  std::vector<double> val_ser_history;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Minibatch training at the configured SNR with fresh batches per epoch,
/// per-epoch validation SER at the same SNR, and best-validation selection.
/// When resume_from is non-null its tensors and epoch counter seed the run
/// (optimizer moments restart). Progress lines go to log when provided.
Checkpoint train(const TrainConfig& config, std::ostream* log = nullptr,
                 const Checkpoint* resume_from = nullptr);

}  // namespace mpdet
