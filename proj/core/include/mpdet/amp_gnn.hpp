#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mpdet/amp.hpp"
#include "mpdet/constellation.hpp"
#include "mpdet/mpnn.hpp"
#include "mpdet/opcount.hpp"
#include "mpdet/system.hpp"

namespace mpdet {

struct AmpGnnConfig {
  int T = 10;  // unfolded layers
  int L = 2;   // message-passing rounds per layer
  Constellation constellation;
  MpnnParams params;

  // Diagnostic mode: bypass the network and take each layer's pmf from the
  // scalar AMP denoiser, which reduces the unfolded detector to plain AMP.
  bool use_denoiser_pmf = false;

  // Lower clamp for the variances fed back into the linear step, keeping the
  // equivalent noise variance finite when the pmf saturates to one-hot.
  double v_floor = 1e-13;
};

/// Final soft output of the unfolded detector.
struct SoftOutput {
  Eigen::MatrixXd pmf;     // 2N x sqrt(Q)
  Eigen::VectorXd x_hat;   // per-dimension posterior means
  Eigen::VectorXd v_hat;   // per-dimension posterior variances
  std::vector<int> hard;   // argmax of pmf per real dimension
};

/// Everything the reverse pass needs from one unfolded layer.
struct AmpGnnLayerTrace {
  Eigen::VectorXd x_in, v_in;      // estimates entering the layer
  Eigen::VectorXd Z_prev, V_prev;  // previous layer's observation stats
  Eigen::VectorXd V, Z, Sigma, r;  // linear-step outputs
  GnnForwardTrace gnn;
  Eigen::MatrixXd q;               // softmax of the readout logits
  Eigen::MatrixXd pmf;             // q refined with the prior
  Eigen::VectorXd mean, var_raw;   // pmf moments before the variance clamp
};

struct AmpGnnTrace {
  GraphFeatures features;
  std::vector<AmpGnnLayerTrace> layers;
};

struct AmpGnnResult {
  SoftOutput soft;
  std::vector<AmpLayerRecord> trajectory;
  OpCountReport ops;
};

/// Runs T unfolded layers: AMP linear step, network refinement of the
/// per-dimension pmf, moments fed back as the next layer's estimates.
/// Throws NonFiniteError with the layer index if the recursion diverges.
/// When trace is non-null every intermediate needed for the reverse pass
/// is recorded.
AmpGnnResult amp_gnn_detect(const LinearSystem& sys, const AmpGnnConfig& cfg,
                            AmpGnnTrace* trace = nullptr);

}  // namespace mpdet
