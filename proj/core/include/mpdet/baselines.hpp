#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mpdet/constellation.hpp"
#include "mpdet/system.hpp"

namespace mpdet {

struct MmseResult {
  Eigen::VectorXd x_hat;   // real-embedded estimate
  std::vector<int> hard;
};

/// Regularized pseudo-inverse receiver x = (H^H H + sigma2 I)^-1 H^H y for
/// unit-power symbols, evaluated on the real embedding.
MmseResult mmse_detect(const LinearSystem& sys, const Constellation& c);

/// Per-iteration OAMP quantities: the trace-normalized LMMSE matrix W, the
/// decoupled observation r, and the scalar error trackers v2 (denoiser
/// output error) and tau2 (linear output error).
struct OampState {
  Eigen::VectorXd x_hat;
  Eigen::VectorXd r;
  Eigen::MatrixXd W;
  double tau2 = 0.0;
  double v2 = 0.0;
  int t = 0;
};

struct OampResult {
  Eigen::VectorXd x_hat, v_hat;
  std::vector<int> hard;
  std::vector<double> decorrelation;  // tr(I - W A) per iteration
};

/// Orthogonal AMP with the trace-normalized LMMSE linear stage
///   W = 2N / tr(W_hat A) * W_hat,  W_hat = v2 A^T (v2 A A^T + sigma2 I)^-1
/// and the PAM posterior denoiser, made divergence-free by feeding back the
/// extrinsic estimate. v2 starts at the symbol prior variance and is
/// re-estimated from the observation residual each iteration; tau2 follows
/// tau2 = (tr(B B^T) v2 + tr(W W^T) sigma2) / 2N with B = I - W A. Hard
/// decisions come from the final posterior.
OampResult oamp_detect(const LinearSystem& sys, const Constellation& c, int T);

}  // namespace mpdet
