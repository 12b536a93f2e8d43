#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mpdet/constellation.hpp"
#include "mpdet/system.hpp"

namespace mpdet {

/// Per-layer AMP quantities over the real-embedded system (2N signal
/// dimensions, 2M observation dimensions).
struct AmpState {
  Eigen::VectorXd x_hat;  // posterior means, 2N
  Eigen::VectorXd v_hat;  // posterior variances, 2N
  Eigen::VectorXd Z;      // Onsager-corrected mean of A x, 2M
  Eigen::VectorXd V;      // variance of A x, 2M
  Eigen::VectorXd r;      // equivalent AWGN observations, 2N
  Eigen::VectorXd Sigma;  // equivalent noise variances, 2N
  int t = 0;              // layer index
};

/// Snapshot of one layer for diagnostics and cross-checks.
struct AmpLayerRecord {
  Eigen::VectorXd x_hat, v_hat, r, Sigma;
};

struct AmpResult {
  Eigen::VectorXd x_hat, v_hat;
  std::vector<int> hard;  // nearest-PAM decision per real dimension
  std::vector<AmpLayerRecord> trajectory;
};

/// x_hat = 0, v_hat = N/(2M) per real dimension, Z = y; V is seeded
/// consistently with v_hat so the first Onsager denominator is defined
/// (the first correction term is exactly zero since Z = y).
AmpState amp_init(const LinearSystem& sys);

/// One linear step: updates V, Z (Onsager-corrected), Sigma and r in the
/// state from the current x_hat / v_hat. Throws NonFiniteError carrying the
/// layer index if any intermediate is non-finite.
void amp_linear_step(AmpState& state, const LinearSystem& sys);

/// Runs T layers of linear step + per-dimension PAM denoising.
AmpResult amp_detect(const LinearSystem& sys, const Constellation& c, int T);

/// Complex-domain variant of the same algorithm, kept as a cross-check
/// path for the real embedding. Returns the final complex estimate.
Eigen::VectorXcd amp_detect_complex(const LinearSystem& sys,
                                    const Constellation& c, int T);

}  // namespace mpdet
