#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mpdet/constellation.hpp"
#include "mpdet/rng.hpp"

namespace mpdet {

/// An M x N complex linear observation y = H x + n together with its
/// equivalent 2M x 2N real representation
///   H_real = [[Re H, -Im H], [Im H, Re H]],  y_real = [Re y; Im y],
/// and per-real-dimension noise variance sigma2_real = sigma2 / 2.
struct LinearSystem {
  Eigen::MatrixXcd H;
  Eigen::VectorXcd y;
  double sigma2 = 0.0;  // noise variance per complex dimension

  Eigen::MatrixXd H_real;
  Eigen::VectorXd y_real;
  double sigma2_real = 0.0;

  int rows() const { return static_cast<int>(H.rows()); }  // M
  int cols() const { return static_cast<int>(H.cols()); }  // N
};

/// One generated transmission: the system, the transmitted vector in both
/// domains, and per-real-dimension PAM labels.
struct Sample {
  LinearSystem system;
  Eigen::VectorXcd x_true;
  Eigen::VectorXd x_true_real;
  std::vector<int> labels;  // 2N indices into Constellation::pam
};

/// Fills the real-embedded fields of a system from its complex fields.
void embed_real(LinearSystem& sys);

/// Convenience: builds a fully embedded system from complex parts.
LinearSystem make_system(Eigen::MatrixXcd H, Eigen::VectorXcd y, double sigma2);

/// Real embedding of a complex vector: [Re v; Im v].
Eigen::VectorXd embed_vector(const Eigen::VectorXcd& v);

/// i.i.d. CN(0, 1/M) channel matrix, so columns have unit expected norm.
Eigen::MatrixXcd sample_channel(int M, int N, Rng& rng);

/// Noise variance per complex dimension that realizes the given SNR
/// E||Hx||^2 / E||n||^2 for CN(0,1/M) channels and unit-energy symbols:
/// sigma2 = N / (M * 10^(snr_db/10)).
double sigma2_for_snr(double snr_db, int M, int N);

/// Draws one transmission over a fresh channel at the given SNR.
Sample sample_transmission(int M, int N, const Constellation& constellation,
                           double snr_db, Rng& rng);

/// As sample_transmission, but detectors observe the perturbed channel
/// H + E with E ~ CN(0, channel_error_var) i.i.d., while y is generated
/// with the true H. error_rng is a dedicated stream so that
/// channel_error_var = 0 reproduces the clean path bit for bit.
Sample sample_transmission_csi_error(int M, int N,
                                     const Constellation& constellation,
                                     double snr_db, double channel_error_var,
                                     Rng& rng, Rng& error_rng);

/// Independent samples (fresh channel, symbols, noise per sample).
std::vector<Sample> generate_batch(int count, int M, int N,
                                   const Constellation& constellation,
                                   double snr_db, Rng& rng);

/// Complex-symbol errors: symbol k is wrong when either of its real
/// dimensions (k and k+N) decodes to a different PAM index than the label.
int count_symbol_errors(const std::vector<int>& hard,
                        const std::vector<int>& labels, int N);

}  // namespace mpdet
