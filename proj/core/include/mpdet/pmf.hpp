#pragma once

#include <Eigen/Dense>

#include "mpdet/constellation.hpp"

namespace mpdet {

/// Equivalent scalar AWGN observation r = x + w, w ~ N(0, Sigma).
struct AwgnObservation {
  double r = 0.0;
  double Sigma = 0.0;
};

/// Max-subtracted exponential normalization of a logit vector.
Eigen::VectorXd softmax_pmf(const Eigen::VectorXd& logits);

/// Row-wise softmax of a (nodes x sqrtQ) logit matrix.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

/// Multiplies a pmf by a prior and renormalizes. Identity for the uniform
/// prior (up to a constant factor removed by normalization).
Eigen::VectorXd refine_with_prior(const Eigen::VectorXd& pmf,
                                  const Eigen::VectorXd& prior);

/// First two moments of a PAM-valued random variable with the given pmf:
/// mean = sum_i p_i s_i, variance = sum_i p_i s_i^2 - mean^2 (clamped >= 0).
void moments_from_pmf(const Eigen::VectorXd& pmf, const Constellation& c,
                      double& mean, double& variance);

/// Exact posterior pmf over the PAM alphabet for the scalar AWGN model,
/// evaluated in the log domain with max subtraction (stable down to
/// Sigma ~ 1e-30):  p_i \propto exp(-(s_i - r)^2 / (2 Sigma)) prior_i.
Eigen::VectorXd denoiser_pmf(const AwgnObservation& obs, const Constellation& c);

/// Posterior mean and variance of the scalar AWGN model under the PAM prior.
void denoise_pam(const AwgnObservation& obs, const Constellation& c,
                 double& mean, double& variance);

}  // namespace mpdet
