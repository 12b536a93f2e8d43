#include "mpdet/pmf.hpp"

#include <cmath>

#include "mpdet/errors.hpp"

namespace mpdet {

Eigen::VectorXd softmax_pmf(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - m).exp();
  p /= p.sum();
  return p;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    p.row(i) = softmax_pmf(logits.row(i).transpose()).transpose();
  }
  return p;
}

Eigen::VectorXd refine_with_prior(const Eigen::VectorXd& pmf,
                                  const Eigen::VectorXd& prior) {
  Eigen::VectorXd q = pmf.cwiseProduct(prior);
  const double z = q.sum();
  if (z <= 0.0) throw InvalidArgument("pmf * prior sums to zero");
  return q / z;
}

void moments_from_pmf(const Eigen::VectorXd& pmf, const Constellation& c,
                      double& mean, double& variance) {
  mean = pmf.dot(c.pam);
  const double second = pmf.dot(c.pam.cwiseProduct(c.pam));
  variance = std::max(0.0, second - mean * mean);
}

Eigen::VectorXd denoiser_pmf(const AwgnObservation& obs, const Constellation& c) {
  const int k = c.pam_size();
  Eigen::VectorXd logw(k);
  const double inv = 0.5 / obs.Sigma;
  for (int i = 0; i < k; ++i) {
    const double d = c.pam[i] - obs.r;
    logw[i] = -d * d * inv + std::log(c.prior[i]);
  }
  return softmax_pmf(logw);
}

void denoise_pam(const AwgnObservation& obs, const Constellation& c,
                 double& mean, double& variance) {
  moments_from_pmf(denoiser_pmf(obs, c), c, mean, variance);
}

}  // namespace mpdet
