#include "mpdet/baselines.hpp"

#include <cmath>

#include "mpdet/errors.hpp"
#include "mpdet/pmf.hpp"

namespace mpdet {

MmseResult mmse_detect(const LinearSystem& sys, const Constellation& c) {
  const Eigen::MatrixXd& A = sys.H_real;
  const int n2 = static_cast<int>(A.cols());
  // Real-domain regularizer is the per-complex-dimension noise variance:
  // symbols have variance 1/2 per real dimension, so sigma2_real / (1/2).
  Eigen::MatrixXd G = A.transpose() * A;
  G.diagonal().array() += sys.sigma2;
  MmseResult out;
  out.x_hat = G.ldlt().solve(A.transpose() * sys.y_real);
  out.hard.resize(n2);
  for (int n = 0; n < n2; ++n) out.hard[n] = c.nearest_pam(out.x_hat[n]);
  return out;
}

OampResult oamp_detect(const LinearSystem& sys, const Constellation& c, int T) {
  if (T < 1) throw InvalidArgument("iteration count must be >= 1");
  const Eigen::MatrixXd& A = sys.H_real;
  const Eigen::VectorXd& y = sys.y_real;
  const double sigma2 = sys.sigma2_real;
  const int m2 = static_cast<int>(A.rows());
  const int n2 = static_cast<int>(A.cols());
  const Eigen::MatrixXd AAt = A * A.transpose();
  const double trAtA = AAt.trace();

  // Prior variance per real dimension of a unit-energy constellation.
  const double prior_var = c.pam.cwiseProduct(c.pam).dot(c.prior);

  OampState s;
  s.x_hat = Eigen::VectorXd::Zero(n2);
  s.v2 = prior_var;

  OampResult out;
  out.v_hat.resize(n2);
  out.decorrelation.reserve(T);
  Eigen::VectorXd x_post(n2);

  for (int t = 0; t < T; ++t) {
    Eigen::MatrixXd K = s.v2 * AAt;
    K.diagonal().array() += sigma2;
    const Eigen::MatrixXd W_hat = s.v2 * K.ldlt().solve(A).transpose();
    const double tr_wa = (W_hat * A).trace();
    s.W = (double(n2) / tr_wa) * W_hat;
    const Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n2, n2) - s.W * A;
    out.decorrelation.push_back(B.trace());

    s.r = s.x_hat + s.W * (y - A * s.x_hat);
    s.tau2 = (B.squaredNorm() * s.v2 + s.W.squaredNorm() * sigma2) / n2;
    if (!(s.tau2 > 0.0) || !std::isfinite(s.tau2)) {
      throw NonFiniteError("OAMP error tracker left its domain", t + 1);
    }

    for (int n = 0; n < n2; ++n) {
      denoise_pam({s.r[n], s.tau2}, c, x_post[n], out.v_hat[n]);
    }
    if (!x_post.allFinite()) {
      throw NonFiniteError("OAMP produced a non-finite estimate", t + 1);
    }
    if (t + 1 == T) break;

    // Divergence-free nonlinear stage: feed back the extrinsic estimate
    // (Gaussian division of the posterior by the equivalent observation)
    // so the error stays decorrelated from the noise, then re-estimate
    // v2 from the observation residual.
    const double mse =
        std::min(std::max(out.v_hat.mean(), 1e-13), 0.9999 * s.tau2);
    const double v_ext = 1.0 / (1.0 / mse - 1.0 / s.tau2);
    s.x_hat = v_ext * (x_post.array() / mse - s.r.array() / s.tau2);
    const double resid = (y - A * s.x_hat).squaredNorm();
    s.v2 = std::min(std::max((resid - m2 * sigma2) / trAtA, 1e-13), prior_var);
    s.t = t + 1;
  }

  // Decisions and soft outputs come from the final posterior.
  out.x_hat = x_post;
  out.hard.resize(n2);
  for (int n = 0; n < n2; ++n) out.hard[n] = c.nearest_pam(out.x_hat[n]);
  return out;
}

}  // namespace mpdet
