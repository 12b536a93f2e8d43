#include "mpdet/amp.hpp"

#include <cmath>

#include "mpdet/errors.hpp"
#include "mpdet/pmf.hpp"

namespace mpdet {

AmpState amp_init(const LinearSystem& sys) {
  const int M = sys.rows();
  const int N = sys.cols();
  AmpState s;
  s.x_hat = Eigen::VectorXd::Zero(2 * N);
  s.v_hat = Eigen::VectorXd::Constant(2 * N, double(N) / (2.0 * M));
  s.Z = sys.y_real;
  s.V = sys.H_real.cwiseAbs2() * s.v_hat;
  s.r = Eigen::VectorXd::Zero(2 * N);
  s.Sigma = Eigen::VectorXd::Zero(2 * N);
  s.t = 0;
  return s;
}

void amp_linear_step(AmpState& state, const LinearSystem& sys) {
  const Eigen::MatrixXd& A = sys.H_real;
  const Eigen::VectorXd& y = sys.y_real;
  const double sigma2 = sys.sigma2_real;
  const Eigen::MatrixXd A2 = A.cwiseAbs2();

  const Eigen::VectorXd V = A2 * state.v_hat;
  const Eigen::VectorXd Z =
      A * state.x_hat -
      (V.array() * (y - state.Z).array() / (sigma2 + state.V.array())).matrix();
  const Eigen::VectorXd w1 = (sigma2 + V.array()).inverse().matrix();
  const Eigen::VectorXd Sigma = (A2.transpose() * w1).cwiseInverse();
  const Eigen::VectorXd w2 = (y - Z).cwiseProduct(w1);
  const Eigen::VectorXd r = state.x_hat + Sigma.cwiseProduct(A.transpose() * w2);

  state.t += 1;
  if (!V.allFinite() || !Z.allFinite() || !Sigma.allFinite() || !r.allFinite()) {
    throw NonFiniteError("AMP linear step produced a non-finite value", state.t);
  }
  state.V = V;
  state.Z = Z;
  state.Sigma = Sigma;
  state.r = r;
}

AmpResult amp_detect(const LinearSystem& sys, const Constellation& c, int T) {
  if (T < 1) throw InvalidArgument("layer count must be >= 1");
  AmpState s = amp_init(sys);
  const int n2 = static_cast<int>(s.x_hat.size());

  AmpResult out;
  out.trajectory.reserve(T);
  for (int t = 0; t < T; ++t) {
    amp_linear_step(s, sys);
    for (int n = 0; n < n2; ++n) {
      denoise_pam({s.r[n], s.Sigma[n]}, c, s.x_hat[n], s.v_hat[n]);
    }
    if (!s.x_hat.allFinite()) {
      throw NonFiniteError("AMP denoiser produced a non-finite value", s.t);
    }
    out.trajectory.push_back({s.x_hat, s.v_hat, s.r, s.Sigma});
  }

  out.x_hat = s.x_hat;
  out.v_hat = s.v_hat;
  out.hard.resize(n2);
  for (int n = 0; n < n2; ++n) out.hard[n] = c.nearest_pam(out.x_hat[n]);
  return out;
}

namespace {

// Posterior mean/variance over the complex constellation for the complex
// AWGN model r = x + w, w ~ CN(0, Sigma); density exp(-|s-r|^2 / Sigma).
void denoise_qam(std::complex<double> r, double Sigma, const Constellation& c,
                 std::complex<double>& mean, double& variance) {
  const int Q = c.order;
  Eigen::VectorXd logw(Q);
  for (int i = 0; i < Q; ++i) {
    logw[i] = -std::norm(c.points[i] - r) / Sigma;
  }
  const Eigen::VectorXd w = softmax_pmf(logw);
  mean = {0.0, 0.0};
  double second = 0.0;
  for (int i = 0; i < Q; ++i) {
    mean += w[i] * c.points[i];
    second += w[i] * std::norm(c.points[i]);
  }
  variance = std::max(0.0, second - std::norm(mean));
}

}  // namespace

Eigen::VectorXcd amp_detect_complex(const LinearSystem& sys,
                                    const Constellation& c, int T) {
  if (T < 1) throw InvalidArgument("layer count must be >= 1");
  const Eigen::MatrixXcd& A = sys.H;
  const Eigen::VectorXcd& y = sys.y;
  const double sigma2 = sys.sigma2;
  const int M = sys.rows();
  const int N = sys.cols();
  const Eigen::MatrixXd A2 = A.cwiseAbs2();

  Eigen::VectorXcd x_hat = Eigen::VectorXcd::Zero(N);
  Eigen::VectorXd v_hat = Eigen::VectorXd::Constant(N, double(N) / M);
  Eigen::VectorXcd Z = y;
  Eigen::VectorXd V = A2 * v_hat;

  for (int t = 0; t < T; ++t) {
    const Eigen::VectorXd V_new = A2 * v_hat;
    const Eigen::VectorXcd Z_new =
        A * x_hat - (V_new.array() * (y - Z).array() /
                     (sigma2 + V.array()).cast<std::complex<double>>())
                        .matrix();
    const Eigen::VectorXd w1 = (sigma2 + V_new.array()).inverse().matrix();
    const Eigen::VectorXd Sigma = (A2.transpose() * w1).cwiseInverse();
    const Eigen::VectorXcd w2 =
        (y - Z_new).cwiseProduct(w1.cast<std::complex<double>>());
    const Eigen::VectorXcd r =
        x_hat + Sigma.cast<std::complex<double>>().cwiseProduct(A.adjoint() * w2);
    for (int n = 0; n < N; ++n) {
      denoise_qam(r[n], Sigma[n], c, x_hat[n], v_hat[n]);
    }
    V = V_new;
    Z = Z_new;
    if (!x_hat.allFinite()) {
      throw NonFiniteError("complex AMP produced a non-finite value", t + 1);
    }
  }
  return x_hat;
}

}  // namespace mpdet
