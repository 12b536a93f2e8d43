#include "mpdet/system.hpp"

#include <cmath>

#include "mpdet/errors.hpp"

namespace mpdet {

void embed_real(LinearSystem& sys) {
  const int M = sys.rows();
  const int N = sys.cols();
  sys.H_real.resize(2 * M, 2 * N);
  sys.H_real.topLeftCorner(M, N) = sys.H.real();
  sys.H_real.topRightCorner(M, N) = -sys.H.imag();
  sys.H_real.bottomLeftCorner(M, N) = sys.H.imag();
  sys.H_real.bottomRightCorner(M, N) = sys.H.real();
  sys.y_real.resize(2 * M);
  sys.y_real.head(M) = sys.y.real();
  sys.y_real.tail(M) = sys.y.imag();
  sys.sigma2_real = sys.sigma2 / 2.0;
}

LinearSystem make_system(Eigen::MatrixXcd H, Eigen::VectorXcd y, double sigma2) {
  if (sigma2 <= 0.0) throw InvalidArgument("sigma2 must be positive");
  if (y.size() != H.rows()) throw InvalidArgument("y length does not match H rows");
  LinearSystem sys;
  sys.H = std::move(H);
  sys.y = std::move(y);
  sys.sigma2 = sigma2;
  embed_real(sys);
  return sys;
}

Eigen::VectorXd embed_vector(const Eigen::VectorXcd& v) {
  Eigen::VectorXd out(2 * v.size());
  out.head(v.size()) = v.real();
  out.tail(v.size()) = v.imag();
  return out;
}

Eigen::MatrixXcd sample_channel(int M, int N, Rng& rng) {
  if (M < 1 || N < 1) throw InvalidArgument("channel dimensions must be >= 1");
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5 / M));
  Eigen::MatrixXcd H(M, N);
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < N; ++j) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      H(i, j) = {re, im};
    }
  }
  return H;
}

double sigma2_for_snr(double snr_db, int M, int N) {
  return double(N) / (double(M) * std::pow(10.0, snr_db / 10.0));
}

namespace {

Sample assemble(Eigen::MatrixXcd H, int M, int N,
                const Constellation& constellation, double snr_db, Rng& rng) {
  const int k = constellation.pam_size();
  std::uniform_int_distribution<int> pick(0, k - 1);

  Sample s;
  s.labels.resize(2 * N);
  s.x_true.resize(N);
  for (int n = 0; n < N; ++n) {
    const int re = pick(rng);
    const int im = pick(rng);
    s.labels[n] = re;
    s.labels[n + N] = im;
    s.x_true[n] = {constellation.pam[re], constellation.pam[im]};
  }

  const double sigma2 = sigma2_for_snr(snr_db, M, N);
  std::normal_distribution<double> noise(0.0, std::sqrt(sigma2 / 2.0));
  Eigen::VectorXcd y = H * s.x_true;
  for (int m = 0; m < M; ++m) {
    y[m] += std::complex<double>(noise(rng), noise(rng));
  }

  s.system = make_system(std::move(H), std::move(y), sigma2);
  s.x_true_real = embed_vector(s.x_true);
  return s;
}

}  // namespace

Sample sample_transmission(int M, int N, const Constellation& constellation,
                           double snr_db, Rng& rng) {
  return assemble(sample_channel(M, N, rng), M, N, constellation, snr_db, rng);
}

Sample sample_transmission_csi_error(int M, int N,
                                     const Constellation& constellation,
                                     double snr_db, double channel_error_var,
                                     Rng& rng, Rng& error_rng) {
  if (channel_error_var < 0.0) throw InvalidArgument("channel_error_var must be >= 0");
  Eigen::MatrixXcd H = sample_channel(M, N, rng);
  Sample s = assemble(H, M, N, constellation, snr_db, rng);
  if (channel_error_var > 0.0) {
    std::normal_distribution<double> err(0.0, std::sqrt(channel_error_var / 2.0));
    for (int i = 0; i < M; ++i) {
      for (int j = 0; j < N; ++j) {
        H(i, j) += std::complex<double>(err(error_rng), err(error_rng));
      }
    }
    // Detectors see the perturbed channel; y and x_true stay as generated.
    s.system.H = std::move(H);
    embed_real(s.system);
  }
  return s;
}

int count_symbol_errors(const std::vector<int>& hard,
                        const std::vector<int>& labels, int N) {
  int errors = 0;
  for (int k = 0; k < N; ++k) {
    if (hard[k] != labels[k] || hard[k + N] != labels[k + N]) ++errors;
  }
  return errors;
}

std::vector<Sample> generate_batch(int count, int M, int N,
                                   const Constellation& constellation,
                                   double snr_db, Rng& rng) {
  if (count < 1) throw InvalidArgument("batch count must be >= 1");
  std::vector<Sample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    out.push_back(sample_transmission(M, N, constellation, snr_db, rng));
  }
  return out;
}

}  // namespace mpdet
