#include "mpdet/oracle.hpp"

#include <cmath>
#include <limits>

#include "mpdet/errors.hpp"

namespace mpdet {

namespace {

std::int64_t candidate_count(int k, int dims) {
  std::int64_t count = 1;
  for (int i = 0; i < dims; ++i) {
    count *= k;
    if (count > kOracleBudget) {
      throw InvalidArgument(
          "oracle instance too large: (sqrt Q)^(2N) exceeds the budget of " +
          std::to_string(kOracleBudget) + " candidates");
    }
  }
  return count;
}

/// Lexicographic odometer over pam^(dims) with an incrementally maintained
/// residual y - A x. Calls fn(digits, log_weight) for every candidate,
/// where log_weight = -||y - A x||^2 / (2 sigma2_real).
template <class F>
void enumerate(const LinearSystem& sys, const Constellation& c, F&& fn) {
  const Eigen::MatrixXd& A = sys.H_real;
  const Eigen::VectorXd& y = sys.y_real;
  const int dims = static_cast<int>(A.cols());
  const int k = c.pam_size();
  const double inv = 0.5 / sys.sigma2_real;

  std::vector<int> digits(dims, 0);
  Eigen::VectorXd resid = y - A.rowwise().sum() * c.pam[0];

  for (;;) {
    fn(digits, -resid.squaredNorm() * inv);
    int p = dims - 1;
    while (p >= 0 && digits[p] == k - 1) {
      resid += (c.pam[digits[p]] - c.pam[0]) * A.col(p);
      digits[p] = 0;
      --p;
    }
    if (p < 0) break;
    resid -= (c.pam[digits[p] + 1] - c.pam[digits[p]]) * A.col(p);
    digits[p] += 1;
  }
}

}  // namespace

OracleResult oracle_marginals(const LinearSystem& sys, const Constellation& c) {
  const int dims = 2 * sys.cols();
  const int k = c.pam_size();

  OracleResult out;
  out.evaluation_count = candidate_count(k, dims);

  // Pass 1: global max log weight (with the prior folded in) and the MAP.
  const Eigen::VectorXd logp = c.prior.array().log();
  double max_logw = -std::numeric_limits<double>::infinity();
  out.map_labels.assign(dims, 0);
  enumerate(sys, c, [&](const std::vector<int>& digits, double logw) {
    for (int d = 0; d < dims; ++d) logw += logp[digits[d]];
    if (logw > max_logw) {
      max_logw = logw;
      out.map_labels = digits;
    }
  });

  // Pass 2: accumulate max-subtracted weights into per-dimension bins.
  Eigen::MatrixXd bins = Eigen::MatrixXd::Zero(dims, k);
  double total = 0.0;
  enumerate(sys, c, [&](const std::vector<int>& digits, double logw) {
    for (int d = 0; d < dims; ++d) logw += logp[digits[d]];
    const double w = std::exp(logw - max_logw);
    total += w;
    for (int d = 0; d < dims; ++d) bins(d, digits[d]) += w;
  });

  out.marginals = bins / total;
  out.map_x.resize(dims);
  for (int d = 0; d < dims; ++d) out.map_x[d] = c.pam[out.map_labels[d]];
  return out;
}

std::vector<int> map_detect(const LinearSystem& sys, const Constellation& c) {
  const int dims = 2 * sys.cols();
  candidate_count(c.pam_size(), dims);

  // Uniform priors make the MAP the minimum-distance vector; with a
  // non-uniform prior the weight includes it, exactly as in the marginals.
  const Eigen::VectorXd logp = c.prior.array().log();
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> arg(dims, 0);
  enumerate(sys, c, [&](const std::vector<int>& digits, double logw) {
    for (int d = 0; d < dims; ++d) logw += logp[digits[d]];
    if (logw > best) {
      best = logw;
      arg = digits;
    }
  });
  return arg;
}

}  // namespace mpdet
