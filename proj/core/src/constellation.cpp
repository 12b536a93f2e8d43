#include "mpdet/constellation.hpp"

#include <cmath>

#include "mpdet/errors.hpp"

namespace mpdet {

int Constellation::nearest_pam(double v) const {
  int best = 0;
  double best_d = std::abs(v - pam[0]);
  for (int i = 1; i < pam.size(); ++i) {
    double d = std::abs(v - pam[i]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

Constellation make_constellation(int order) {
  if (order != 4 && order != 16 && order != 64) {
    throw InvalidArgument("unsupported QAM order " + std::to_string(order) +
                          " (expected 4, 16 or 64)");
  }
  const int k = static_cast<int>(std::lround(std::sqrt(double(order))));

  // Levels -(k-1), ..., -1, 1, ..., (k-1) in steps of 2, scaled so that
  // E|s|^2 = 1 over the complex constellation. Per dimension the raw
  // second moment is (k^2 - 1)/3, hence the 2(k^2-1)/3 normalizer.
  Constellation c;
  c.order = order;
  c.pam.resize(k);
  const double scale = std::sqrt(3.0 / (2.0 * (double(k) * k - 1.0)));
  for (int i = 0; i < k; ++i) {
    c.pam[i] = scale * double(2 * i - (k - 1));
  }
  c.prior = Eigen::VectorXd::Constant(k, 1.0 / k);

  c.points.reserve(order);
  for (int re = 0; re < k; ++re) {
    for (int im = 0; im < k; ++im) {
      c.points.emplace_back(c.pam[re], c.pam[im]);
    }
  }
  return c;
}

}  // namespace mpdet
