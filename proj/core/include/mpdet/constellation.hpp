#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace mpdet {

/// Unit-energy square QAM constellation together with its per-dimension
/// PAM alphabet.  Complex points are the Cartesian product of the PAM
/// points over the I and Q dimensions, so all per-dimension processing
/// works on `pam` with the prior `prior`.
struct Constellation {
  int order = 0;                               // Q
  std::vector<std::complex<double>> points;    // Q complex symbols, E|s|^2 = 1
  Eigen::VectorXd pam;                         // sqrt(Q) real amplitudes, ascending
  Eigen::VectorXd prior;                       // sqrt(Q) probabilities, sums to 1

  int pam_size() const { return static_cast<int>(pam.size()); }

  /// Index of the nearest PAM point to v.
  int nearest_pam(double v) const;
};

/// Builds a Q-QAM constellation for Q in {4, 16, 64}, normalized to unit
/// average symbol energy, with a uniform prior. Throws InvalidArgument for
/// unsupported orders.
Constellation make_constellation(int order);

}  // namespace mpdet
