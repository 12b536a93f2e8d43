#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mpdet/constellation.hpp"
#include "mpdet/system.hpp"

namespace mpdet {

/// Exact posterior computed by full enumeration of the finite alphabet.
struct OracleResult {
  Eigen::MatrixXd marginals;      // 2N x sqrt(Q), rows sum to 1
  std::vector<int> map_labels;    // exact MAP vector, PAM indices
  Eigen::VectorXd map_x;          // the same vector in amplitude form
  std::int64_t evaluation_count = 0;  // (sqrt(Q))^(2N)
};

/// Maximum number of candidate vectors the oracle will enumerate.
inline constexpr std::int64_t kOracleBudget = 10'000'000;

/// Exact per-dimension posterior marginals and the MAP vector, by
/// lexicographic enumeration of all (sqrt(Q))^(2N) candidates with
/// log-domain weights exp(-||y - A x||^2 / (2 sigma2_real)).
/// Throws InvalidArgument when the instance exceeds kOracleBudget.
OracleResult oracle_marginals(const LinearSystem& sys, const Constellation& c);

/// Exact minimum-distance (maximum-likelihood) vector over the full
/// alphabet; same size bound as oracle_marginals.
std::vector<int> map_detect(const LinearSystem& sys, const Constellation& c);

}  // namespace mpdet
