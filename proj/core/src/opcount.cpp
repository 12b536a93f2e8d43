#include "mpdet/opcount.hpp"

#include <cmath>
#include <sstream>

#include "mpdet/errors.hpp"

namespace mpdet {

OpCountReport count_ops(int M, int N, int Q, int T, int L,
                        const MpnnSizes& sizes) {
  if (M < 1 || N < 1 || T < 1 || L < 1) {
    throw InvalidArgument("count_ops requires positive dimensions");
  }
  const std::int64_t m = M, n = N;
  const int sq = static_cast<int>(std::lround(std::sqrt(double(Q))));
  const std::int64_t nodes = 2 * n;
  const std::int64_t nu = sizes.nu, nh1 = sizes.nh1, nh2 = sizes.nh2;

  OpCountReport rep;
  rep.M = M;
  rep.N = N;
  rep.Q = Q;
  rep.T = T;
  rep.L = L;
  rep.sizes = sizes;

  // Complex-domain AMP layer: variance moment (MN), Onsager-corrected mean
  // (4MN + 4M), equivalent noise variance (MN + M + N), equivalent
  // observation (4MN + 2M + 2N), scalar denoiser (6 per point).
  rep.amp_setup = 2 * m * n;
  rep.amp_per_layer = 10 * m * n + 7 * m + 3 * n + 6 * n * Q;

  const std::int64_t mlp = nh1 * (2 * nu + 2) + nh2 * nh1 + nu * nh2;
  const std::int64_t gru = 3 * (nh1 * (nu + 2) + nh1 * nh1) + 3 * nh1;
  const std::int64_t upd = nu * nh1;
  rep.gnn_node_per_layer = std::int64_t(L) * nodes * (mlp + gru + upd);
  rep.gnn_readout_per_layer = nodes * (nh1 * nu + nh2 * nh1 + sq * nh2);
  rep.gnn_encoder = nodes * 2 * m + nodes * nu * 3;
  rep.gnn_edge_attr = m * nodes * (nodes - 1);  // unique pairs x 2M dot

  rep.amp_total = rep.amp_setup + std::int64_t(T) * rep.amp_per_layer;
  rep.gnn_total = std::int64_t(T) * (rep.gnn_node_per_layer + rep.gnn_readout_per_layer) +
                  rep.gnn_encoder + rep.gnn_edge_attr;
  rep.total = rep.amp_total + rep.gnn_total;
  return rep;
}

std::int64_t lmmse_reference_count(int M, int N, int T) {
  const std::int64_t n2 = 2 * std::int64_t(N);
  // Per layer: one n2 x n2 inverse plus the Gram and matrix-vector work.
  return std::int64_t(T) * (n2 * n2 * n2 + 4 * std::int64_t(M) * N * N +
                            4 * std::int64_t(M) * N);
}

std::string OpCountReport::to_string() const {
  std::ostringstream os;
  os << "op count (real multiplications per detected vector), " << M << "x" << N
     << " " << Q << "-QAM, T=" << T << ", L=" << L << "\n";
  os << "  amp: setup " << amp_setup << ", per layer " << amp_per_layer
     << ", total " << amp_total << "\n";
  os << "  gnn: per layer nodes " << gnn_node_per_layer << ", readout "
     << gnn_readout_per_layer << ", encoder " << gnn_encoder << ", edge attrs "
     << gnn_edge_attr << ", total " << gnn_total << "\n";
  os << "  total " << total << "\n";
  return os.str();
}

}  // namespace mpdet
