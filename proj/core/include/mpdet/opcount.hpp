#pragma once

#include <cstdint>
#include <string>

namespace mpdet {

struct MpnnSizes {
  int nu = 8;
  int nh1 = 16;
  int nh2 = 8;
};

/// Closed-form real-multiplication counts per detected vector.
///
/// Convention: real multiplications and divisions count 1 each, one complex
/// multiply counts 4; additions and transcendental evaluations are free.
/// The AMP part is counted for the complex-domain algorithm. The network
/// part follows the per-node accounting of the propagation/aggregation
/// modules (one propagation MLP, one GRU update and one hidden-vector map
/// per node per round); the pairwise edge-attribute projections are the
/// quadratic edge term, counted once per detected vector.
struct OpCountReport {
  int M = 0, N = 0, Q = 0, T = 0, L = 0;
  MpnnSizes sizes;

  std::int64_t amp_setup = 0;           // |a_mn|^2 table
  std::int64_t amp_per_layer = 0;
  std::int64_t gnn_node_per_layer = 0;  // L rounds of MLP + GRU + update
  std::int64_t gnn_readout_per_layer = 0;
  std::int64_t gnn_encoder = 0;         // init features + encoder, once
  std::int64_t gnn_edge_attr = 0;       // pairwise Gram dots, once

  std::int64_t amp_total = 0;
  std::int64_t gnn_total = 0;
  std::int64_t total = 0;

  std::string to_string() const;
};

OpCountReport count_ops(int M, int N, int Q, int T, int L,
                        const MpnnSizes& sizes = {});

/// Reference count for an LMMSE-based unfolded detector of the same depth
/// (matrix inverse plus Gram per layer), used for complexity-ratio
/// comparisons against detectors that avoid matrix inversion.
std::int64_t lmmse_reference_count(int M, int N, int T);

}  // namespace mpdet
