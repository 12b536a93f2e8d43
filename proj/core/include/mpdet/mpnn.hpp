#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mpdet/system.hpp"

namespace mpdet {

/// All learnable tensors of the graph network. One parameter set is shared
/// by every edge, every node and every unfolded detector layer, so the
/// checkpoint is independent of the system size and layer count.
struct MpnnParams {
  int nu = 0;   // hidden vector size N_u
  int nh1 = 0;  // first hidden layer / GRU state size N_h1
  int nh2 = 0;  // second hidden layer size N_h2
  int sq = 0;   // readout output size = per-dimension alphabet size sqrt(Q)

  // Hidden-vector encoder u0 = enc_w [y.a_n, a_n.a_n, sigma2]^T + enc_b.
  Eigen::MatrixXd enc_w;  // nu x 3
  Eigen::VectorXd enc_b;  // nu

  // Propagation MLP over [u_dest, u_src, edge_attr]: (2nu+2) -> nh1 -> nh2 -> nu,
  // ReLU after each hidden layer, linear output.
  Eigen::MatrixXd prop_w1;  // nh1 x (2nu+2)
  Eigen::VectorXd prop_b1;  // nh1
  Eigen::MatrixXd prop_w2;  // nh2 x nh1
  Eigen::VectorXd prop_b2;  // nh2
  Eigen::MatrixXd prop_w3;  // nu x nh2
  Eigen::VectorXd prop_b3;  // nu

  // GRU cell: input [message sum, node attr] of size nu+2, hidden nh1.
  // reset = sig(Wr x + Ur g + br), update = sig(Wz x + Uz g + bz),
  // cand  = tanh(Wc x + Uc (reset .* g) + bc),
  // g'    = (1 - update) .* cand + update .* g.
  Eigen::MatrixXd gru_wr, gru_wz, gru_wc;  // nh1 x (nu+2)
  Eigen::MatrixXd gru_ur, gru_uz, gru_uc;  // nh1 x nh1
  Eigen::VectorXd gru_br, gru_bz, gru_bc;  // nh1

  // Hidden-vector update u = agg_w g' + agg_b.
  Eigen::MatrixXd agg_w;  // nu x nh1
  Eigen::VectorXd agg_b;  // nu

  // Readout MLP: nu -> nh1 -> nh2 -> sq, ReLU hidden layers, linear output.
  Eigen::MatrixXd read_w1;  // nh1 x nu
  Eigen::VectorXd read_b1;
  Eigen::MatrixXd read_w2;  // nh2 x nh1
  Eigen::VectorXd read_b2;
  Eigen::MatrixXd read_w3;  // sq x nh2
  Eigen::VectorXd read_b3;

  std::int64_t scalar_count() const;
  bool all_finite() const;
};

/// Mutable view of one named parameter tensor.
struct TensorRef {
  const char* name;
  double* data;
  Eigen::Index rows, cols;
  Eigen::Index size() const { return rows * cols; }
};

/// Canonically ordered views over every tensor in the set. The order is
/// stable and shared by gradients, optimizer state and checkpoints.
std::vector<TensorRef> tensor_refs(MpnnParams& p);
std::vector<TensorRef> tensor_refs(const MpnnParams& p);  // const_cast'd views

/// Closed-form learnable scalar count for the given sizes.
std::int64_t mpnn_param_count(int nu, int nh1, int nh2, int sq);

/// Allocates parameter tensors with fan-in-scaled uniform weights
/// (+-sqrt(1/fan_in)) and zero biases, from a fixed seed.
MpnnParams make_mpnn_params(int nu, int nh1, int nh2, int sq, std::uint64_t seed);

/// Same shapes, all zeros (gradient and optimizer-state buffers).
MpnnParams zeros_like(const MpnnParams& p);

/// Per-node hidden vectors and GRU states, carried across unfolded layers.
struct MpnnState {
  Eigen::MatrixXd u;  // nodes x nu
  Eigen::MatrixXd g;  // nodes x nh1
  bool empty() const { return u.size() == 0; }
};

/// Node and edge attributes of the complete graph over the 2N real
/// dimensions: init_feat row n = [y.a_n, a_n.a_n, sigma2], and the Gram
/// matrix A^T A whose (j,n) entry is the edge attribute a_n.a_j.
struct GraphFeatures {
  Eigen::MatrixXd init_feat;  // nodes x 3
  Eigen::MatrixXd gram;       // nodes x nodes
  double sigma2 = 0.0;
  int nodes() const { return static_cast<int>(init_feat.rows()); }
};

GraphFeatures make_graph_features(const LinearSystem& sys);

/// Encoder for the initial hidden vectors, one row per node.
Eigen::MatrixXd encoder_init(const GraphFeatures& f, const MpnnParams& p);

/// Directed edges are laid out destination-major with ascending source:
/// edge e = dest * (nodes-1) + (src < dest ? src : src - 1).
inline int edge_count(int nodes) { return nodes * (nodes - 1); }

/// Post-ReLU activations of the propagation MLP, one row per edge.
struct PropagationTrace {
  Eigen::MatrixXd a1, a2;
};

/// Messages m_{src->dest} = MLP([u_dest, u_src, f_{src,dest}]) for every
/// ordered pair, one row per edge in canonical order.
Eigen::MatrixXd propagate(const Eigen::MatrixXd& u, const GraphFeatures& f,
                          const MpnnParams& p, PropagationTrace* trace = nullptr);

struct AggregationTrace {
  Eigen::MatrixXd msum, mvec, rgate, zgate, hr, cand;
};

/// Sums incoming messages per node (fixed ascending source order),
/// concatenates the node attribute d, and updates (g, u) through the GRU
/// and the linear hidden-vector map.
MpnnState aggregate(const MpnnState& state, const Eigen::MatrixXd& messages,
                    const Eigen::MatrixXd& d, const MpnnParams& p,
                    AggregationTrace* trace = nullptr);

struct ReadoutTrace {
  Eigen::MatrixXd r1, r2;
};

/// Per-node logits over the sqrt(Q) PAM points.
Eigen::MatrixXd readout(const MpnnState& state, const MpnnParams& p,
                        ReadoutTrace* trace = nullptr);

struct GnnRoundTrace {
  Eigen::MatrixXd u_in, g_in;
  PropagationTrace prop;
  AggregationTrace agg;
};

struct GnnForwardTrace {
  std::vector<GnnRoundTrace> rounds;
  ReadoutTrace read;
  Eigen::MatrixXd u_final;  // input to the readout
};

struct GnnForwardResult {
  Eigen::MatrixXd logits;  // nodes x sq
  MpnnState carry;
};

/// L rounds of propagate/aggregate followed by the readout. When carry is
/// empty the hidden vectors come from the encoder and g starts at zero;
/// otherwise the carried state is validated against the graph size and
/// reused (state carryover between unfolded layers).
GnnForwardResult gnn_forward(const GraphFeatures& f, const Eigen::MatrixXd& d,
                             const MpnnState& carry, const MpnnParams& p, int L,
                             GnnForwardTrace* trace = nullptr);

}  // namespace mpdet
