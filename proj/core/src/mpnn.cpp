#include "mpdet/mpnn.hpp"

#include <cmath>

#include "mpdet/errors.hpp"
#include "mpdet/rng.hpp"

namespace mpdet {

namespace {

template <class P, class F>
void visit_tensors(P& p, F&& f) {
  f("enc_w", p.enc_w);
  f("enc_b", p.enc_b);
  f("prop_w1", p.prop_w1);
  f("prop_b1", p.prop_b1);
  f("prop_w2", p.prop_w2);
  f("prop_b2", p.prop_b2);
  f("prop_w3", p.prop_w3);
  f("prop_b3", p.prop_b3);
  f("gru_wr", p.gru_wr);
  f("gru_wz", p.gru_wz);
  f("gru_wc", p.gru_wc);
  f("gru_ur", p.gru_ur);
  f("gru_uz", p.gru_uz);
  f("gru_uc", p.gru_uc);
  f("gru_br", p.gru_br);
  f("gru_bz", p.gru_bz);
  f("gru_bc", p.gru_bc);
  f("agg_w", p.agg_w);
  f("agg_b", p.agg_b);
  f("read_w1", p.read_w1);
  f("read_b1", p.read_b1);
  f("read_w2", p.read_w2);
  f("read_b2", p.read_b2);
  f("read_w3", p.read_w3);
  f("read_b3", p.read_b3);
}

}  // namespace

std::vector<TensorRef> tensor_refs(MpnnParams& p) {
  std::vector<TensorRef> refs;
  visit_tensors(p, [&](const char* name, auto& m) {
    refs.push_back({name, m.data(), m.rows(), m.cols()});
  });
  return refs;
}

std::vector<TensorRef> tensor_refs(const MpnnParams& p) {
  return tensor_refs(const_cast<MpnnParams&>(p));
}

std::int64_t MpnnParams::scalar_count() const {
  std::int64_t n = 0;
  for (const auto& r : tensor_refs(*this)) n += r.size();
  return n;
}

bool MpnnParams::all_finite() const {
  for (const auto& r : tensor_refs(*this)) {
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      if (!std::isfinite(r.data[i])) return false;
    }
  }
  return true;
}

std::int64_t mpnn_param_count(int nu, int nh1, int nh2, int sq) {
  const std::int64_t enc = std::int64_t(nu) * 3 + nu;
  const std::int64_t prop = std::int64_t(nh1) * (2 * nu + 2) + nh1 +
                            std::int64_t(nh2) * nh1 + nh2 +
                            std::int64_t(nu) * nh2 + nu;
  const std::int64_t gru =
      3 * (std::int64_t(nh1) * (nu + 2) + std::int64_t(nh1) * nh1 + nh1);
  const std::int64_t agg = std::int64_t(nu) * nh1 + nu;
  const std::int64_t read = std::int64_t(nh1) * nu + nh1 +
                            std::int64_t(nh2) * nh1 + nh2 +
                            std::int64_t(sq) * nh2 + sq;
  return enc + prop + gru + agg + read;
}

MpnnParams make_mpnn_params(int nu, int nh1, int nh2, int sq,
                            std::uint64_t seed) {
  if (nu < 1 || nh1 < 1 || nh2 < 1 || sq < 2) {
    throw InvalidArgument("invalid MPNN sizes");
  }
  MpnnParams p;
  p.nu = nu;
  p.nh1 = nh1;
  p.nh2 = nh2;
  p.sq = sq;

  p.enc_w.resize(nu, 3);
  p.enc_b = Eigen::VectorXd::Zero(nu);
  p.prop_w1.resize(nh1, 2 * nu + 2);
  p.prop_b1 = Eigen::VectorXd::Zero(nh1);
  p.prop_w2.resize(nh2, nh1);
  p.prop_b2 = Eigen::VectorXd::Zero(nh2);
  p.prop_w3.resize(nu, nh2);
  p.prop_b3 = Eigen::VectorXd::Zero(nu);
  for (auto* m : {&p.gru_wr, &p.gru_wz, &p.gru_wc}) m->resize(nh1, nu + 2);
  for (auto* m : {&p.gru_ur, &p.gru_uz, &p.gru_uc}) m->resize(nh1, nh1);
  for (auto* v : {&p.gru_br, &p.gru_bz, &p.gru_bc}) *v = Eigen::VectorXd::Zero(nh1);
  p.agg_w.resize(nu, nh1);
  p.agg_b = Eigen::VectorXd::Zero(nu);
  p.read_w1.resize(nh1, nu);
  p.read_b1 = Eigen::VectorXd::Zero(nh1);
  p.read_w2.resize(nh2, nh1);
  p.read_b2 = Eigen::VectorXd::Zero(nh2);
  p.read_w3.resize(sq, nh2);
  p.read_b3 = Eigen::VectorXd::Zero(sq);

  // Fan-in-scaled uniform weights; biases stay zero.
  Rng rng = make_stream(seed, 0x6d706e6e);  // "mpnn"
  visit_tensors(p, [&](const char*, auto& m) {
    if (m.cols() == 1) return;  // bias vector
    const double bound = std::sqrt(1.0 / double(m.cols()));
    std::uniform_real_distribution<double> uni(-bound, bound);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uni(rng);
  });
  return p;
}

MpnnParams zeros_like(const MpnnParams& p) {
  MpnnParams z = p;
  visit_tensors(z, [](const char*, auto& m) { m.setZero(); });
  return z;
}

GraphFeatures make_graph_features(const LinearSystem& sys) {
  const Eigen::MatrixXd& A = sys.H_real;
  GraphFeatures f;
  f.sigma2 = sys.sigma2_real;
  f.gram = A.transpose() * A;
  const Eigen::VectorXd ya = A.transpose() * sys.y_real;
  const int n = static_cast<int>(A.cols());
  f.init_feat.resize(n, 3);
  f.init_feat.col(0) = ya;
  f.init_feat.col(1) = f.gram.diagonal();
  f.init_feat.col(2).setConstant(f.sigma2);
  return f;
}

Eigen::MatrixXd encoder_init(const GraphFeatures& f, const MpnnParams& p) {
  return (f.init_feat * p.enc_w.transpose()).rowwise() + p.enc_b.transpose();
}

Eigen::MatrixXd propagate(const Eigen::MatrixXd& u, const GraphFeatures& f,
                          const MpnnParams& p, PropagationTrace* trace) {
  const int n = static_cast<int>(u.rows());
  const int E = edge_count(n);
  const int nu = p.nu;

  // First propagation layer, split over the concatenated input
  // [u_dest, u_src, gram, sigma2]: per-node partial products are shared by
  // all edges touching the node.
  const Eigen::MatrixXd Pd = u * p.prop_w1.leftCols(nu).transpose();
  const Eigen::MatrixXd Ps = u * p.prop_w1.middleCols(nu, nu).transpose();
  const Eigen::VectorXd wg = p.prop_w1.col(2 * nu);
  const Eigen::VectorXd base =
      f.sigma2 * p.prop_w1.col(2 * nu + 1) + p.prop_b1;

  Eigen::MatrixXd a1(E, p.nh1);
  for (int dest = 0, e = 0; dest < n; ++dest) {
    for (int src = 0; src < n; ++src) {
      if (src == dest) continue;
      a1.row(e++) = Pd.row(dest) + Ps.row(src) +
                    f.gram(src, dest) * wg.transpose() + base.transpose();
    }
  }
  a1 = a1.cwiseMax(0.0);

  Eigen::MatrixXd a2 =
      ((a1 * p.prop_w2.transpose()).rowwise() + p.prop_b2.transpose())
          .cwiseMax(0.0);
  Eigen::MatrixXd messages =
      (a2 * p.prop_w3.transpose()).rowwise() + p.prop_b3.transpose();

  if (trace) {
    trace->a1 = std::move(a1);
    trace->a2 = std::move(a2);
  }
  return messages;
}

MpnnState aggregate(const MpnnState& state, const Eigen::MatrixXd& messages,
                    const Eigen::MatrixXd& d, const MpnnParams& p,
                    AggregationTrace* trace) {
  const int n = static_cast<int>(state.g.rows());
  const int per = n - 1;

  Eigen::MatrixXd msum = Eigen::MatrixXd::Zero(n, p.nu);
  for (int dest = 0; dest < n; ++dest) {
    for (int k = 0; k < per; ++k) {  // ascending source order
      msum.row(dest) += messages.row(dest * per + k);
    }
  }
  Eigen::MatrixXd mvec(n, p.nu + 2);
  mvec.leftCols(p.nu) = msum;
  mvec.rightCols(2) = d;

  const Eigen::MatrixXd& g = state.g;
  auto sigmoid = [](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    return ((-x.array()).exp() + 1.0).inverse().matrix();
  };

  const Eigen::MatrixXd ar =
      (mvec * p.gru_wr.transpose() + g * p.gru_ur.transpose()).rowwise() +
      p.gru_br.transpose();
  const Eigen::MatrixXd az =
      (mvec * p.gru_wz.transpose() + g * p.gru_uz.transpose()).rowwise() +
      p.gru_bz.transpose();
  const Eigen::MatrixXd rg = sigmoid(ar);
  const Eigen::MatrixXd zg = sigmoid(az);
  const Eigen::MatrixXd hr = rg.cwiseProduct(g);
  const Eigen::MatrixXd ac =
      (mvec * p.gru_wc.transpose() + hr * p.gru_uc.transpose()).rowwise() +
      p.gru_bc.transpose();
  const Eigen::MatrixXd cand = ac.array().tanh().matrix();

  MpnnState out;
  out.g = (1.0 - zg.array()) * cand.array() + zg.array() * g.array();
  out.u = (out.g * p.agg_w.transpose()).rowwise() + p.agg_b.transpose();

  if (trace) {
    trace->msum = std::move(msum);
    trace->mvec = std::move(mvec);
    trace->rgate = rg;
    trace->zgate = zg;
    trace->hr = hr;
    trace->cand = cand;
  }
  return out;
}

Eigen::MatrixXd readout(const MpnnState& state, const MpnnParams& p,
                        ReadoutTrace* trace) {
  Eigen::MatrixXd r1 =
      ((state.u * p.read_w1.transpose()).rowwise() + p.read_b1.transpose())
          .cwiseMax(0.0);
  Eigen::MatrixXd r2 =
      ((r1 * p.read_w2.transpose()).rowwise() + p.read_b2.transpose())
          .cwiseMax(0.0);
  Eigen::MatrixXd logits =
      (r2 * p.read_w3.transpose()).rowwise() + p.read_b3.transpose();
  if (trace) {
    trace->r1 = std::move(r1);
    trace->r2 = std::move(r2);
  }
  return logits;
}

GnnForwardResult gnn_forward(const GraphFeatures& f, const Eigen::MatrixXd& d,
                             const MpnnState& carry, const MpnnParams& p, int L,
                             GnnForwardTrace* trace) {
  if (L < 1) throw InvalidArgument("GNN round count must be >= 1");
  const int n = f.nodes();
  if (d.rows() != n || d.cols() != 2) {
    throw InvalidArgument("node attribute matrix must be nodes x 2");
  }

  MpnnState state;
  if (carry.empty()) {
    state.u = encoder_init(f, p);
    state.g = Eigen::MatrixXd::Zero(n, p.nh1);
  } else {
    if (carry.u.rows() != n || carry.u.cols() != p.nu ||
        carry.g.rows() != n || carry.g.cols() != p.nh1) {
      throw InvalidArgument("carried MPNN state does not match the system size");
    }
    state = carry;
  }

  if (trace) trace->rounds.resize(L);
  for (int l = 0; l < L; ++l) {
    GnnRoundTrace* rt = trace ? &trace->rounds[l] : nullptr;
    if (rt) {
      rt->u_in = state.u;
      rt->g_in = state.g;
    }
    Eigen::MatrixXd messages =
        propagate(state.u, f, p, rt ? &rt->prop : nullptr);
    state = aggregate(state, messages, d, p, rt ? &rt->agg : nullptr);
  }

  GnnForwardResult out;
  if (trace) trace->u_final = state.u;
  out.logits = readout(state, p, trace ? &trace->read : nullptr);
  out.carry = std::move(state);
  return out;
}

}  // namespace mpdet
