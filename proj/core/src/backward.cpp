#include <cmath>
#include <thread>

#include "mpdet/errors.hpp"
#include "mpdet/train.hpp"

namespace mpdet {

double loss_l2(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& x_true) {
  if (x_hat.size() != x_true.size()) {
    throw InvalidArgument("loss operands must have equal length");
  }
  return (x_hat - x_true).squaredNorm();
}

namespace {

inline Eigen::MatrixXd relu_mask(const Eigen::MatrixXd& post) {
  return (post.array() > 0.0).cast<double>();
}

/// Reverse pass through one GNN round. Consumes the adjoints of the round
/// outputs (du_out, dg_out), emits the adjoints of its inputs (du_in,
/// dg_in) and of the node attributes (dd), and accumulates parameter
/// gradients.
void round_backward(const GnnRoundTrace& rt, const GraphFeatures& f,
                    const MpnnParams& p, const Eigen::MatrixXd& du_out,
                    const Eigen::MatrixXd& dg_out_in, Eigen::MatrixXd& du_in,
                    Eigen::MatrixXd& dg_in, Eigen::MatrixXd& dd,
                    MpnnParams& grads) {
  const int nodes = static_cast<int>(rt.g_in.rows());
  const int per = nodes - 1;
  const int nu = p.nu;

  const Eigen::MatrixXd& g_in = rt.g_in;
  const Eigen::MatrixXd& z = rt.agg.zgate;
  const Eigen::MatrixXd& rg = rt.agg.rgate;
  const Eigen::MatrixXd& cand = rt.agg.cand;
  const Eigen::MatrixXd g_out =
      ((1.0 - z.array()) * cand.array() + z.array() * g_in.array()).matrix();

  // Hidden-vector update u = g' W^T + b.
  grads.agg_w.noalias() += du_out.transpose() * g_out;
  grads.agg_b += du_out.colwise().sum().transpose();
  Eigen::MatrixXd dg = dg_out_in + du_out * p.agg_w;

  // GRU cell.
  const Eigen::MatrixXd dz = dg.cwiseProduct(g_in - cand);
  const Eigen::MatrixXd dcand = dg.cwiseProduct((1.0 - z.array()).matrix());
  dg_in = dg.cwiseProduct(z);

  const Eigen::MatrixXd dac =
      dcand.array() * (1.0 - cand.array().square());
  Eigen::MatrixXd dmvec = dac * p.gru_wc;
  const Eigen::MatrixXd dhr = dac * p.gru_uc;
  grads.gru_wc.noalias() += dac.transpose() * rt.agg.mvec;
  grads.gru_uc.noalias() += dac.transpose() * rt.agg.hr;
  grads.gru_bc += dac.colwise().sum().transpose();

  const Eigen::MatrixXd drg = dhr.cwiseProduct(g_in);
  dg_in += dhr.cwiseProduct(rg);

  const Eigen::MatrixXd dar =
      drg.array() * rg.array() * (1.0 - rg.array());
  dmvec.noalias() += dar * p.gru_wr;
  dg_in.noalias() += dar * p.gru_ur;
  grads.gru_wr.noalias() += dar.transpose() * rt.agg.mvec;
  grads.gru_ur.noalias() += dar.transpose() * g_in;
  grads.gru_br += dar.colwise().sum().transpose();

  const Eigen::MatrixXd daz = dz.array() * z.array() * (1.0 - z.array());
  dmvec.noalias() += daz * p.gru_wz;
  dg_in.noalias() += daz * p.gru_uz;
  grads.gru_wz.noalias() += daz.transpose() * rt.agg.mvec;
  grads.gru_uz.noalias() += daz.transpose() * g_in;
  grads.gru_bz += daz.colwise().sum().transpose();

  const Eigen::MatrixXd dmsum = dmvec.leftCols(nu);
  dd += dmvec.rightCols(2);

  // Propagation MLP; incoming messages share the destination's adjoint.
  const int E = edge_count(nodes);
  Eigen::MatrixXd dm(E, nu);
  for (int dest = 0; dest < nodes; ++dest) {
    dm.middleRows(dest * per, per).rowwise() = dmsum.row(dest);
  }

  Eigen::MatrixXd da2 = dm * p.prop_w3;
  grads.prop_w3.noalias() += dm.transpose() * rt.prop.a2;
  grads.prop_b3 += dm.colwise().sum().transpose();

  const Eigen::MatrixXd dh2 = da2.cwiseProduct(relu_mask(rt.prop.a2));
  Eigen::MatrixXd da1 = dh2 * p.prop_w2;
  grads.prop_w2.noalias() += dh2.transpose() * rt.prop.a1;
  grads.prop_b2 += dh2.colwise().sum().transpose();

  const Eigen::MatrixXd dh1 = da1.cwiseProduct(relu_mask(rt.prop.a1));

  Eigen::MatrixXd dPd(nodes, p.nh1);
  Eigen::MatrixXd dPs = Eigen::MatrixXd::Zero(nodes, p.nh1);
  Eigen::VectorXd dwg = Eigen::VectorXd::Zero(p.nh1);
  for (int dest = 0, e = 0; dest < nodes; ++dest) {
    dPd.row(dest) = dh1.middleRows(dest * per, per).colwise().sum();
    for (int src = 0; src < nodes; ++src) {
      if (src == dest) continue;
      dPs.row(src) += dh1.row(e);
      dwg += f.gram(src, dest) * dh1.row(e).transpose();
      ++e;
    }
  }
  const Eigen::VectorXd dbase = dh1.colwise().sum().transpose();

  grads.prop_w1.col(2 * nu) += dwg;
  grads.prop_w1.col(2 * nu + 1) += f.sigma2 * dbase;
  grads.prop_b1 += dbase;
  grads.prop_w1.leftCols(nu).noalias() += dPd.transpose() * rt.u_in;
  grads.prop_w1.middleCols(nu, nu).noalias() += dPs.transpose() * rt.u_in;

  du_in = dPd * p.prop_w1.leftCols(nu) + dPs * p.prop_w1.middleCols(nu, nu);
}

}  // namespace

double backward_sample(const Sample& sample, const AmpGnnConfig& cfg,
                       const AmpGnnTrace& trace, MpnnParams& grads) {
  if (cfg.use_denoiser_pmf) {
    throw InvalidArgument("reverse pass requires the network pmf path");
  }
  const MpnnParams& p = cfg.params;
  const Constellation& c = cfg.constellation;
  const LinearSystem& sys = sample.system;
  const Eigen::MatrixXd& A = sys.H_real;
  const Eigen::MatrixXd A2 = A.cwiseAbs2();
  const Eigen::VectorXd& y = sys.y_real;
  const double sigma2 = sys.sigma2_real;
  const GraphFeatures& f = trace.features;
  const int n2 = static_cast<int>(A.cols());
  const int T = cfg.T;

  const Eigen::VectorXd pam2 = c.pam.cwiseProduct(c.pam);
  const double loss =
      loss_l2(trace.layers.back().mean, sample.x_true_real);

  // Adjoints of the layer outputs, initialized at the loss.
  Eigen::VectorXd dx = 2.0 * (trace.layers.back().mean - sample.x_true_real);
  Eigen::VectorXd dv = Eigen::VectorXd::Zero(n2);
  Eigen::VectorXd dZ_next = Eigen::VectorXd::Zero(2 * sys.rows());
  Eigen::VectorXd dV_next = Eigen::VectorXd::Zero(2 * sys.rows());
  Eigen::MatrixXd dUc = Eigen::MatrixXd::Zero(n2, p.nu);
  Eigen::MatrixXd dgc = Eigen::MatrixXd::Zero(n2, p.nh1);

  for (int t = T - 1; t >= 0; --t) {
    const AmpGnnLayerTrace& lt = trace.layers[t];

    // Moments of the pmf, with the variance floor.
    const Eigen::VectorXd dval =
        dv.cwiseProduct((lt.var_raw.array() > cfg.v_floor).cast<double>().matrix());
    const Eigen::VectorXd dm_tot = dx - 2.0 * lt.mean.cwiseProduct(dval);
    Eigen::MatrixXd dpmf =
        dm_tot * c.pam.transpose() + dval * pam2.transpose();

    // Prior refinement pmf = q .* prior / (q . prior).
    const Eigen::VectorXd zq = lt.q * c.prior;
    const Eigen::VectorXd c1 = (dpmf.array() * lt.pmf.array()).rowwise().sum();
    Eigen::MatrixXd dq =
        ((dpmf.colwise() - c1).array().rowwise() * c.prior.transpose().array())
            .colwise() /
        zq.array();

    // Softmax.
    const Eigen::VectorXd c2 = (dq.array() * lt.q.array()).rowwise().sum();
    Eigen::MatrixXd dlogits = lt.q.array() * (dq.colwise() - c2).array();

    // Readout MLP.
    const ReadoutTrace& rd = lt.gnn.read;
    grads.read_w3.noalias() += dlogits.transpose() * rd.r2;
    grads.read_b3 += dlogits.colwise().sum().transpose();
    Eigen::MatrixXd dr2 = dlogits * p.read_w3;
    const Eigen::MatrixXd dh2 = dr2.cwiseProduct(relu_mask(rd.r2));
    grads.read_w2.noalias() += dh2.transpose() * rd.r1;
    grads.read_b2 += dh2.colwise().sum().transpose();
    Eigen::MatrixXd dr1 = dh2 * p.read_w2;
    const Eigen::MatrixXd dh1 = dr1.cwiseProduct(relu_mask(rd.r1));
    grads.read_w1.noalias() += dh1.transpose() * lt.gnn.u_final;
    grads.read_b1 += dh1.colwise().sum().transpose();

    // GNN rounds, last to first. The final round's outputs also carry the
    // next layer's state adjoints.
    Eigen::MatrixXd du_out = dh1 * p.read_w1 + dUc;
    Eigen::MatrixXd dg_out = dgc;
    Eigen::MatrixXd dd = Eigen::MatrixXd::Zero(n2, 2);
    const int L = static_cast<int>(lt.gnn.rounds.size());
    for (int l = L - 1; l >= 0; --l) {
      Eigen::MatrixXd du_in, dg_in;
      round_backward(lt.gnn.rounds[l], f, p, du_out, dg_out, du_in, dg_in, dd,
                     grads);
      du_out = std::move(du_in);
      dg_out = std::move(dg_in);
    }
    if (t == 0) {
      // Hidden vectors come from the encoder; g starts at zero.
      grads.enc_w.noalias() += du_out.transpose() * f.init_feat;
      grads.enc_b += du_out.colwise().sum().transpose();
      dUc.setZero();
      dgc.setZero();
    } else {
      dUc = std::move(du_out);
      dgc = std::move(dg_out);
    }

    // AMP linear step.
    const Eigen::VectorXd dr_in = dd.col(0);
    Eigen::VectorXd dSig = dd.col(1);

    const Eigen::VectorXd w1 = (sigma2 + lt.V.array()).inverse().matrix();
    const Eigen::VectorXd iota = (sigma2 + lt.V_prev.array()).inverse().matrix();
    const Eigen::VectorXd rho = (y - lt.Z_prev).cwiseProduct(iota);
    const Eigen::VectorXd t_vec =
        (lt.r - lt.x_in).cwiseQuotient(lt.Sigma);  // A^T w2

    Eigen::VectorXd dx_in = dr_in;
    dSig += dr_in.cwiseProduct(t_vec);
    const Eigen::VectorXd dw2 = A * dr_in.cwiseProduct(lt.Sigma);
    const Eigen::VectorXd dq_lin =
        -dSig.cwiseProduct(lt.Sigma).cwiseProduct(lt.Sigma);
    Eigen::VectorXd dw1 = A2 * dq_lin + dw2.cwiseProduct(y - lt.Z);
    const Eigen::VectorXd dZ_loc = -dw2.cwiseProduct(w1);
    const Eigen::VectorXd dZ_tot = dZ_next + dZ_loc;

    Eigen::VectorXd dV = -dw1.cwiseProduct(w1).cwiseProduct(w1) -
                         dZ_tot.cwiseProduct(rho) + dV_next;
    dx_in.noalias() += A.transpose() * dZ_tot;
    const Eigen::VectorXd drho = -dZ_tot.cwiseProduct(lt.V);
    dZ_next = -drho.cwiseProduct(iota);
    dV_next = -drho.cwiseProduct(y - lt.Z_prev).cwiseProduct(iota).cwiseProduct(iota);
    const Eigen::VectorXd dv_in = A2.transpose() * dV;

    dx = std::move(dx_in);
    dv = dv_in;
  }
  return loss;
}

BackwardResult backward_batch(const std::vector<Sample>& batch,
                              const AmpGnnConfig& cfg, int threads) {
  if (batch.empty()) throw InvalidArgument("empty batch");
  const int B = static_cast<int>(batch.size());
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
  }
  threads = std::min(threads, B);

  std::vector<MpnnParams> slot(B);
  std::vector<double> losses(B, 0.0);
  std::vector<std::exception_ptr> errors(threads);

  auto work = [&](int w) {
    try {
      for (int k = w; k < B; k += threads) {
        slot[k] = zeros_like(cfg.params);
        AmpGnnTrace trace;
        amp_gnn_detect(batch[k].system, cfg, &trace);
        losses[k] = backward_sample(batch[k], cfg, trace, slot[k]);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  // Sample-index-order reduction keeps results independent of threading.
  BackwardResult out;
  out.grads = zeros_like(cfg.params);
  auto acc = tensor_refs(out.grads);
  for (int k = 0; k < B; ++k) {
    out.loss += losses[k];
    auto refs = tensor_refs(slot[k]);
    for (size_t i = 0; i < refs.size(); ++i) {
      Eigen::Map<Eigen::VectorXd>(acc[i].data, acc[i].size()) +=
          Eigen::Map<const Eigen::VectorXd>(refs[i].data, refs[i].size());
    }
  }
  out.loss /= B;
  const double inv = 1.0 / B;
  for (auto& r : acc) {
    Eigen::Map<Eigen::VectorXd> v(r.data, r.size());
    v *= inv;
    if (!v.allFinite()) {
      throw NonFiniteError(std::string("non-finite gradient in tensor ") + r.name,
                           0);
    }
  }
  return out;
}

}  // namespace mpdet
