#include "mpdet/amp_gnn.hpp"

#include <cmath>

#include "mpdet/errors.hpp"
#include "mpdet/pmf.hpp"

namespace mpdet {

AmpGnnResult amp_gnn_detect(const LinearSystem& sys, const AmpGnnConfig& cfg,
                            AmpGnnTrace* trace) {
  if (cfg.T < 1) throw InvalidArgument("layer count must be >= 1");
  const Constellation& c = cfg.constellation;
  const int sq = c.pam_size();
  if (!cfg.use_denoiser_pmf && cfg.params.sq != sq) {
    throw InvalidArgument("network readout size does not match constellation");
  }

  AmpState state = amp_init(sys);
  const int n2 = static_cast<int>(state.x_hat.size());
  const GraphFeatures features = make_graph_features(sys);
  MpnnState carry;

  if (trace) {
    trace->features = features;
    trace->layers.clear();
    trace->layers.resize(cfg.T);
  }

  AmpGnnResult out;
  out.trajectory.reserve(cfg.T);
  Eigen::MatrixXd pmf(n2, sq);
  Eigen::MatrixXd d(n2, 2);

  for (int t = 0; t < cfg.T; ++t) {
    AmpGnnLayerTrace* lt = trace ? &trace->layers[t] : nullptr;
    if (lt) {
      lt->x_in = state.x_hat;
      lt->v_in = state.v_hat;
      lt->Z_prev = state.Z;
      lt->V_prev = state.V;
    }

    amp_linear_step(state, sys);
    if (lt) {
      lt->V = state.V;
      lt->Z = state.Z;
      lt->Sigma = state.Sigma;
      lt->r = state.r;
    }

    if (cfg.use_denoiser_pmf) {
      for (int n = 0; n < n2; ++n) {
        pmf.row(n) = denoiser_pmf({state.r[n], state.Sigma[n]}, c).transpose();
      }
    } else {
      d.col(0) = state.r;
      d.col(1) = state.Sigma;
      GnnForwardResult g =
          gnn_forward(features, d, carry, cfg.params, cfg.L, lt ? &lt->gnn : nullptr);
      carry = std::move(g.carry);
      const Eigen::MatrixXd q = softmax_rows(g.logits);
      for (int n = 0; n < n2; ++n) {
        pmf.row(n) = refine_with_prior(q.row(n).transpose(), c.prior).transpose();
      }
      if (lt) {
        lt->q = q;
        lt->pmf = pmf;
      }
    }

    for (int n = 0; n < n2; ++n) {
      double mean, var;
      moments_from_pmf(pmf.row(n).transpose(), c, mean, var);
      state.x_hat[n] = mean;
      state.v_hat[n] = std::max(var, cfg.v_floor);
      if (lt) {
        if (lt->mean.size() == 0) {
          lt->mean.resize(n2);
          lt->var_raw.resize(n2);
        }
        lt->mean[n] = mean;
        lt->var_raw[n] = var;
      }
    }
    if (!state.x_hat.allFinite() || !state.v_hat.allFinite()) {
      throw NonFiniteError("unfolded detector produced a non-finite estimate",
                           t + 1);
    }
    out.trajectory.push_back({state.x_hat, state.v_hat, state.r, state.Sigma});
  }

  out.soft.pmf = pmf;
  out.soft.x_hat = state.x_hat;
  out.soft.v_hat = state.v_hat;
  out.soft.hard.resize(n2);
  for (int n = 0; n < n2; ++n) {
    Eigen::Index best;
    pmf.row(n).maxCoeff(&best);
    out.soft.hard[n] = static_cast<int>(best);
  }
  out.ops = count_ops(sys.rows(), sys.cols(), c.order, cfg.T, cfg.L,
                      {cfg.params.nu > 0 ? cfg.params.nu : 8,
                       cfg.params.nh1 > 0 ? cfg.params.nh1 : 16,
                       cfg.params.nh2 > 0 ? cfg.params.nh2 : 8});
  return out;
}

}  // namespace mpdet
