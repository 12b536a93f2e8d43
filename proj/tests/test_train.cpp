#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mpdet/errors.hpp"
#include "mpdet/train.hpp"

using namespace mpdet;

namespace {

double batch_loss(const std::vector<Sample>& batch, const AmpGnnConfig& cfg) {
  double acc = 0.0;
  for (const auto& s : batch) {
    AmpGnnResult res = amp_gnn_detect(s.system, cfg);
    acc += loss_l2(res.soft.x_hat, s.x_true_real);
  }
  return acc / double(batch.size());
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_SUITE_BEGIN("train");

TEST_CASE("l2 loss basics") {
  Eigen::VectorXd a(2), b(2);
  a << 1.0, 2.0;
  b << 1.0, 2.0;
  CHECK(loss_l2(a, b) == 0.0);

  Eigen::VectorXd d(2);
  d << 4.0, 6.0;
  CHECK(loss_l2(a, d) == doctest::Approx(25.0));  // difference (3,4)

  Eigen::VectorXd p1(3), p2(3);
  p1 << 0.3, -1.2, 0.9;
  p2 << 1.1, 0.4, -0.5;
  Eigen::VectorXd q1(3), q2(3);
  q1 << p1[2], p1[0], p1[1];
  q2 << p2[2], p2[0], p2[1];
  CHECK(loss_l2(p1, p2) == doctest::Approx(loss_l2(q1, q2)).epsilon(1e-15));

  Eigen::VectorXd wrong(2);
  CHECK_THROWS_AS(loss_l2(a, p1), InvalidArgument);
}

TEST_CASE("reverse-mode gradients match central finite differences") {
  const Constellation c = make_constellation(4);
  AmpGnnConfig cfg;
  cfg.T = 2;
  cfg.L = 1;
  cfg.constellation = c;
  cfg.params = make_mpnn_params(8, 16, 8, 2, 2024);

  Rng rng = make_stream(5150);
  std::vector<Sample> batch = generate_batch(3, 2, 2, c, 12.0, rng);

  BackwardResult bw = backward_batch(batch, cfg, 1);
  CHECK(std::isfinite(bw.loss));

  const double h = 1e-5;
  double worst = 0.0;
  const char* worst_tensor = "";
  auto refs = tensor_refs(cfg.params);
  auto grefs = tensor_refs(bw.grads);
  for (std::size_t ti = 0; ti < refs.size(); ++ti) {
    for (Eigen::Index i = 0; i < refs[ti].size(); ++i) {
      const double keep = refs[ti].data[i];
      refs[ti].data[i] = keep + h;
      const double lp = batch_loss(batch, cfg);
      refs[ti].data[i] = keep - h;
      const double lm = batch_loss(batch, cfg);
      refs[ti].data[i] = keep;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = grefs[ti].data[i];
      const double rel =
          std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6});
      if (rel > worst) {
        worst = rel;
        worst_tensor = refs[ti].name;
      }
    }
  }
  INFO("worst tensor: " << worst_tensor << " rel err " << worst);
  CHECK(worst < 1e-4);
}

TEST_CASE("gradients vanish upstream of zeroed readout weights") {
  const Constellation c = make_constellation(4);
  AmpGnnConfig cfg;
  cfg.T = 2;
  cfg.L = 1;
  cfg.constellation = c;
  cfg.params = make_mpnn_params(8, 16, 8, 2, 77);
  cfg.params.read_w1.setZero();
  cfg.params.read_b1.setZero();

  Rng rng = make_stream(5151);
  std::vector<Sample> batch = generate_batch(2, 2, 2, c, 12.0, rng);
  BackwardResult bw = backward_batch(batch, cfg, 1);

  CHECK(std::isfinite(bw.loss));
  // Nothing upstream of the readout can influence the loss.
  CHECK(bw.grads.enc_w.cwiseAbs().maxCoeff() == 0.0);
  CHECK(bw.grads.enc_b.cwiseAbs().maxCoeff() == 0.0);
  CHECK(bw.grads.prop_w1.cwiseAbs().maxCoeff() == 0.0);
  CHECK(bw.grads.gru_wc.cwiseAbs().maxCoeff() == 0.0);
  CHECK(bw.grads.agg_w.cwiseAbs().maxCoeff() == 0.0);
  // The readout bias path is still defined.
  CHECK(bw.grads.read_b3.allFinite());
}

TEST_CASE("gradient reduction does not depend on the thread count") {
  const Constellation c = make_constellation(4);
  AmpGnnConfig cfg;
  cfg.T = 3;
  cfg.L = 2;
  cfg.constellation = c;
  cfg.params = make_mpnn_params(8, 16, 8, 2, 31);

  Rng rng = make_stream(5252);
  std::vector<Sample> batch = generate_batch(5, 4, 4, c, 12.0, rng);
  BackwardResult g1 = backward_batch(batch, cfg, 1);
  BackwardResult g2 = backward_batch(batch, cfg, 2);
  CHECK(g1.loss == g2.loss);
  auto r1 = tensor_refs(g1.grads);
  auto r2 = tensor_refs(g2.grads);
  for (std::size_t i = 0; i < r1.size(); ++i) {
    for (Eigen::Index k = 0; k < r1[i].size(); ++k) {
      CHECK(r1[i].data[k] == r2[i].data[k]);
    }
  }
}

TEST_CASE("adam step behavior") {
  MpnnParams p = make_mpnn_params(8, 16, 8, 2, 4);
  MpnnParams zero_grad = zeros_like(p);
  AdamState st = make_adam_state(p);
  MpnnParams before = p;
  adam_step(p, zero_grad, st, 1e-3);
  CHECK(p.prop_w1 == before.prop_w1);  // zero gradients leave params alone
  CHECK(p.enc_w == before.enc_w);

  // First step moves each coordinate by at most ~lr (sign-like update).
  MpnnParams q = make_mpnn_params(8, 16, 8, 2, 4);
  MpnnParams grads = zeros_like(q);
  grads.prop_w1.setConstant(0.37);
  grads.enc_w.setConstant(-4.2);
  AdamState st2 = make_adam_state(q);
  MpnnParams before2 = q;
  const double lr = 1e-3;
  adam_step(q, grads, st2, lr);
  const double dmax =
      (q.prop_w1 - before2.prop_w1).cwiseAbs().maxCoeff();
  CHECK(dmax <= lr * (1.0 + 1e-6));
  CHECK(dmax >= lr * 0.99);
  CHECK((q.enc_w - before2.enc_w).minCoeff() > 0.0);  // against the gradient

  // Determinism: identical runs give identical trajectories.
  MpnnParams a = make_mpnn_params(8, 16, 8, 2, 9);
  MpnnParams b = make_mpnn_params(8, 16, 8, 2, 9);
  AdamState sa = make_adam_state(a), sb = make_adam_state(b);
  for (int i = 0; i < 5; ++i) {
    adam_step(a, grads, sa, 1e-3);
    adam_step(b, grads, sb, 1e-3);
  }
  CHECK(a.prop_w1 == b.prop_w1);
}

TEST_CASE("checkpoint round trip is byte exact") {
  Checkpoint ck;
  ck.T = 10;
  ck.L = 2;
  ck.epoch = 7;
  ck.seed = 424242;
  ck.params = make_mpnn_params(8, 16, 8, 2, 5);
  ck.loss_history = {1.25, 0.875, 0.3333333333333333};
  ck.val_ser_history = {0.25, 0.125, 0.0625};

  const std::string p1 = "/tmp/mpdet_ck_a.bin";
  const std::string p2 = "/tmp/mpdet_ck_b.bin";
  save_checkpoint(ck, p1);
  Checkpoint back = load_checkpoint(p1);
  save_checkpoint(back, p2);
  CHECK(slurp(p1) == slurp(p2));
  CHECK(back.params.prop_w1 == ck.params.prop_w1);
  CHECK(back.loss_history == ck.loss_history);
  CHECK(back.epoch == 7);
  CHECK(back.seed == 424242);
}

TEST_CASE("checkpoint rejects corruption") {
  Checkpoint ck;
  ck.T = 10;
  ck.L = 2;
  ck.params = make_mpnn_params(8, 16, 8, 2, 6);
  const std::string path = "/tmp/mpdet_ck_c.bin";
  save_checkpoint(ck, path);

  // Truncation.
  std::string bytes = slurp(path);
  {
    std::ofstream out("/tmp/mpdet_ck_trunc.bin", std::ios::binary);
    out.write(bytes.data(), std::streamsize(bytes.size() - 100));
  }
  CHECK_THROWS_AS(load_checkpoint("/tmp/mpdet_ck_trunc.bin"), InvalidArgument);

  // Version / magic mismatch.
  {
    std::string bad = bytes;
    bad[bad.find("v1") + 1] = '9';
    std::ofstream out("/tmp/mpdet_ck_ver.bin", std::ios::binary);
    out.write(bad.data(), std::streamsize(bad.size()));
  }
  CHECK_THROWS_AS(load_checkpoint("/tmp/mpdet_ck_ver.bin"), InvalidArgument);

  CHECK_THROWS_AS(load_checkpoint("/tmp/mpdet_no_such_file.bin"),
                  InvalidArgument);
}

TEST_CASE("checkpoint tensors are independent of the system size") {
  // Train-time dimensions never appear in the tensor shapes, so a
  // checkpoint produced at one user count must run at another.
  Checkpoint ck;
  ck.T = 3;
  ck.L = 1;
  ck.params = make_mpnn_params(8, 16, 8, 2, 8);
  const std::string path = "/tmp/mpdet_ck_n.bin";
  save_checkpoint(ck, path);
  Checkpoint back = load_checkpoint(path);

  const Constellation c = make_constellation(4);
  AmpGnnConfig cfg;
  cfg.T = back.T;
  cfg.L = back.L;
  cfg.constellation = c;
  cfg.params = back.params;
  Rng rng = make_stream(5353);
  Sample s = sample_transmission(24, 24, c, 10.0, rng);
  AmpGnnResult res = amp_gnn_detect(s.system, cfg);
  CHECK(res.soft.x_hat.size() == 48);
}

TEST_CASE("a short training run reduces the loss") {
  // 200 minibatches on an 8x8 system with a shallow unfolding.
  const Constellation c = make_constellation(4);
  AmpGnnConfig cfg;
  cfg.T = 3;
  cfg.L = 1;
  cfg.constellation = c;
  cfg.params = make_mpnn_params(8, 16, 8, 2, 12);
  AdamState adam = make_adam_state(cfg.params);

  double first = 0.0, last_avg = 0.0;
  for (int b = 0; b < 200; ++b) {
    Rng rng = make_stream(6000, b);
    std::vector<Sample> batch = generate_batch(8, 8, 8, c, 20.0, rng);
    BackwardResult bw = backward_batch(batch, cfg, 0);
    if (b == 0) first = bw.loss;
    if (b >= 180) last_avg += bw.loss / 20.0;
    adam_step(cfg.params, bw.grads, adam, 1e-3);
  }
  CHECK(last_avg < first);
}

TEST_CASE("overfitting a fixed batch decreases the loss monotonically") {
  const Constellation c = make_constellation(4);
  AmpGnnConfig cfg;
  cfg.T = 2;
  cfg.L = 1;
  cfg.constellation = c;
  cfg.params = make_mpnn_params(8, 16, 8, 2, 13);
  AdamState adam = make_adam_state(cfg.params);

  Rng rng = make_stream(6100);
  std::vector<Sample> batch = generate_batch(16, 4, 4, c, 15.0, rng);

  std::vector<double> losses;
  for (int step = 0; step < 10; ++step) {
    BackwardResult bw = backward_batch(batch, cfg, 0);
    losses.push_back(bw.loss);
    adam_step(cfg.params, bw.grads, adam, 1e-3);
  }
  int violations = 0;
  for (std::size_t i = 1; i < losses.size(); ++i) {
    if (losses[i] > losses[i - 1]) ++violations;
  }
  CHECK(violations <= 2);
  CHECK(losses.back() < losses.front());
}

TEST_CASE("training loop emits a best-validation checkpoint and resumes") {
  TrainConfig tc;
  tc.epochs = 2;
  tc.samples_per_epoch = 64;
  tc.batch_size = 16;
  tc.M = 4;
  tc.train_user_counts = {4};
  tc.T = 2;
  tc.L = 1;
  tc.seed = 19;
  tc.val_samples = 32;
  tc.train_snr_db = 18.0;

  Checkpoint ck = train(tc);
  CHECK(ck.loss_history.size() == 2);
  CHECK(ck.val_ser_history.size() == 2);
  CHECK(ck.epoch >= 1);
  CHECK(ck.params.all_finite());

  // Deterministic resume: continuing twice from the same checkpoint
  // reproduces the same next-epoch loss.
  TrainConfig rc = tc;
  rc.epochs = 1;
  Checkpoint r1 = train(rc, nullptr, &ck);
  Checkpoint r2 = train(rc, nullptr, &ck);
  CHECK(r1.loss_history.back() == r2.loss_history.back());
  CHECK(r1.loss_history.size() == 3);
}

TEST_SUITE_END();
