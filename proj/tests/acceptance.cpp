// Acceptance gate: one criterion per line, [PASS]/[FAIL] with wall time.
// Exits nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "malimg/aug/mixup.hpp"
#include "malimg/aug/rng.hpp"
#include "malimg/aug/trivial.hpp"
#include "malimg/binimg/convert.hpp"
#include "malimg/binimg/dex.hpp"
#include "malimg/binimg/png_io.hpp"
#include "malimg/binimg/resize.hpp"
#include "malimg/harness/ablate.hpp"
#include "malimg/harness/config.hpp"
#include "malimg/harness/dataset.hpp"
#include "malimg/harness/synth.hpp"
#include "malimg/harness/train.hpp"
#include "malimg/metrics/metrics.hpp"
#include "malimg/nn/loss.hpp"
#include "malimg/nn/model.hpp"
#include "malimg/nn/ops.hpp"
#include "malimg/opt/adamw.hpp"
#include "malimg/opt/schedule_free.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace malimg;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(bool ok, const std::string& msg) {
  if (!ok) throw Failure(msg);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(bool(in), "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// optimizer-oracle
// ---------------------------------------------------------------------------

void optimizer_oracle() {
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 1 + static_cast<size_t>(rng() % 6);
    opt::SfHyper h;
    h.lr = 1e-4 + 0.1 * uni(rng);
    h.beta1 = 0.99 * uni(rng);
    h.beta2 = 0.8 + 0.1999 * uni(rng);
    h.weight_decay = 0.2 * uni(rng);
    h.warmup_steps = static_cast<long>(rng() % 30);
    oracle::SfRefHyper rh{h.lr, h.weight_decay, h.warmup_steps, h.beta1, h.beta2, h.eps};

    std::vector<double> theta0(n);
    for (auto& v : theta0) v = 2.0 * uni(rng) - 1.0;
    opt::SfState s = opt::sf_init(theta0);
    oracle::SfRef ref = oracle::sf_ref_init(theta0);

    std::vector<double> g(n);
    for (int step = 0; step < 50; ++step) {
      for (auto& v : g) v = 2.0 * uni(rng) - 1.0;
      opt::sf_step(s, g, h);
      oracle::sf_ref_step(ref, g, rh);
    }
    check(s.step_count == ref.t, "sf step_count drifted from the reference");
    for (size_t i = 0; i < n; ++i) {
      check(std::abs(s.x[i] - ref.x[i]) <= 1e-12, "sf x diverged: " + fmt(s.x[i] - ref.x[i]));
      check(std::abs(s.z[i] - ref.z[i]) <= 1e-12, "sf z diverged");
      check(std::abs(s.v[i] - ref.v[i]) <= 1e-12, "sf v diverged");
    }
    check(std::abs(s.lr_sq_sum - ref.sum_eta_sq) <= 1e-12, "sf step-size accumulator diverged");
  }

  for (int trial = 0; trial < 30; ++trial) {
    const size_t n = 1 + static_cast<size_t>(rng() % 6);
    opt::AdamWHyper h;
    h.lr = 1e-4 + 0.1 * uni(rng);
    h.beta1 = 0.99 * uni(rng);
    h.beta2 = 0.8 + 0.1999 * uni(rng);
    h.weight_decay = 0.2 * uni(rng);

    std::vector<double> p(n), pr(n);
    for (size_t i = 0; i < n; ++i) p[i] = pr[i] = 2.0 * uni(rng) - 1.0;
    opt::AdamWState s = opt::adamw_init(n);
    oracle::AwRef ref = oracle::aw_ref_init(n);

    std::vector<double> g(n);
    for (int step = 0; step < 50; ++step) {
      for (auto& v : g) v = 2.0 * uni(rng) - 1.0;
      opt::adamw_step(s, p, g, h);
      oracle::aw_ref_step(ref, pr, g, h.lr, h.beta1, h.beta2, h.eps, h.weight_decay);
    }
    for (size_t i = 0; i < n; ++i) {
      check(std::abs(p[i] - pr[i]) <= 1e-12, "adamw params diverged");
      check(std::abs(s.m[i] - ref.m[i]) <= 1e-12, "adamw m diverged");
      check(std::abs(s.v[i] - ref.v[i]) <= 1e-12, "adamw v diverged");
    }
  }
}

// ---------------------------------------------------------------------------
// averaging-identity
// ---------------------------------------------------------------------------

void averaging_identity() {
  opt::SfHyper h;
  h.lr = 0.01;
  h.warmup_steps = 0;  // c_t = 1/t, so x is the running mean of z
  const std::vector<double> theta0{0.3, -0.8, 1.1};
  opt::SfState s = opt::sf_init(theta0);

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<double> g(theta0.size());
  std::vector<double> z_sum(theta0.size(), 0.0);
  const int T = 10000;
  for (int t = 1; t <= T; ++t) {
    for (auto& v : g) v = uni(rng);
    opt::sf_step(s, g, h);
    for (size_t i = 0; i < z_sum.size(); ++i) {
      z_sum[i] += s.z[i];
      const double mean_z = z_sum[i] / t;
      check(std::abs(s.x[i] - mean_z) <= 1e-10,
            "x is not the mean of the z iterates at t=" + std::to_string(t) + ": diff " +
                fmt(s.x[i] - mean_z));
    }
  }
}

// ---------------------------------------------------------------------------
// warmup-ramp
// ---------------------------------------------------------------------------

void warmup_ramp() {
  opt::SfHyper h;
  h.warmup_steps = 1000;
  for (double lr : {0.01, 0.001, 0.005}) {
    h.lr = lr;
    for (long t = 1; t <= 3000; ++t) {
      const double want = h.lr * std::min(1.0, static_cast<double>(t) / 1000.0);
      check(opt::sf_eta(h, t) == want, "ramp mismatch at t=" + std::to_string(t));
    }
    check(opt::sf_eta(h, 500) == 0.5 * lr, "midpoint of the ramp should be lr/2");
  }
  h.warmup_steps = 0;
  check(opt::sf_eta(h, 1) == h.lr && opt::sf_eta(h, 12345) == h.lr,
        "warmup 0 must give a constant step size");
}

// ---------------------------------------------------------------------------
// gradient-checks
// ---------------------------------------------------------------------------

void gradient_checks() {
  // Probe-weighted sum turns any op output into a scalar loss.
  auto probe_loss = [](const nn::Tensor& out, nn::Tensor& probe) {
    if (!probe.defined()) {
      probe = nn::Tensor::zeros(out.shape());
      testutil::fill_uniform(probe, -1.0, 1.0, 4242);
    }
    return nn::sum(nn::mul(out, probe));
  };

  {
    nn::Tensor x = nn::Tensor::zeros({2, 2, 6, 6}, true);
    nn::Tensor w = nn::Tensor::zeros({3, 2, 3, 3}, true);
    nn::Tensor b = nn::Tensor::zeros({3}, true);
    testutil::fill_uniform(x, -1.0, 1.0, 11);
    testutil::fill_uniform(w, -0.5, 0.5, 12);
    testutil::fill_uniform(b, -0.5, 0.5, 13);
    nn::Tensor probe;
    auto loss = [&] { return probe_loss(nn::conv2d(x, w, b, 2, 1), probe); };
    for (nn::Tensor* leaf : {&x, &w, &b}) {
      const double err = testutil::gradcheck_leaf(*leaf, loss);
      check(err < 1e-4, "conv2d gradient error " + fmt(err));
    }
  }
  {
    nn::Tensor x = nn::Tensor::zeros({3, 4}, true);
    nn::Tensor w = nn::Tensor::zeros({5, 4}, true);
    nn::Tensor b = nn::Tensor::zeros({5}, true);
    testutil::fill_uniform(x, -1.0, 1.0, 21);
    testutil::fill_uniform(w, -0.5, 0.5, 22);
    testutil::fill_uniform(b, -0.5, 0.5, 23);
    nn::Tensor probe;
    auto loss = [&] { return probe_loss(nn::linear(x, w, b), probe); };
    for (nn::Tensor* leaf : {&x, &w, &b}) {
      const double err = testutil::gradcheck_leaf(*leaf, loss);
      check(err < 1e-4, "linear gradient error " + fmt(err));
    }
  }
  {
    nn::Tensor x = nn::Tensor::zeros({2, 3, 4, 4}, true);
    testutil::fill_uniform(x, 0.2, 1.0, 31);  // keep clear of the ReLU kink
    for (size_t i = 0; i < x.vec().size(); i += 2) x.vec()[i] = -x.vec()[i];
    nn::Tensor probe;
    auto loss = [&] {
      return probe_loss(nn::upsample_nearest2x(nn::relu(x)), probe);
    };
    const double err = testutil::gradcheck_leaf(x, loss);
    check(err < 1e-4, "relu/upsample gradient error " + fmt(err));
  }
  {
    nn::Tensor x = nn::Tensor::zeros({2, 5, 4, 4}, true);
    testutil::fill_uniform(x, -1.0, 1.0, 41);
    nn::Tensor probe;
    auto loss = [&] { return probe_loss(nn::global_avg_pool(x), probe); };
    const double err = testutil::gradcheck_leaf(x, loss);
    check(err < 1e-4, "global_avg_pool gradient error " + fmt(err));
  }
  {
    nn::Tensor logits = nn::Tensor::zeros({4, 3}, true);
    testutil::fill_uniform(logits, -2.0, 2.0, 51);
    nn::Tensor targets = nn::Tensor::zeros({4, 3});
    for (int bi = 0; bi < 4; ++bi) targets.data()[bi * 3 + bi % 3] = 1.0;
    const std::vector<double> w{0.5, 1.5, 1.0};
    auto loss = [&] { return nn::cross_entropy(logits, targets, w); };
    const double err = testutil::gradcheck_leaf(logits, loss);
    check(err < 1e-4, "cross-entropy gradient error " + fmt(err));
  }
  {
    // Whole model: FD over the flattened parameter vector.
    nn::ModelConfig mc;
    mc.backbone.in_channels = 1;
    mc.backbone.stage_widths = {2, 3, 4, 5};
    mc.backbone.num_classes = 3;
    mc.use_fpn = true;
    mc.fpn.width = 3;
    nn::Model model(mc, 909);

    // Jitter all parameters off the zero-bias init so no pre-activation sits
    // exactly on the ReLU kink, where FD and the subgradient convention
    // legitimately disagree.
    {
      std::vector<double> flat = model.flatten_params();
      std::mt19937_64 jrng(62);
      std::uniform_real_distribution<double> jitter(-0.05, 0.05);
      for (auto& v : flat) v += jitter(jrng);
      model.load_flat_params(flat);
    }

    nn::Tensor x = nn::Tensor::zeros({2, 1, 32, 32});
    testutil::fill_uniform(x, 0.05, 0.95, 61);
    nn::Tensor targets = nn::Tensor::zeros({2, 3});
    targets.data()[0] = 0.7;
    targets.data()[1] = 0.2;
    targets.data()[2] = 0.1;
    targets.data()[4] = 1.0;
    const std::vector<double> w{1.0, 0.5, 1.5};

    auto loss_value = [&](const std::vector<double>& flat) {
      model.load_flat_params(flat);
      return nn::cross_entropy(model.forward(x), targets, w).item();
    };

    const std::vector<double> theta0 = model.flatten_params();
    model.zero_grads();
    nn::backward(nn::cross_entropy(model.forward(x), targets, w));
    const std::vector<double> analytic = model.flatten_grads();
    // h = 1e-5 keeps the probe from pushing pre-activations across ReLU kinks.
    const double err = oracle::fd_max_rel_err(loss_value, theta0, analytic, 1e-5);
    check(err < 1e-4, "full-model gradient error " + fmt(err));
  }
}

// ---------------------------------------------------------------------------
// fpn-contract
// ---------------------------------------------------------------------------

void fpn_contract() {
  nn::BackboneConfig bc;
  bc.in_channels = 3;
  bc.stage_widths = {8, 16, 32, 64};
  bc.num_classes = 7;
  nn::Backbone backbone(bc, 5);

  nn::Tensor x = nn::Tensor::zeros({2, 3, 256, 256});
  testutil::fill_uniform(x, 0.0, 1.0, 71);
  const std::array<nn::Tensor, 4> c = backbone.forward(x);
  const int sides[4] = {64, 32, 16, 8};  // 1/4 .. 1/32 of 256
  for (int i = 0; i < 4; ++i) {
    const nn::Shape want{2, bc.stage_widths[static_cast<size_t>(i)], sides[i], sides[i]};
    check(c[static_cast<size_t>(i)].shape() == want, "backbone level " + std::to_string(i + 2) +
                                                         " has the wrong shape");
  }

  nn::Fpn fpn(bc.stage_widths, nn::FpnConfig{4}, 6);
  const std::array<nn::Tensor, 4> p = fpn.fuse(c);
  for (int i = 0; i < 4; ++i) {
    const nn::Shape want{2, 4, sides[i], sides[i]};
    check(p[static_cast<size_t>(i)].shape() == want, "pyramid level " + std::to_string(i + 2) +
                                                         " has the wrong shape");
  }

  // Same chain over randomized configs.
  std::mt19937_64 crng(73);
  for (int trial = 0; trial < 8; ++trial) {
    nn::BackboneConfig rc;
    rc.in_channels = (crng() % 2) ? 3 : 1;
    for (auto& wd : rc.stage_widths) wd = 2 + static_cast<int>(crng() % 7);
    rc.num_classes = 3;
    const int side = 32 * (1 + static_cast<int>(crng() % 3));
    const int batch = 1 + static_cast<int>(crng() % 2);
    nn::Backbone bb(rc, 100 + trial);
    nn::Tensor xin = nn::Tensor::zeros({batch, rc.in_channels, side, side});
    testutil::fill_uniform(xin, 0.0, 1.0, static_cast<uint64_t>(200 + trial));
    const std::array<nn::Tensor, 4> cs = bb.forward(xin);
    const int fw = 2 + static_cast<int>(crng() % 5);
    nn::Fpn rf(rc.stage_widths, nn::FpnConfig{fw}, 300 + trial);
    const std::array<nn::Tensor, 4> ps = rf.fuse(cs);
    for (int i = 0; i < 4; ++i) {
      const int s = side >> (i + 2);
      const size_t ii = static_cast<size_t>(i);
      check(cs[ii].shape() == nn::Shape{batch, rc.stage_widths[ii], s, s},
            "randomized backbone shape chain broke at level " + std::to_string(i + 2));
      check(ps[ii].shape() == nn::Shape{batch, fw, s, s},
            "randomized pyramid shape chain broke at level " + std::to_string(i + 2));
    }
  }

  // Identity laterals turn the fusion into the scalar recurrence
  // p_i = c_i + p_{i+1} on constant inputs.
  for (int i = 0; i < 4; ++i) {
    nn::ConvParams& lat = fpn.lateral(i);
    std::fill(lat.w.vec().begin(), lat.w.vec().end(), 0.0);
    std::fill(lat.b.vec().begin(), lat.b.vec().end(), 0.0);
    const int ci = bc.stage_widths[static_cast<size_t>(i)];
    for (int o = 0; o < 4; ++o) lat.w.vec()[static_cast<size_t>(o * ci + o)] = 1.0;
  }
  const double levels[4] = {0.1, 0.2, 0.3, 0.4};
  std::array<nn::Tensor, 4> flat;
  for (int i = 0; i < 4; ++i) {
    flat[static_cast<size_t>(i)] =
        nn::Tensor::full({1, bc.stage_widths[static_cast<size_t>(i)], sides[i] / 8, sides[i] / 8},
                         levels[i]);
  }
  const std::array<nn::Tensor, 4> q = fpn.fuse(flat);
  const double want[4] = {1.0, 0.9, 0.7, 0.4};  // suffix sums of the level constants
  for (int i = 0; i < 4; ++i) {
    for (double v : q[static_cast<size_t>(i)].vec()) {
      check(std::abs(v - want[i]) <= 1e-12,
            "pyramid recurrence broke at level " + std::to_string(i + 2));
    }
  }

  // Model-level shape contract, with and without the pyramid.
  for (bool use_fpn : {false, true}) {
    nn::ModelConfig mc;
    mc.backbone.in_channels = 1;
    mc.backbone.stage_widths = {4, 8, 8, 16};
    mc.backbone.num_classes = 43;
    mc.use_fpn = use_fpn;
    mc.fpn.width = 8;
    nn::Model model(mc, 17);
    nn::Tensor in = nn::Tensor::zeros({1, 1, 64, 64});
    testutil::fill_uniform(in, 0.0, 1.0, 72);
    check(model.forward(in).shape() == nn::Shape{1, 43}, "logit shape contract violated");
  }

  // Inputs that cannot be tiled to 1/32 are rejected.
  nn::Tensor bad = nn::Tensor::zeros({1, 3, 100, 100});
  try {
    backbone.forward(bad);
    check(false, "expected ShapeError for a 100x100 input");
  } catch (const Error& e) {
    check(e.code() == Errc::ShapeError, "wrong error for a non-divisible input");
  }
}

// ---------------------------------------------------------------------------
// loss-correctness
// ---------------------------------------------------------------------------

void loss_correctness() {
  // Uniform logits over C classes give loss ln C.
  nn::Tensor logits = nn::Tensor::zeros({2, 2}, true);
  nn::Tensor targets = nn::Tensor::zeros({2, 2});
  targets.data()[0] = 1.0;
  targets.data()[3] = 1.0;
  const nn::Tensor loss = nn::cross_entropy(logits, targets, {1.0, 1.0});
  check(std::abs(loss.item() - std::log(2.0)) <= 1e-12, "uniform CE must equal ln 2");

  // Gradient (p - y)/B at the uniform point.
  nn::backward(loss);
  const std::vector<double>& g = logits.grad_vec();
  const double want[4] = {(0.5 - 1.0) / 2, 0.5 / 2, 0.5 / 2, (0.5 - 1.0) / 2};
  for (int i = 0; i < 4; ++i) {
    check(std::abs(g[static_cast<size_t>(i)] - want[i]) <= 1e-12, "CE gradient mismatch");
  }

  // Inverse-frequency weights normalized to mean 1.
  const nn::ClassWeights cw = nn::ClassWeights::from_counts(std::vector<int64_t>{60, 20, 10});
  check(cw.w == std::vector<double>{0.5, 1.5, 3.0}, "inverse-frequency weights are off");

  // Balanced counts give unit weights, so WCE == CE bitwise.
  const nn::ClassWeights balanced = nn::ClassWeights::from_counts(std::vector<int64_t>{7, 7, 7});
  check(balanced.w == std::vector<double>(3, 1.0), "balanced weights must be exactly 1");
  nn::Tensor lg = nn::Tensor::zeros({4, 3});
  testutil::fill_uniform(lg, -3.0, 3.0, 81);
  nn::Tensor tg = nn::Tensor::zeros({4, 3});
  for (int bi = 0; bi < 4; ++bi) tg.data()[bi * 3 + (bi % 3)] = 1.0;
  const double wce = nn::cross_entropy(lg, tg, balanced.w).item();
  const double ce = nn::cross_entropy(lg, tg, nn::ClassWeights::uniform(3).w).item();
  check(wce == ce, "balanced WCE must equal CE bitwise");

  // Rows that are not distributions are rejected.
  nn::Tensor badt = nn::Tensor::zeros({1, 3});
  badt.data()[0] = 0.4;
  try {
    nn::cross_entropy(nn::Tensor::zeros({1, 3}), badt, {1, 1, 1});
    check(false, "expected InvalidTarget");
  } catch (const Error& e) {
    check(e.code() == Errc::InvalidTarget, "wrong error for a bad target row");
  }
}

// ---------------------------------------------------------------------------
// metrics-oracles
// ---------------------------------------------------------------------------

void metrics_oracles() {
  std::mt19937_64 rng(91);

  for (int trial = 0; trial < 10000; ++trial) {
    const int C = 2 + static_cast<int>(rng() % 5);
    const int N = 1 + static_cast<int>(rng() % 60);
    std::vector<int> preds(static_cast<size_t>(N)), truths(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) {
      preds[static_cast<size_t>(i)] = static_cast<int>(rng() % static_cast<uint64_t>(C));
      truths[static_cast<size_t>(i)] = static_cast<int>(rng() % static_cast<uint64_t>(C));
    }
    const metrics::PrfResult got = metrics::macro_prf(metrics::confusion(preds, truths, C));
    const oracle::PrfRef ref = oracle::prf_brute(preds, truths, C);
    for (int c = 0; c < C; ++c) {
      check(got.precision[static_cast<size_t>(c)] == ref.p[static_cast<size_t>(c)] &&
                got.recall[static_cast<size_t>(c)] == ref.r[static_cast<size_t>(c)] &&
                got.f1[static_cast<size_t>(c)] == ref.f1[static_cast<size_t>(c)],
            "per-class PRF disagrees with the brute-force oracle");
    }
    check(got.f1_macro == ref.f1_macro, "macro F1 disagrees with the brute-force oracle");
  }

  std::uniform_real_distribution<double> uni(0.0, 1.0);
  int contributed = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int C = 2 + static_cast<int>(rng() % 4);
    const int N = 2 + static_cast<int>(rng() % 80);
    std::vector<int> truths(static_cast<size_t>(N));
    std::vector<double> scores(static_cast<size_t>(N) * static_cast<size_t>(C));
    for (int i = 0; i < N; ++i) truths[static_cast<size_t>(i)] = static_cast<int>(rng() % static_cast<uint64_t>(C));
    for (auto& s : scores) {
      s = uni(rng);
      if (trial % 2 == 0) s = std::round(s * 4.0) / 4.0;  // force heavy ties
    }
    std::vector<double> per_ref;
    const double ref = oracle::macro_auc_pairs(scores, truths, C, &per_ref);
    try {
      const metrics::AucResult got = metrics::macro_auc(scores, truths, C);
      check(std::isfinite(ref), "production computed an AUC the oracle calls degenerate");
      check(std::abs(got.auc_macro - ref) <= 1e-12, "macro AUC disagrees with the pair oracle");
      for (int c = 0; c < C; ++c) {
        if (got.contributes[static_cast<size_t>(c)]) {
          check(std::abs(got.auc[static_cast<size_t>(c)] - per_ref[static_cast<size_t>(c)]) <= 1e-12,
                "per-class AUC disagrees with the pair oracle");
        } else {
          check(std::isnan(per_ref[static_cast<size_t>(c)]), "contribution flags disagree");
        }
      }
      ++contributed;
    } catch (const Error& e) {
      check(e.code() == Errc::DegenerateLabels, "unexpected metrics error");
      check(std::isnan(ref), "oracle and production disagree on degeneracy");
    }
  }
  check(contributed > 700, "AUC fuzz produced too few usable label sets");

  // Checkpoint-selection tie rules.
  using metrics::EpochStat;
  const std::vector<EpochStat> rising{{1, 0.2, 1.0}, {2, 0.5, 0.9}, {3, 0.9, 0.8}};
  check(metrics::select_checkpoint(rising) == 3, "argmax F1 selection broke");
  const std::vector<EpochStat> tie_loss{{1, 0.9, 1.0}, {2, 0.9, 0.5}, {3, 0.8, 0.1}};
  check(metrics::select_checkpoint(tie_loss) == 2, "loss tie-break broke");
  const std::vector<EpochStat> all_tied{{1, 0.9, 0.5}, {2, 0.9, 0.5}};
  check(metrics::select_checkpoint(all_tied) == 1, "earliest-epoch tie-break broke");
}

// ---------------------------------------------------------------------------
// conversion-goldens
// ---------------------------------------------------------------------------

void conversion_goldens() {
  const binimg::WidthRule rule = binimg::WidthRule::standard();

  // Section map of the hand-built fixture.
  const std::vector<uint8_t> dex = testutil::fixture_dex();
  const binimg::DexSectionMap map = binimg::parse_dex(dex);
  check(map.header.end == 0x70 && map.identifiers.end == 0x130 && map.class_defs.end == 0x1B0 &&
            map.data.begin == 0x200,
        "fixture section map is off");
  check(map.region_length(binimg::DexRegion::Data) == 0x150,
        "unclaimed bytes must fall into the data region");

  // Resampling against the direct-convolution oracle.
  binimg::ImageTensor img = binimg::ImageTensor::zeros(3, 16, 16);
  {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (auto& v : img.data) v = uni(rng);
  }
  const binimg::ImageTensor down = binimg::lanczos_resize(img, 8, 8);
  const std::vector<double> ref = oracle::lanczos_ref_resize(img.data, 3, 16, 16, 8, 8);
  for (size_t i = 0; i < ref.size(); ++i) {
    check(std::abs(down.data[i] - ref[i]) <= 1e-6, "lanczos disagrees with the direct oracle");
  }

  // Constant images survive resampling in either direction.
  binimg::ImageTensor flat = binimg::ImageTensor::zeros(1, 7, 11);
  for (auto& v : flat.data) v = 0.375;
  for (const binimg::ImageTensor& out :
       {binimg::lanczos_resize(flat, 19, 5), binimg::lanczos_resize(flat, 3, 23)}) {
    for (double v : out.data) {
      check(std::abs(v - 0.375) <= 1e-6, "constant image did not survive resampling");
    }
  }

  // Channel partition on fuzzed payloads behind a valid header.
  std::mt19937_64 frng(111);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<uint8_t> fdx = testutil::fixture_dex();
    for (size_t i = 0x70; i < fdx.size(); ++i) fdx[i] = static_cast<uint8_t>(byte(frng));
    const binimg::DexSectionMap fmap = binimg::parse_dex(fdx);
    const binimg::ImageTensor grid = binimg::bytes_to_grid(fdx, rule);
    const binimg::ImageTensor colored = binimg::colorize(grid, fmap);
    const size_t plane = grid.plane_size();
    for (size_t i = 0; i < plane; ++i) {
      const double r = colored.data[i];
      const double g = colored.data[plane + i];
      const double b = colored.data[2 * plane + i];
      check(r + g + b == (i < fdx.size() ? grid.data[i] : 0.0),
            "colorize partition leaked intensity");
      check(((r != 0) + (g != 0) + (b != 0)) <= 1, "a byte landed in more than one channel");
    }
  }

  // Byte-exact golden outputs through the whole pipeline.
  const binimg::ConvertResult rgb = binimg::convert(dex, 3, rule, 64);
  check(!rgb.dex_fallback, "fixture must parse as DEX");
  const std::string golden_dir = MALIMG_TEST_DATA;
  const std::string want_rgb = slurp(golden_dir + "/golden_fixture_rgb64.png");
  const std::vector<uint8_t> got_rgb = binimg::encode_png(rgb.image);
  check(std::string(got_rgb.begin(), got_rgb.end()) == want_rgb,
        "RGB conversion drifted from the golden image");

  std::vector<uint8_t> ramp(2000);
  for (size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<uint8_t>(i & 0xFF);
  const binimg::ConvertResult gray = binimg::convert(ramp, 1, rule, 32);
  const std::string want_gray = slurp(golden_dir + "/golden_ramp_gray32.png");
  const std::vector<uint8_t> got_gray = binimg::encode_png(gray.image);
  check(std::string(got_gray.begin(), got_gray.end()) == want_gray,
        "grayscale conversion drifted from the golden image");
}

// ---------------------------------------------------------------------------
// e2e-desk-scale
// ---------------------------------------------------------------------------

struct E2eContext {
  std::string data_dir;
  harness::DatasetIndex index;
};

void e2e_desk_scale(const std::string& work_dir, E2eContext& ctx) {
  harness::SynthSpec spec;
  spec.num_classes = 5;
  spec.train_per_class = 200;
  spec.val_per_class = 40;
  spec.test_per_class = 40;
  spec.image_size = 64;
  spec.channels = 1;
  spec.seed = 7;
  ctx.data_dir = work_dir + "/corpus";
  const int written = harness::generate_corpus(spec, ctx.data_dir);
  check(written == 5 * 280, "corpus generation wrote the wrong file count");
  ctx.index = harness::ingest(ctx.data_dir);
  check(ctx.index.train.size() == 1000, "train split size is off");

  harness::RunConfig full;
  full.id = "full";
  full.num_classes = 5;
  full.image_size = 64;
  full.in_channels = 1;
  full.fpn = true;
  full.ta = aug::TaConfig::defaults(true);
  full.mixup.enabled = true;
  full.opt = harness::OptKind::AF;
  full.loss = harness::LossKind::CE;
  full.optim.lr = 0.01;
  full.optim.warmup_steps = 50;
  full.batch_size = 20;
  full.epochs = 10;
  full.seed = 1;
  full.stage_widths = {8, 16, 32, 64};
  full.fpn_width = 32;

  const harness::TrainResult tr_full = harness::train_run(full, ctx.index, work_dir + "/full");
  const metrics::MetricsReport full_test =
      harness::evaluate_checkpoint(tr_full.checkpoint_path, ctx.index, "test");
  check(full_test.f1_macro >= 0.90,
        "schedule-free full variant reached only F1 " + fmt(full_test.f1_macro));

  harness::RunConfig base = full;
  base.id = "aw";
  base.fpn = false;
  base.ta.enabled = false;
  base.mixup.enabled = false;
  base.opt = harness::OptKind::AW;
  base.loss = harness::LossKind::WCE;
  base.optim.lr = 0.003;
  base.epochs = 8;

  const harness::TrainResult tr_base = harness::train_run(base, ctx.index, work_dir + "/aw");
  const metrics::MetricsReport base_test =
      harness::evaluate_checkpoint(tr_base.checkpoint_path, ctx.index, "test");
  check(base_test.f1_macro > 0.85,
        "AdamW baseline reached only F1 " + fmt(base_test.f1_macro));
}

// ---------------------------------------------------------------------------
// grid-15-configs
// ---------------------------------------------------------------------------

void grid_15_configs(const std::string& work_dir) {
  harness::SynthSpec spec;
  spec.num_classes = 3;
  spec.train_per_class = 12;
  spec.val_per_class = 4;
  spec.test_per_class = 4;
  spec.image_size = 32;
  spec.channels = 1;
  spec.seed = 13;
  const std::string data_dir = work_dir + "/micro";
  harness::generate_corpus(spec, data_dir);
  const harness::DatasetIndex index = harness::ingest(data_dir);

  harness::RunConfig base;
  base.num_classes = 3;
  base.image_size = 32;
  base.stage_widths = {4, 8, 8, 16};
  base.fpn_width = 8;
  base.batch_size = 12;
  base.epochs = 2;
  base.optim.lr = 0.01;
  base.seed = 5;

  // The PT rows need an init checkpoint; a one-epoch run provides it.
  harness::RunConfig init = base;
  init.id = "init";
  init.epochs = 1;
  const harness::TrainResult init_run = harness::train_run(init, index, work_dir + "/init");
  base.pt = init_run.checkpoint_path;

  const std::vector<harness::RunConfig> grid = harness::table3_grid(base);
  check(grid.size() == 15, "grid must have exactly 15 rows");
  const harness::AblateResult result = harness::ablate(grid, index, work_dir + "/grid");

  const char* want[15][7] = {
      {"N", "N", "1", "N", "N", "AF", "WCE"}, {"Y", "N", "3", "N", "N", "AW", "CE"},
      {"N", "N", "1", "N", "N", "AF", "CE"},  {"N", "N", "1", "N", "N", "AF", "CE"},
      {"N", "N", "1", "N", "N", "AW", "WCE"}, {"N", "N", "1", "N", "N", "AF", "CE"},
      {"Y", "N", "3", "N", "N", "AW", "CE"},  {"Y", "Y", "3", "N", "N", "AF", "CE"},
      {"Y", "N", "1", "N", "N", "AF", "CE"},  {"Y", "N", "3", "N", "Y", "AF", "CE"},
      {"Y", "N", "1", "N", "Y", "AF", "CE"},  {"N", "Y", "3", "Y", "Y", "AF", "CE"},
      {"Y", "N", "3", "Y", "N", "AF", "CE"},  {"Y", "N", "3", "Y", "Y", "AF", "CE"},
      {"Y", "Y", "3", "Y", "Y", "AF", "CE"},
  };
  check(result.rows.size() == 15, "ablation must produce 15 rows");
  for (size_t i = 0; i < 15; ++i) {
    const harness::RunOutcome& row = result.rows[i];
    check(row.ok, "grid row " + row.cfg.id + " failed: " + row.error);
    const metrics::RunTag tag = row.cfg.tag();
    const char** w = want[i];
    check(tag.pt == w[0] && tag.fpn == w[1] && tag.in == w[2] && tag.ta == w[3] &&
              tag.mu == w[4] && tag.opt == w[5] && tag.loss == w[6],
          "grid row " + row.cfg.id + " flags do not match the published pattern");
    check(std::isfinite(row.test.f1_macro) && row.test.f1_macro >= 0.0 &&
              row.test.f1_macro <= 1.0,
          "grid row " + row.cfg.id + " reported a bogus F1");
  }

  // The written table has a header plus one line per row.
  std::istringstream table(slurp(result.table_path));
  std::string line;
  int lines = 0;
  while (std::getline(table, line)) {
    if (!line.empty()) ++lines;
  }
  check(lines == 16, "table.csv must have 1 header + 15 rows");
}

// ---------------------------------------------------------------------------
// reproducibility
// ---------------------------------------------------------------------------

void reproducibility(const std::string& work_dir) {
  harness::SynthSpec spec;
  spec.num_classes = 2;
  spec.train_per_class = 6;
  spec.val_per_class = 2;
  spec.test_per_class = 2;
  spec.image_size = 32;
  spec.channels = 1;
  spec.seed = 23;
  const std::string data_dir = work_dir + "/redo";
  harness::generate_corpus(spec, data_dir);
  const harness::DatasetIndex index = harness::ingest(data_dir);

  harness::RunConfig cfg;
  cfg.id = "1";
  cfg.num_classes = 2;
  cfg.image_size = 32;
  cfg.stage_widths = {4, 8, 8, 16};
  cfg.fpn_width = 8;
  cfg.batch_size = 6;
  cfg.epochs = 2;
  cfg.optim.lr = 0.01;
  cfg.seed = 9;
  cfg.ta = aug::TaConfig::defaults(true);
  cfg.mixup.enabled = true;

  const harness::AblateResult a = harness::ablate({cfg}, index, work_dir + "/pass1");
  const harness::AblateResult b = harness::ablate({cfg}, index, work_dir + "/pass2");
  check(slurp(a.table_path) == slurp(b.table_path), "table.csv is not reproducible");
  check(slurp(work_dir + "/pass1/run_1/checkpoint_best.mifw") ==
            slurp(work_dir + "/pass2/run_1/checkpoint_best.mifw"),
        "checkpoints are not byte-reproducible");
  check(slurp(work_dir + "/pass1/run_1/history.jsonl") ==
            slurp(work_dir + "/pass2/run_1/history.jsonl"),
        "training history is not reproducible");
}

}  // namespace

int main() {
  testutil::TempDir work("acceptance");
  int failures = 0;

  const auto criterion = [&](const char* name, const std::function<void()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string error;
    try {
      body();
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (error.empty()) {
      std::printf("[PASS] %s (%.1fs)\n", name, secs);
    } else {
      std::printf("[FAIL] %s (%.1fs): %s\n", name, secs, error.c_str());
      ++failures;
    }
    std::fflush(stdout);
  };

  E2eContext e2e;
  criterion("optimizer-oracle", optimizer_oracle);
  criterion("averaging-identity", averaging_identity);
  criterion("warmup-ramp", warmup_ramp);
  criterion("gradient-checks", gradient_checks);
  criterion("fpn-contract", fpn_contract);
  criterion("loss-correctness", loss_correctness);
  criterion("metrics-oracles", metrics_oracles);
  criterion("conversion-goldens", conversion_goldens);
  criterion("e2e-desk-scale", [&] { e2e_desk_scale(work.str(), e2e); });
  criterion("grid-15-configs", [&] { grid_15_configs(work.str()); });
  criterion("reproducibility", [&] { reproducibility(work.str()); });

  return failures == 0 ? 0 : 1;
}
