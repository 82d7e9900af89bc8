#include "malimg/aug/mixup.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace malimg::aug {

void LabeledBatch::validate() const {
  require(images.defined() && labels.defined(), Errc::ShapeError, "undefined batch tensors");
  require(images.ndim() == 4, Errc::ShapeError, "batch images must be (B,K,H,W)");
  require(labels.ndim() == 2, Errc::ShapeError, "batch labels must be (B,C)");
  require(images.dim(0) == labels.dim(0), Errc::ShapeError, "image/label batch size mismatch");
  const int B = labels.dim(0), C = labels.dim(1);
  for (int b = 0; b < B; ++b) {
    double s = 0;
    for (int c = 0; c < C; ++c) s += labels.data()[static_cast<int64_t>(b) * C + c];
    require(std::abs(s - 1.0) <= 1e-6, Errc::InvalidTarget,
            "label row " + std::to_string(b) + " is not a distribution");
  }
}

void MixupConfig::validate() const {
  if (enabled) require(alpha > 0, Errc::ConfigError, "mixup alpha must be positive when enabled");
}

double sample_beta(double alpha, std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  const double a = gamma(rng);
  const double b = gamma(rng);
  if (a + b == 0.0) return 0.5;
  return a / (a + b);
}

LabeledBatch mixup_with(const LabeledBatch& batch, double lambda, const std::vector<int>& partner) {
  const int B = batch.batch_size();
  require(static_cast<int>(partner.size()) == B, Errc::ShapeError, "partner permutation size mismatch");

  LabeledBatch out;
  out.images = nn::Tensor::zeros(batch.images.shape());
  out.labels = nn::Tensor::zeros(batch.labels.shape());
  const int64_t img_stride = batch.images.numel() / B;
  const int64_t lab_stride = batch.labels.numel() / B;

  for (int b = 0; b < B; ++b) {
    const int p = partner[static_cast<size_t>(b)];
    require(p >= 0 && p < B, Errc::IndexOutOfRange, "partner index out of range");
    const nn::Scalar* xa = batch.images.data() + static_cast<int64_t>(b) * img_stride;
    const nn::Scalar* xb = batch.images.data() + static_cast<int64_t>(p) * img_stride;
    nn::Scalar* xo = out.images.data() + static_cast<int64_t>(b) * img_stride;
    for (int64_t i = 0; i < img_stride; ++i) xo[i] = lambda * xa[i] + (1.0 - lambda) * xb[i];

    const nn::Scalar* ya = batch.labels.data() + static_cast<int64_t>(b) * lab_stride;
    const nn::Scalar* yb = batch.labels.data() + static_cast<int64_t>(p) * lab_stride;
    nn::Scalar* yo = out.labels.data() + static_cast<int64_t>(b) * lab_stride;
    for (int64_t i = 0; i < lab_stride; ++i) yo[i] = lambda * ya[i] + (1.0 - lambda) * yb[i];
  }
  return out;
}

LabeledBatch mixup(const LabeledBatch& batch, const MixupConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  batch.validate();
  const int B = batch.batch_size();
  require(B >= 2, Errc::BatchTooSmall, "mixup needs at least 2 examples, got " + std::to_string(B));

  const double lambda = sample_beta(cfg.alpha, rng);
  std::vector<int> partner(static_cast<size_t>(B));
  std::iota(partner.begin(), partner.end(), 0);
  std::shuffle(partner.begin(), partner.end(), rng);
  return mixup_with(batch, lambda, partner);
}

}  // namespace malimg::aug
