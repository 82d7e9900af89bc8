#include "malimg/aug/trivial.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace malimg::aug {

namespace {

using nn::Scalar;

// Inverse-mapped affine with nearest-neighbour sampling about the image
// center; out-of-bounds samples fill with 0.
void affine_nearest(const Scalar* in, Scalar* out, int K, int H, int W, double m00, double m01, double m10,
                    double m11, double tx, double ty) {
  const double cx = (W - 1) / 2.0;
  const double cy = (H - 1) / 2.0;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const double dx = x - cx - tx;
      const double dy = y - cy - ty;
      const double sx = m00 * dx + m01 * dy + cx;
      const double sy = m10 * dx + m11 * dy + cy;
      const long ix = std::lround(sx);
      const long iy = std::lround(sy);
      const bool inside = ix >= 0 && ix < W && iy >= 0 && iy < H;
      for (int c = 0; c < K; ++c) {
        out[(static_cast<size_t>(c) * H + y) * W + x] =
            inside ? in[(static_cast<size_t>(c) * H + iy) * W + ix] : 0.0;
      }
    }
  }
}

void smooth3(const Scalar* in, Scalar* out, int H, int W) {
  // 3x3 kernel [[1,1,1],[1,5,1],[1,1,1]]/13 on the interior; border copied.
  std::memcpy(out, in, sizeof(Scalar) * static_cast<size_t>(H) * W);
  for (int y = 1; y + 1 < H; ++y) {
    for (int x = 1; x + 1 < W; ++x) {
      double acc = 5.0 * in[y * W + x];
      acc += in[(y - 1) * W + x - 1] + in[(y - 1) * W + x] + in[(y - 1) * W + x + 1];
      acc += in[y * W + x - 1] + in[y * W + x + 1];
      acc += in[(y + 1) * W + x - 1] + in[(y + 1) * W + x] + in[(y + 1) * W + x + 1];
      out[y * W + x] = acc / 13.0;
    }
  }
}

void equalize_channel(const Scalar* in, Scalar* out, size_t n) {
  // 256-bin histogram equalization, following the common LUT construction:
  // step = (pixels - count[last nonzero bin]) / 255; identity when step == 0.
  int64_t hist[256] = {0};
  for (size_t i = 0; i < n; ++i) {
    const int b = static_cast<int>(std::lround(std::clamp(in[i], 0.0, 1.0) * 255.0));
    ++hist[b];
  }
  int last = 255;
  while (last > 0 && hist[last] == 0) --last;
  const int64_t step = (static_cast<int64_t>(n) - hist[last]) / 255;
  if (step == 0) {
    std::memcpy(out, in, sizeof(Scalar) * n);
    return;
  }
  int lut[256];
  int64_t acc = step / 2;
  for (int b = 0; b < 256; ++b) {
    lut[b] = static_cast<int>(std::clamp<int64_t>(acc / step, 0, 255));
    acc += hist[b];
  }
  for (size_t i = 0; i < n; ++i) {
    const int b = static_cast<int>(std::lround(std::clamp(in[i], 0.0, 1.0) * 255.0));
    out[i] = lut[b] / 255.0;
  }
}

}  // namespace

void TaConfig::validate() const {
  if (!enabled) return;
  require(!ops.empty(), Errc::ConfigError, "TrivialAugment op set must not be empty");
  bool has_identity = false;
  for (const auto& op : ops) {
    require(op.hi >= op.lo, Errc::ConfigError, "bad magnitude range for op " + op.name);
    has_identity = has_identity || op.name == "identity";
  }
  require(has_identity, Errc::ConfigError, "TrivialAugment op set must contain identity");
}

std::vector<TaOp> TaConfig::default_ops() {
  return {
      {"identity", 0, 0},          {"rotate", -30, 30},      {"shear-x", -0.3, 0.3},
      {"shear-y", -0.3, 0.3},      {"translate-x", -32, 32}, {"translate-y", -32, 32},
      {"brightness", -0.4, 0.4},   {"contrast", -0.4, 0.4},  {"sharpness", -0.4, 0.4},
      {"autocontrast", 0, 0},      {"equalize", 0, 0},       {"posterize", 2, 8},
      {"solarize", 0, 1},
  };
}

TaConfig TaConfig::defaults(bool enabled) { return TaConfig{default_ops(), enabled}; }

void apply_ta_op(const TaOp& op, double m, const Scalar* in, Scalar* out, int K, int H, int W) {
  const size_t plane = static_cast<size_t>(H) * W;
  const size_t total = plane * static_cast<size_t>(K);

  if (op.name == "identity") {
    std::memcpy(out, in, sizeof(Scalar) * total);
  } else if (op.name == "rotate") {
    const double rad = m * 3.14159265358979323846 / 180.0;
    // Inverse of a rotation by m degrees.
    affine_nearest(in, out, K, H, W, std::cos(rad), std::sin(rad), -std::sin(rad), std::cos(rad), 0, 0);
  } else if (op.name == "shear-x") {
    affine_nearest(in, out, K, H, W, 1.0, -m, 0.0, 1.0, 0, 0);
  } else if (op.name == "shear-y") {
    affine_nearest(in, out, K, H, W, 1.0, 0.0, -m, 1.0, 0, 0);
  } else if (op.name == "translate-x") {
    affine_nearest(in, out, K, H, W, 1.0, 0.0, 0.0, 1.0, m, 0);
  } else if (op.name == "translate-y") {
    affine_nearest(in, out, K, H, W, 1.0, 0.0, 0.0, 1.0, 0, m);
  } else if (op.name == "brightness") {
    for (size_t i = 0; i < total; ++i) out[i] = in[i] * (1.0 + m);
  } else if (op.name == "contrast") {
    double mu = 0;
    for (size_t i = 0; i < total; ++i) mu += in[i];
    mu /= static_cast<double>(total);
    for (size_t i = 0; i < total; ++i) out[i] = mu + (in[i] - mu) * (1.0 + m);
  } else if (op.name == "sharpness") {
    std::vector<Scalar> blur(plane);
    for (int c = 0; c < K; ++c) {
      smooth3(in + static_cast<size_t>(c) * plane, blur.data(), H, W);
      for (size_t i = 0; i < plane; ++i) {
        out[static_cast<size_t>(c) * plane + i] =
            in[static_cast<size_t>(c) * plane + i] +
            m * (in[static_cast<size_t>(c) * plane + i] - blur[i]);
      }
    }
  } else if (op.name == "autocontrast") {
    for (int c = 0; c < K; ++c) {
      const Scalar* p = in + static_cast<size_t>(c) * plane;
      Scalar* q = out + static_cast<size_t>(c) * plane;
      double lo = p[0], hi = p[0];
      for (size_t i = 1; i < plane; ++i) {
        lo = std::min(lo, p[i]);
        hi = std::max(hi, p[i]);
      }
      if (hi > lo) {
        for (size_t i = 0; i < plane; ++i) q[i] = (p[i] - lo) / (hi - lo);
      } else {
        std::memcpy(q, p, sizeof(Scalar) * plane);
      }
    }
  } else if (op.name == "equalize") {
    for (int c = 0; c < K; ++c) {
      equalize_channel(in + static_cast<size_t>(c) * plane, out + static_cast<size_t>(c) * plane, plane);
    }
  } else if (op.name == "posterize") {
    const int bits = std::clamp(static_cast<int>(std::lround(m)), 1, 8);
    const uint8_t mask = static_cast<uint8_t>(0xFFu << (8 - bits));
    for (size_t i = 0; i < total; ++i) {
      const int v = static_cast<int>(std::lround(std::clamp(in[i], 0.0, 1.0) * 255.0));
      out[i] = (v & mask) / 255.0;
    }
  } else if (op.name == "solarize") {
    for (size_t i = 0; i < total; ++i) out[i] = in[i] >= m ? 1.0 - in[i] : in[i];
  } else {
    fail(Errc::ConfigError, "unknown TrivialAugment op " + op.name);
  }

  for (size_t i = 0; i < total; ++i) out[i] = std::clamp(out[i], 0.0, 1.0);
}

nn::Tensor trivial_augment(const nn::Tensor& images, const TaConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  require(images.ndim() == 4, Errc::ShapeError, "trivial_augment expects (B,K,H,W)");
  if (!cfg.enabled) return images;

  const int B = images.dim(0), K = images.dim(1), H = images.dim(2), W = images.dim(3);
  nn::Tensor out = nn::Tensor::zeros(images.shape());
  const int64_t stride = static_cast<int64_t>(K) * H * W;
  std::uniform_int_distribution<size_t> pick(0, cfg.ops.size() - 1);

  for (int b = 0; b < B; ++b) {
    const TaOp& op = cfg.ops[pick(rng)];
    double m = 0.0;
    if (op.hi > op.lo) {
      std::uniform_real_distribution<double> mag(op.lo, op.hi);
      m = mag(rng);
    } else {
      m = op.lo;
    }
    apply_ta_op(op, m, images.data() + b * stride, out.data() + b * stride, K, H, W);
  }
  return out;
}

}  // namespace malimg::aug
