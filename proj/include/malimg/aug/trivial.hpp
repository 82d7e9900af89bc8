#pragma once

#include <random>
#include <string>
#include <vector>

#include "malimg/nn/tensor.hpp"

namespace malimg::aug {

// One augmentation operation with its magnitude range. Magnitude semantics
// by name:
//   identity                      no-op (always part of the set)
//   rotate        degrees         nearest-neighbour affine, fill 0
//   shear-x/y     shear factor    affine, fill 0
//   translate-x/y pixels          affine, fill 0
//   brightness    factor-1        v * (1+m)
//   contrast      factor-1        mu + (v-mu) * (1+m), mu = image mean
//   sharpness     blend           v + m * (v - smooth3(v)), border kept
//   autocontrast  (none)          per-channel min/max rescale
//   equalize      (none)          per-channel 256-bin histogram equalization
//   posterize     bits            keep round(m) of 8 intensity bits
//   solarize      threshold       v >= m ? 1-v : v
struct TaOp {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
};

struct TaConfig {
  std::vector<TaOp> ops;
  bool enabled = false;

  void validate() const;

  // The default catalog. All listed ops are well-defined per channel, so the
  // same set applies to grayscale and section-colored inputs.
  static std::vector<TaOp> default_ops();
  static TaConfig defaults(bool enabled);
};

// Per image: one op sampled uniformly, one magnitude sampled uniformly from
// its range, applied and clamped to [0,1]. Labels are untouched by design.
nn::Tensor trivial_augment(const nn::Tensor& images, const TaConfig& cfg, std::mt19937_64& rng);

// Single-op application on one (K,H,W) image, exposed for tests.
void apply_ta_op(const TaOp& op, double magnitude, const nn::Scalar* in, nn::Scalar* out, int K, int H,
                 int W);

}  // namespace malimg::aug
