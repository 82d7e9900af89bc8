#pragma once

#include <random>

#include "malimg/nn/tensor.hpp"

namespace malimg::aug {

// One training batch: images (B,K,H,W) in [0,1] and soft labels (B,C),
// each label row a probability distribution.
struct LabeledBatch {
  nn::Tensor images;
  nn::Tensor labels;

  int batch_size() const { return images.dim(0); }
  void validate() const;
};

struct MixupConfig {
  double alpha = 0.2;
  bool enabled = false;

  void validate() const;
};

// Convex combination of the batch with a shuffled pairing of itself:
// one lambda ~ Beta(alpha, alpha) per batch, partner via a uniformly drawn
// permutation. Requires B >= 2.
LabeledBatch mixup(const LabeledBatch& batch, const MixupConfig& cfg, std::mt19937_64& rng);

// Deterministic variant used by tests: lambda and pairing supplied.
LabeledBatch mixup_with(const LabeledBatch& batch, double lambda, const std::vector<int>& partner);

double sample_beta(double alpha, std::mt19937_64& rng);

}  // namespace malimg::aug
