#pragma once

#include <cstdint>
#include <vector>

#include "malimg/nn/tensor.hpp"

namespace malimg::nn {

// Per-class loss weights. The weighted variant uses w_c = N / (C * n_c)
// from the training class counts; the unweighted variant is all ones.
struct ClassWeights {
  std::vector<Scalar> w;

  static ClassWeights uniform(int num_classes);
  static ClassWeights from_counts(const std::vector<int64_t>& counts);

  void validate() const;
};

}  // namespace malimg::nn
