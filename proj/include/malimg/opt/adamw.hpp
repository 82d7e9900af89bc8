#pragma once

#include <span>
#include <vector>

#include "malimg/common/error.hpp"

namespace malimg::opt {

// Baseline optimizer: Adam with bias-corrected moments and decoupled weight
// decay at a constant learning rate.
struct AdamWHyper {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;

  void validate() const;
};

struct AdamWState {
  std::vector<double> m, v;
  long step_count = 0;

  size_t size() const { return m.size(); }
};

AdamWState adamw_init(size_t n);

void adamw_step(AdamWState& s, std::span<double> params, std::span<const double> g, const AdamWHyper& h);

}  // namespace malimg::opt
