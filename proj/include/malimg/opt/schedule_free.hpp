#pragma once

#include <span>
#include <vector>

#include "malimg/common/error.hpp"

namespace malimg::opt {

// Schedule-free AdamW. The optimizer keeps three parameter sequences:
// x (the averaged iterate used for evaluation and checkpoints), z (the fast
// iterate) and y = (1-beta1) z + beta1 x (the point gradients must be
// evaluated at). Warmup replaces the learning-rate schedule:
// eta_t = lr * min(1, t / warmup_steps), constant lr when warmup_steps == 0.
struct SfHyper {
  double lr = 0.005;
  double weight_decay = 0.0;
  long warmup_steps = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

struct SfState {
  std::vector<double> x, z, v;
  long step_count = 0;    // completed steps (t)
  double lr_sq_sum = 0.0;  // running sum of eta_i^2

  size_t size() const { return x.size(); }
};

SfState sf_init(std::span<const double> theta0);

// eta_t for 1-based step index t.
double sf_eta(const SfHyper& h, long t);

// Writes y = (1-beta1) z + beta1 x into `y`. Gradients for the next
// sf_step call must be evaluated at this point.
void sf_eval_point(const SfState& s, const SfHyper& h, std::span<double> y);
std::vector<double> sf_eval_point(const SfState& s, const SfHyper& h);

// One schedule-free step with gradient g evaluated at sf_eval_point(s).
void sf_step(SfState& s, std::span<const double> g, const SfHyper& h);

}  // namespace malimg::opt
