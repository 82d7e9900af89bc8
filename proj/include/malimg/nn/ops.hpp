#pragma once

#include <vector>

#include "malimg/nn/tensor.hpp"

namespace malimg::nn {

// x: (B,Ci,H,W), w: (Co,Ci,kh,kw), b: (Co). Output (B,Co,Ho,Wo) with
// Ho = (H + 2*pad - kh)/stride + 1.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad);

// x: (B,F), w: (O,F), b: (O). Output (B,O) = x w^T + b.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor relu(const Tensor& x);

// (B,C,H,W) -> (B,C), mean over the spatial extent.
Tensor global_avg_pool(const Tensor& x);

// Nearest-neighbour 2x upsample: (B,C,H,W) -> (B,C,2H,2W).
Tensor upsample_nearest2x(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor sum(const Tensor& x);

// Concatenate 2-D tensors (B,Fi) along the feature axis.
Tensor concat_features(const std::vector<Tensor>& parts);

// Weighted softmax cross-entropy over soft targets:
//   loss = -(1/B) sum_b sum_c w_c y_bc log p_bc,  p = softmax(logits).
// Targets and weights are plain data; gradients flow to logits only.
// Each target row must sum to 1 within 1e-6.
Tensor cross_entropy(const Tensor& logits, const Tensor& targets, const std::vector<Scalar>& weights);

// Row-wise softmax without graph tracking (evaluation path).
std::vector<Scalar> softmax_rows(const Tensor& logits);

}  // namespace malimg::nn
