#pragma once

#include "malimg/binimg/image.hpp"

namespace malimg::binimg {

// Separable Lanczos-3 resampling, horizontal pass then vertical pass.
//
// Pinned kernel, per axis (n -> m samples):
//   scale        = n / m
//   filter_scale = max(scale, 1)            (kernel widens when minifying)
//   center(o)    = (o + 0.5) * scale - 0.5
//   taps         k in [ceil(center - 3*filter_scale), floor(center + 3*filter_scale)]
//   weight(k)    = sinc(u) * sinc(u/3), u = (k - center) / filter_scale
//   weights are normalized to sum 1; sample coordinates clamp to [0, n-1].
// The final output is clamped to [0,1].
ImageTensor lanczos_resize(const ImageTensor& img, int out_h, int out_w);

// Precomputed 1-D tap table for one axis, exposed so the direct-convolution
// reference in the tests uses the identical kernel definition.
struct ResampleTaps {
  int first = 0;                 // input index of the first tap (pre-clamp)
  std::vector<double> weights;   // normalized
};

std::vector<ResampleTaps> lanczos_taps(int in_size, int out_size);

}  // namespace malimg::binimg
