#include "malimg/binimg/resize.hpp"

#include <algorithm>
#include <cmath>

namespace malimg::binimg {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSupport = 3.0;  // Lanczos a=3

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = kPi * x;
  return std::sin(px) / px;
}

double lanczos3(double x) {
  x = std::abs(x);
  if (x >= kSupport) return 0.0;
  return sinc(x) * sinc(x / kSupport);
}

}  // namespace

std::vector<ResampleTaps> lanczos_taps(int in_size, int out_size) {
  require(in_size > 0 && out_size > 0, Errc::ShapeError, "resize dims must be positive");
  const double scale = static_cast<double>(in_size) / static_cast<double>(out_size);
  const double filter_scale = std::max(scale, 1.0);
  const double support = kSupport * filter_scale;

  std::vector<ResampleTaps> taps(static_cast<size_t>(out_size));
  for (int o = 0; o < out_size; ++o) {
    const double center = (o + 0.5) * scale - 0.5;
    const int k0 = static_cast<int>(std::ceil(center - support));
    const int k1 = static_cast<int>(std::floor(center + support));
    auto& t = taps[static_cast<size_t>(o)];
    t.first = k0;
    t.weights.resize(static_cast<size_t>(k1 - k0 + 1));
    double total = 0.0;
    for (int k = k0; k <= k1; ++k) {
      const double w = lanczos3((k - center) / filter_scale);
      t.weights[static_cast<size_t>(k - k0)] = w;
      total += w;
    }
    for (auto& w : t.weights) w /= total;
  }
  return taps;
}

ImageTensor lanczos_resize(const ImageTensor& img, int out_h, int out_w) {
  require(out_h > 0 && out_w > 0, Errc::ShapeError, "resize target dims must be positive");
  require(img.height > 0 && img.width > 0, Errc::ShapeError, "resize source is empty");

  const auto htaps = lanczos_taps(img.width, out_w);
  const auto vtaps = lanczos_taps(img.height, out_h);

  ImageTensor out = ImageTensor::zeros(img.channels, out_h, out_w);
  std::vector<double> mid(static_cast<size_t>(img.height) * out_w);

  for (int c = 0; c < img.channels; ++c) {
    // Horizontal pass into mid (img.height x out_w).
    for (int y = 0; y < img.height; ++y) {
      for (int ox = 0; ox < out_w; ++ox) {
        const auto& t = htaps[static_cast<size_t>(ox)];
        double acc = 0.0;
        for (size_t j = 0; j < t.weights.size(); ++j) {
          const int sx = std::clamp(t.first + static_cast<int>(j), 0, img.width - 1);
          acc += t.weights[j] * img.at(c, y, sx);
        }
        mid[static_cast<size_t>(y) * out_w + ox] = acc;
      }
    }
    // Vertical pass.
    for (int oy = 0; oy < out_h; ++oy) {
      const auto& t = vtaps[static_cast<size_t>(oy)];
      for (int ox = 0; ox < out_w; ++ox) {
        double acc = 0.0;
        for (size_t j = 0; j < t.weights.size(); ++j) {
          const int sy = std::clamp(t.first + static_cast<int>(j), 0, img.height - 1);
          acc += t.weights[j] * mid[static_cast<size_t>(sy) * out_w + ox];
        }
        out.at(c, oy, ox) = std::clamp(acc, 0.0, 1.0);
      }
    }
  }
  return out;
}

}  // namespace malimg::binimg
