#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "malimg/binimg/image.hpp"

namespace malimg::binimg {

// 8-bit decoded image, interleaved rows when channels == 3.
struct RawImage {
  int channels = 1;  // 1 (gray) or 3 (rgb)
  int height = 0;
  int width = 0;
  std::vector<uint8_t> pixels;
};

// Quantize with round(v * 255) and encode as grayscale or RGB PNG.
// Encoding is pinned (no filters, fixed compression level) so identical
// tensors produce identical files.
void write_png(const std::string& path, const ImageTensor& img);
std::vector<uint8_t> encode_png(const ImageTensor& img);

// Decodes any libpng-readable file to 8-bit gray or RGB (palette expanded,
// 16-bit narrowed, alpha stripped). Throws UnreadableImage.
RawImage read_png(const std::string& path);

// RawImage -> ImageTensor with v/255 scaling, adapting the channel count:
// gray -> 3 replicates, rgb -> 1 averages. `adapted`, when given, is set
// when such a conversion happened so callers can warn.
ImageTensor to_tensor(const RawImage& raw, int want_channels, bool* adapted = nullptr);

}  // namespace malimg::binimg
