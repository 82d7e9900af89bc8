#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "malimg/binimg/dex.hpp"

namespace malimg::binimg {

// Dense (K,H,W) image, row-major per channel, values in [0,1].
struct ImageTensor {
  int channels = 1;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  double& at(int c, int y, int x) {
    return data[(static_cast<size_t>(c) * height + static_cast<size_t>(y)) * width + static_cast<size_t>(x)];
  }
  double at(int c, int y, int x) const {
    return data[(static_cast<size_t>(c) * height + static_cast<size_t>(y)) * width + static_cast<size_t>(x)];
  }
  size_t plane_size() const { return static_cast<size_t>(height) * width; }

  static ImageTensor zeros(int channels, int height, int width) {
    return ImageTensor{channels, height, width,
                       std::vector<double>(static_cast<size_t>(channels) * height * width, 0.0)};
  }
};

// File-length -> row width lookup. Thresholds are (max_size_exclusive,
// width) pairs with strictly increasing sizes; lengths past the last
// threshold use the catch-all width.
struct WidthRule {
  std::vector<std::pair<uint64_t, int>> thresholds;
  int fallback_width = 1024;

  int width_for(uint64_t file_len) const;
  void validate() const;

  // The conventional malware-imaging table:
  // <10KB:32 <30KB:64 <60KB:128 <100KB:256 <200KB:384 <500KB:512 <1000KB:768, else 1024.
  static WidthRule standard();
};

// Reshape a byte stream into a grayscale grid: width from the rule,
// height = ceil(len/width), bytes scaled v/255, final row zero-padded.
ImageTensor bytes_to_grid(std::span<const uint8_t> bytes, const WidthRule& rule);

// DEX region -> channel index for the 3-channel variant.
struct ChannelAssignment {
  std::array<int, 4> channel_of_region{0, 0, 1, 2};  // header, identifiers -> R; class_defs -> G; data -> B

  int channel(DexRegion r) const { return channel_of_region[static_cast<size_t>(r)]; }
};

// Spread a grayscale grid into 3 channels by DEX region. Padding positions
// (at or past map.file_len) stay zero in all channels.
ImageTensor colorize(const ImageTensor& grid, const DexSectionMap& map,
                     const ChannelAssignment& assign = {});

}  // namespace malimg::binimg
