#include "malimg/binimg/image.hpp"

namespace malimg::binimg {

void WidthRule::validate() const {
  uint64_t prev = 0;
  for (const auto& [max_size, width] : thresholds) {
    require(max_size > prev, Errc::ConfigError, "width rule thresholds must be strictly increasing");
    require(width > 0, Errc::ConfigError, "width rule widths must be positive");
    prev = max_size;
  }
  require(fallback_width > 0, Errc::ConfigError, "fallback width must be positive");
}

int WidthRule::width_for(uint64_t file_len) const {
  for (const auto& [max_size, width] : thresholds) {
    if (file_len < max_size) return width;
  }
  return fallback_width;
}

WidthRule WidthRule::standard() {
  WidthRule r;
  r.thresholds = {{10 * 1024, 32},  {30 * 1024, 64},   {60 * 1024, 128},  {100 * 1024, 256},
                  {200 * 1024, 384}, {500 * 1024, 512}, {1000 * 1024, 768}};
  r.fallback_width = 1024;
  return r;
}

ImageTensor bytes_to_grid(std::span<const uint8_t> bytes, const WidthRule& rule) {
  require(!bytes.empty(), Errc::EmptyInput, "cannot image an empty byte stream");
  rule.validate();
  const int width = rule.width_for(bytes.size());
  const int height = static_cast<int>((bytes.size() + static_cast<size_t>(width) - 1) / width);

  ImageTensor img = ImageTensor::zeros(1, height, width);
  for (size_t i = 0; i < bytes.size(); ++i) {
    img.data[i] = static_cast<double>(bytes[i]) / 255.0;
  }
  return img;
}

ImageTensor colorize(const ImageTensor& grid, const DexSectionMap& map, const ChannelAssignment& assign) {
  require(grid.channels == 1, Errc::ShapeMismatch, "colorize expects a grayscale grid");
  const uint64_t capacity = static_cast<uint64_t>(grid.height) * static_cast<uint64_t>(grid.width);
  const uint64_t min_fill = capacity - static_cast<uint64_t>(grid.width);  // bytes beyond h-1 full rows
  require(map.file_len <= capacity && map.file_len > min_fill, Errc::ShapeMismatch,
          "section map length " + std::to_string(map.file_len) + " inconsistent with grid " +
              std::to_string(grid.height) + "x" + std::to_string(grid.width));

  ImageTensor out = ImageTensor::zeros(3, grid.height, grid.width);
  for (uint64_t i = 0; i < map.file_len; ++i) {
    const int ch = assign.channel(map.region_at(i));
    out.data[static_cast<size_t>(ch) * out.plane_size() + i] = grid.data[i];
  }
  return out;
}

}  // namespace malimg::binimg
