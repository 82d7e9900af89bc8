#include "malimg/binimg/convert.hpp"

#include <nlohmann/json.hpp>

namespace malimg::binimg {

ConvertResult convert(std::span<const uint8_t> bytes, int channels, const WidthRule& rule, int target) {
  require(channels == 1 || channels == 3, Errc::ConfigError, "channels must be 1 or 3");
  require(target > 0, Errc::ConfigError, "target size must be positive");

  ConvertResult r;
  r.file_len = bytes.size();
  ImageTensor grid = bytes_to_grid(bytes, rule);
  r.grid_width = grid.width;

  try {
    r.sections = parse_dex(bytes);
  } catch (const Error&) {
    // Not a DEX container; the grayscale path does not care and the
    // 3-channel path falls back to replication.
  }

  if (channels == 3) {
    if (r.sections) {
      grid = colorize(grid, *r.sections);
    } else {
      r.dex_fallback = true;
      ImageTensor rgb = ImageTensor::zeros(3, grid.height, grid.width);
      for (int c = 0; c < 3; ++c) {
        std::copy(grid.data.begin(), grid.data.end(),
                  rgb.data.begin() + static_cast<std::ptrdiff_t>(c * grid.plane_size()));
      }
      grid = std::move(rgb);
    }
  }

  r.image = lanczos_resize(grid, target, target);
  return r;
}

std::string sidecar_json(const ConvertResult& r) {
  nlohmann::json j;
  j["file_len"] = r.file_len;
  j["grid_width"] = r.grid_width;
  j["channels"] = r.image.channels;
  j["image_size"] = {r.image.height, r.image.width};
  j["dex_fallback"] = r.dex_fallback;
  if (r.sections) {
    const auto& m = *r.sections;
    auto range = [](const ByteRange& b) { return nlohmann::json{{"begin", b.begin}, {"end", b.end}}; };
    j["sections"] = {{"header", range(m.header)},
                     {"identifiers", range(m.identifiers)},
                     {"class_defs", range(m.class_defs)},
                     {"data", range(m.data)},
                     {"file_len", m.file_len}};
  }
  return j.dump(2);
}

}  // namespace malimg::binimg
