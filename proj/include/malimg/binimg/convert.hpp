#pragma once

#include <optional>
#include <string>

#include "malimg/binimg/image.hpp"
#include "malimg/binimg/resize.hpp"

namespace malimg::binimg {

struct ConvertResult {
  ImageTensor image;
  uint64_t file_len = 0;
  int grid_width = 0;
  std::optional<DexSectionMap> sections;  // present when the input parsed as DEX
  bool dex_fallback = false;              // K=3 requested but the input is not DEX
};

// Full pipeline: bytes -> grid -> (colorize when channels == 3) -> Lanczos
// resize to target x target. Non-DEX input with channels == 3 falls back to
// replicating the grayscale channel (dex_fallback is set).
ConvertResult convert(std::span<const uint8_t> bytes, int channels, const WidthRule& rule,
                      int target = 256);

// Sidecar metadata JSON for one converted file: original length, chosen
// width, section map (when present).
std::string sidecar_json(const ConvertResult& r);

}  // namespace malimg::binimg
