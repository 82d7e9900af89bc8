#include "malimg/harness/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "malimg/aug/rng.hpp"
#include "malimg/binimg/convert.hpp"
#include "malimg/binimg/png_io.hpp"
#include "malimg/common/error.hpp"

namespace fs = std::filesystem;

namespace malimg::harness {

void SynthSpec::validate() const {
  require(num_classes >= 2, Errc::ConfigError, "synth corpus needs >= 2 classes");
  require(train_per_class >= 1 && val_per_class >= 1 && test_per_class >= 1, Errc::ConfigError,
          "per-class counts must be positive");
  require(channels == 1 || channels == 3, Errc::ConfigError, "channels must be 1 or 3");
  require(image_size >= 32 && image_size % 32 == 0, Errc::ConfigError,
          "image_size must be a positive multiple of 32");
}

namespace {

void put_u32(std::vector<uint8_t>& b, size_t off, uint32_t v) {
  b[off] = static_cast<uint8_t>(v);
  b[off + 1] = static_cast<uint8_t>(v >> 8);
  b[off + 2] = static_cast<uint8_t>(v >> 16);
  b[off + 3] = static_cast<uint8_t>(v >> 24);
}

// Class textures: (horizontal, vertical) cycle counts over the whole byte
// grid. All stay well below the Nyquist limit of the resized image, so each
// class keeps a distinct orientation/frequency signature after Lanczos.
constexpr double kFreqs[][2] = {
    {3, 0}, {0, 3}, {3, 3}, {6, 0}, {0, 6}, {6, 6}, {1, 5}, {5, 1},
};
constexpr int kNumFreqs = static_cast<int>(sizeof(kFreqs) / sizeof(kFreqs[0]));

}  // namespace

std::vector<uint8_t> synth_dex(const SynthSpec& spec, int cls, std::mt19937_64& rng) {
  require(cls >= 0 && cls < spec.num_classes && spec.num_classes <= kNumFreqs, Errc::ConfigError,
          "class index outside the texture catalog");

  std::uniform_int_distribution<uint32_t> len_dist(5000, 9000);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> amp_dist(70.0, 100.0);
  std::uniform_real_distribution<double> mean_dist(115.0, 140.0);
  std::uniform_int_distribution<int> noise_dist(-20, 20);

  const uint32_t len = len_dist(rng);
  const double phase = phase_dist(rng);
  const double amp = amp_dist(rng);
  const double mean = mean_dist(rng);
  const double fx = kFreqs[cls][0];
  const double fy = kFreqs[cls][1];

  // <10 KB maps to a 32-wide grid under the standard width table.
  const int grid_w = 32;
  const uint32_t grid_h = (len + grid_w - 1) / grid_w;

  std::vector<uint8_t> b(len);
  for (uint32_t i = 0; i < len; ++i) {
    const double u = static_cast<double>(i % grid_w) / grid_w;
    const double v = static_cast<double>(i / grid_w) / grid_h;
    const double s = mean + amp * std::sin(2.0 * std::numbers::pi * (fx * u + fy * v) + phase) +
                     noise_dist(rng);
    b[i] = static_cast<uint8_t>(std::clamp(std::lround(s), 0L, 255L));
  }

  // Contiguous table layout after the 0x70-byte header:
  // string_ids, type_ids, proto_ids, field_ids, method_ids, class_defs, data.
  const uint32_t n_string = len / 200, n_type = n_string / 2, n_proto = n_string / 4;
  const uint32_t n_field = n_string / 2, n_method = len / 160, n_class = len / 500;
  uint32_t off = 0x70;
  const uint32_t string_off = off;
  off += 4 * n_string;
  const uint32_t type_off = off;
  off += 4 * n_type;
  const uint32_t proto_off = off;
  off += 12 * n_proto;
  const uint32_t field_off = off;
  off += 8 * n_field;
  const uint32_t method_off = off;
  off += 8 * n_method;
  const uint32_t class_off = off;
  off += 32 * n_class;
  const uint32_t data_off = off;
  require(data_off < len, Errc::ConfigError, "synth tables overflow the file");

  static const uint8_t magic[8] = {'d', 'e', 'x', '\n', '0', '3', '5', '\0'};
  std::copy(std::begin(magic), std::end(magic), b.begin());
  std::fill(b.begin() + 8, b.begin() + 0x70, 0);
  put_u32(b, 0x20, len);         // file_size
  put_u32(b, 0x24, 0x70);        // header_size
  put_u32(b, 0x28, 0x12345678);  // endian_tag
  put_u32(b, 0x38, n_string);
  put_u32(b, 0x3C, string_off);
  put_u32(b, 0x40, n_type);
  put_u32(b, 0x44, type_off);
  put_u32(b, 0x48, n_proto);
  put_u32(b, 0x4C, proto_off);
  put_u32(b, 0x50, n_field);
  put_u32(b, 0x54, field_off);
  put_u32(b, 0x58, n_method);
  put_u32(b, 0x5C, method_off);
  put_u32(b, 0x60, n_class);
  put_u32(b, 0x64, class_off);
  put_u32(b, 0x68, len - data_off);
  put_u32(b, 0x6C, data_off);
  return b;
}

int generate_corpus(const SynthSpec& spec, const std::string& out_dir) {
  spec.validate();
  const binimg::WidthRule rule = binimg::WidthRule::standard();
  const uint64_t base = aug::split_seed(spec.seed, aug::kSynthStream);

  struct Split {
    const char* name;
    int per_class;
  };
  const Split splits[] = {{"train", spec.train_per_class},
                          {"val", spec.val_per_class},
                          {"test", spec.test_per_class}};

  int written = 0;
  for (size_t si = 0; si < 3; ++si) {
    for (int c = 0; c < spec.num_classes; ++c) {
      const fs::path dir = fs::path(out_dir) / splits[si].name / ("class_" + std::to_string(c));
      fs::create_directories(dir);
      for (int i = 0; i < splits[si].per_class; ++i) {
        const uint64_t stream =
            (si * 1000003ULL + static_cast<uint64_t>(c)) * 1000003ULL + static_cast<uint64_t>(i);
        auto rng = aug::make_rng(base, stream);
        const auto bytes = synth_dex(spec, c, rng);
        const auto result = binimg::convert(bytes, spec.channels, rule, spec.image_size);
        char name[32];
        std::snprintf(name, sizeof(name), "img_%04d.png", i);
        binimg::write_png((dir / name).string(), result.image);
        ++written;
      }
    }
  }
  return written;
}

}  // namespace malimg::harness
