#include "malimg/binimg/png_io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace malimg::binimg {

namespace {

void png_vector_write(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

void png_noop_flush(png_structp) {}

std::vector<uint8_t> quantize(const ImageTensor& img) {
  const size_t plane = img.plane_size();
  std::vector<uint8_t> bytes(plane * static_cast<size_t>(img.channels));
  for (size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < img.channels; ++c) {
      const double v = std::clamp(img.data[static_cast<size_t>(c) * plane + i], 0.0, 1.0);
      bytes[i * static_cast<size_t>(img.channels) + static_cast<size_t>(c)] =
          static_cast<uint8_t>(std::lround(v * 255.0));
    }
  }
  return bytes;
}

}  // namespace

std::vector<uint8_t> encode_png(const ImageTensor& img) {
  require(img.channels == 1 || img.channels == 3, Errc::ShapeMismatch, "PNG writer expects 1 or 3 channels");
  require(img.height > 0 && img.width > 0, Errc::ShapeMismatch, "PNG writer got an empty image");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, Errc::IoError, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(Errc::IoError, "png_create_info_struct failed");
  }
  std::vector<uint8_t> out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(Errc::IoError, "libpng write error");
  }
  png_set_write_fn(png, &out, png_vector_write, png_noop_flush);

  // Pinned settings: no row filters, fixed zlib level, fixed strategy.
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_set_compression_level(png, 6);
  png_set_compression_strategy(png, 0 /* Z_DEFAULT_STRATEGY */);

  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<uint8_t> bytes = quantize(img);
  const size_t row = static_cast<size_t>(img.width) * static_cast<size_t>(img.channels);
  for (int y = 0; y < img.height; ++y) {
    png_write_row(png, bytes.data() + static_cast<size_t>(y) * row);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const std::string& path, const ImageTensor& img) {
  const std::vector<uint8_t> data = encode_png(img);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(bool(os), Errc::IoError, "cannot open " + path + " for writing");
  os.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  require(bool(os), Errc::IoError, "write failed for " + path);
}

RawImage read_png(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  require(fp != nullptr, Errc::UnreadableImage, "cannot open " + path);

  uint8_t sig[8];
  if (std::fread(sig, 1, 8, fp) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    std::fclose(fp);
    fail(Errc::UnreadableImage, path + " is not a PNG file");
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) {
    std::fclose(fp);
    fail(Errc::IoError, "png_create_read_struct failed");
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    std::fclose(fp);
    fail(Errc::IoError, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(Errc::UnreadableImage, "libpng failed to decode " + path);
  }
  png_init_io(png, fp);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (depth == 16) png_set_strip_16(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
  }
  png_read_update_info(png, info);

  RawImage raw;
  raw.width = static_cast<int>(png_get_image_width(png, info));
  raw.height = static_cast<int>(png_get_image_height(png, info));
  raw.channels = static_cast<int>(png_get_channels(png, info));
  if (raw.channels != 1 && raw.channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(Errc::UnreadableImage, path + " decodes to unsupported channel count");
  }

  const size_t row = static_cast<size_t>(raw.width) * static_cast<size_t>(raw.channels);
  raw.pixels.resize(row * static_cast<size_t>(raw.height));
  std::vector<png_bytep> rows(static_cast<size_t>(raw.height));
  for (int y = 0; y < raw.height; ++y) rows[static_cast<size_t>(y)] = raw.pixels.data() + static_cast<size_t>(y) * row;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return raw;
}

ImageTensor to_tensor(const RawImage& raw, int want_channels, bool* adapted) {
  require(want_channels == 1 || want_channels == 3, Errc::ConfigError, "channel count must be 1 or 3");
  if (adapted) *adapted = raw.channels != want_channels;

  ImageTensor img = ImageTensor::zeros(want_channels, raw.height, raw.width);
  const size_t plane = img.plane_size();
  for (size_t i = 0; i < plane; ++i) {
    if (raw.channels == 1) {
      const double v = raw.pixels[i] / 255.0;
      for (int c = 0; c < want_channels; ++c) img.data[static_cast<size_t>(c) * plane + i] = v;
    } else if (want_channels == 3) {
      for (int c = 0; c < 3; ++c) {
        img.data[static_cast<size_t>(c) * plane + i] = raw.pixels[i * 3 + static_cast<size_t>(c)] / 255.0;
      }
    } else {
      const double v = (raw.pixels[i * 3] + raw.pixels[i * 3 + 1] + raw.pixels[i * 3 + 2]) / (3.0 * 255.0);
      img.data[i] = v;
    }
  }
  return img;
}

}  // namespace malimg::binimg
