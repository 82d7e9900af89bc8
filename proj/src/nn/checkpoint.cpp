#include "malimg/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace malimg::nn {

static_assert(std::endian::native == std::endian::little,
              "MIFW serialization assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'M', 'I', 'F', 'W'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  require(bool(is), Errc::IoError, std::string("truncated checkpoint while reading ") + what);
  return v;
}

}  // namespace

const CheckpointTensor* CheckpointFile::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void save_checkpoint(const std::string& path, const std::string& meta_json,
                     const std::vector<CheckpointTensor>& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(bool(os), Errc::IoError, "cannot open " + path + " for writing");
  os.write(kMagic, 4);
  put<uint32_t>(os, kVersion);
  put<uint32_t>(os, static_cast<uint32_t>(meta_json.size()));
  os.write(meta_json.data(), static_cast<std::streamsize>(meta_json.size()));
  put<uint32_t>(os, static_cast<uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    require(t.name.size() < 65536, Errc::IoError, "tensor name too long");
    put<uint16_t>(os, static_cast<uint16_t>(t.name.size()));
    os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<uint8_t>(os, static_cast<uint8_t>(t.shape.size()));
    int64_t n = 1;
    for (int d : t.shape) {
      put<uint32_t>(os, static_cast<uint32_t>(d));
      n *= d;
    }
    require(n == static_cast<int64_t>(t.values.size()), Errc::ShapeError,
            "checkpoint tensor " + t.name + " value count does not match shape");
    os.write(reinterpret_cast<const char*>(t.values.data()),
             static_cast<std::streamsize>(t.values.size() * sizeof(float)));
  }
  require(bool(os), Errc::IoError, "write failed for " + path);
}

CheckpointFile load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(bool(is), Errc::IoError, "cannot open checkpoint " + path);
  char magic[4];
  is.read(magic, 4);
  require(bool(is) && std::memcmp(magic, kMagic, 4) == 0, Errc::ConfigMismatch,
          path + " is not a MIFW checkpoint");
  const auto version = get<uint32_t>(is, "version");
  require(version == kVersion, Errc::ConfigMismatch,
          "unsupported checkpoint version " + std::to_string(version));

  CheckpointFile cf;
  const auto meta_len = get<uint32_t>(is, "meta length");
  cf.meta_json.resize(meta_len);
  is.read(cf.meta_json.data(), meta_len);
  require(bool(is), Errc::IoError, "truncated checkpoint meta block");

  const auto count = get<uint32_t>(is, "tensor count");
  cf.tensors.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    CheckpointTensor t;
    const auto name_len = get<uint16_t>(is, "name length");
    t.name.resize(name_len);
    is.read(t.name.data(), name_len);
    const auto rank = get<uint8_t>(is, "rank");
    int64_t n = 1;
    for (uint8_t d = 0; d < rank; ++d) {
      const auto dim = get<uint32_t>(is, "dim");
      t.shape.push_back(static_cast<int>(dim));
      n *= dim;
    }
    t.values.resize(static_cast<size_t>(n));
    is.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(n * sizeof(float)));
    require(bool(is), Errc::IoError, "truncated tensor data for " + t.name);
    cf.tensors.push_back(std::move(t));
  }
  return cf;
}

CheckpointTensor to_f32(const std::string& name, const Tensor& t) {
  CheckpointTensor ct{name, t.shape(), {}};
  ct.values.reserve(static_cast<size_t>(t.numel()));
  for (Scalar v : t.vec()) ct.values.push_back(static_cast<float>(v));
  return ct;
}

CheckpointTensor vec_to_f32(const std::string& name, const std::vector<Scalar>& v) {
  CheckpointTensor ct{name, {static_cast<int>(v.size())}, {}};
  ct.values.reserve(v.size());
  for (Scalar x : v) ct.values.push_back(static_cast<float>(x));
  return ct;
}

}  // namespace malimg::nn
