#pragma once

// Shared test scaffolding: scratch directories, the hand-built DEX fixture,
// and a finite-difference driver for graph ops.

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "malimg/nn/tensor.hpp"
#include "oracles.hpp"

namespace testutil {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<uint64_t> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("malimg_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  std::string sub(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline void put_u32(std::vector<uint8_t>& b, size_t off, uint32_t v) {
  b[off] = static_cast<uint8_t>(v & 0xFF);
  b[off + 1] = static_cast<uint8_t>((v >> 8) & 0xFF);
  b[off + 2] = static_cast<uint8_t>((v >> 16) & 0xFF);
  b[off + 3] = static_cast<uint8_t>((v >> 24) & 0xFF);
}

// The hand-built DEX fixture: 0x300 bytes, string_ids (16 x 4B) at 0x70,
// method_ids (16 x 8B) at 0xB0, class_defs (4 x 32B) at 0x130, declared data
// section [0x200, 0x300). Payload bytes are the nonzero pattern
// (i % 251) + 1 so every position is visible to channel-occupancy counts.
inline std::vector<uint8_t> fixture_dex() {
  std::vector<uint8_t> b(0x300);
  for (size_t i = 0; i < b.size(); ++i) b[i] = static_cast<uint8_t>((i % 251) + 1);
  const uint8_t magic[8] = {'d', 'e', 'x', '\n', '0', '3', '5', 0};
  for (size_t i = 0; i < 8; ++i) b[i] = magic[i];
  put_u32(b, 0x20, 0x300);       // file_size
  put_u32(b, 0x24, 0x70);        // header_size
  put_u32(b, 0x28, 0x12345678);  // endian_tag
  put_u32(b, 0x38, 0x10);        // string_ids_size
  put_u32(b, 0x3C, 0x70);        // string_ids_off
  put_u32(b, 0x40, 0);           // type_ids
  put_u32(b, 0x44, 0);
  put_u32(b, 0x48, 0);           // proto_ids
  put_u32(b, 0x4C, 0);
  put_u32(b, 0x50, 0);           // field_ids
  put_u32(b, 0x54, 0);
  put_u32(b, 0x58, 0x10);        // method_ids_size
  put_u32(b, 0x5C, 0xB0);        // method_ids_off
  put_u32(b, 0x60, 0x4);         // class_defs_size
  put_u32(b, 0x64, 0x130);       // class_defs_off
  put_u32(b, 0x68, 0x100);       // data_size
  put_u32(b, 0x6C, 0x200);       // data_off
  return b;
}

inline void fill_uniform(malimg::nn::Tensor& t, double lo, double hi, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : t.vec()) v = dist(rng);
}

// Finite-difference check of d(loss)/d(leaf) for one leaf tensor. `make_loss`
// must rebuild the graph from the current leaf contents on every call; the
// analytic gradient comes from one backward pass.
inline double gradcheck_leaf(malimg::nn::Tensor& leaf,
                             const std::function<malimg::nn::Tensor()>& make_loss, double h = 1e-4) {
  leaf.zero_grad();
  malimg::nn::Tensor loss = make_loss();
  malimg::nn::backward(loss);
  std::vector<double> analytic = leaf.grad_vec();
  analytic.resize(leaf.vec().size(), 0.0);  // disconnected leaves get zero gradient

  auto f = [&](const std::vector<double>& theta) {
    leaf.vec() = theta;
    return make_loss().item();
  };
  const std::vector<double> theta0 = leaf.vec();
  const double err = oracle::fd_max_rel_err(f, theta0, analytic, h);
  leaf.vec() = theta0;
  return err;
}

}  // namespace testutil
