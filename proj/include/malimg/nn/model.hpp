#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "malimg/nn/ops.hpp"
#include "malimg/nn/tensor.hpp"

namespace malimg::nn {

using NamedParams = std::vector<std::pair<std::string, Tensor>>;

// Compact 4-stage surrogate for the usual residual backbone: a stride-2 stem
// followed by four stages of [3x3 stride-2 conv, ReLU, 3x3 conv, ReLU]. The
// stages emit C2..C5 at 1/4 .. 1/32 of the input resolution, the interface
// the pyramid head consumes.
struct BackboneConfig {
  int in_channels = 1;
  std::array<int, 4> stage_widths{16, 32, 64, 128};
  std::array<int, 4> stage_strides{2, 2, 2, 2};
  int num_classes = 43;

  void validate() const;
};

struct FpnConfig {
  int width = 64;  // channels of every P_i
  void validate() const;
};

struct ConvParams {
  Tensor w, b;
};

class Backbone {
 public:
  Backbone(const BackboneConfig& cfg, uint64_t seed);

  // x: (B,K,H,W) with H and W divisible by 32. Returns {C2,C3,C4,C5}.
  std::array<Tensor, 4> forward(const Tensor& x) const;

  const BackboneConfig& config() const { return cfg_; }
  void collect_params(const std::string& prefix, NamedParams& out);

 private:
  BackboneConfig cfg_;
  ConvParams stem_;
  struct Stage {
    ConvParams down, same;
  };
  std::array<Stage, 4> stages_;
};

// Top-down fusion: P5 = lateral(C5); P_i = lateral(C_i) + upsample2x(P_{i+1}).
class Fpn {
 public:
  Fpn(const std::array<int, 4>& c_widths, const FpnConfig& cfg, uint64_t seed);

  std::array<Tensor, 4> fuse(const std::array<Tensor, 4>& c) const;

  const FpnConfig& config() const { return cfg_; }
  void collect_params(const std::string& prefix, NamedParams& out);

  // Test hook: overwrite a lateral projection.
  ConvParams& lateral(int i) { return laterals_[static_cast<size_t>(i)]; }

 private:
  FpnConfig cfg_;
  std::array<ConvParams, 4> laterals_;  // index 0 -> C2 ... 3 -> C5
};

// Pooled linear classifier. Without FPN it consumes C5; with FPN it pools
// every pyramid level and classifies the concatenated vector.
class Head {
 public:
  Head(int in_features, int num_classes, uint64_t seed);

  Tensor forward_plain(const Tensor& c5) const;
  Tensor forward_fpn(const std::array<Tensor, 4>& p) const;

  void collect_params(const std::string& prefix, NamedParams& out);

 private:
  ConvParams fc_;
};

struct ModelConfig {
  BackboneConfig backbone;
  bool use_fpn = false;
  FpnConfig fpn;

  void validate() const;
};

class Model {
 public:
  Model(const ModelConfig& cfg, uint64_t seed);

  Tensor forward(const Tensor& x) const;  // logits (B, num_classes)

  const ModelConfig& config() const { return cfg_; }
  NamedParams& params() { return params_; }
  const NamedParams& params() const { return params_; }
  int64_t param_count() const;

  // Flat views over all parameters in declaration order.
  std::vector<Scalar> flatten_params() const;
  std::vector<Scalar> flatten_grads() const;
  void load_flat_params(const std::vector<Scalar>& flat);
  void zero_grads();

 private:
  ModelConfig cfg_;
  Backbone backbone_;
  std::optional<Fpn> fpn_;
  Head head_;
  NamedParams params_;
};

// Kaiming-uniform fan-in fill, the init used by every conv/linear weight.
void fill_kaiming_uniform(Tensor& t, int fan_in, uint64_t seed);

}  // namespace malimg::nn
