#include "malimg/nn/model.hpp"

#include <cmath>
#include <random>

namespace malimg::nn {

void BackboneConfig::validate() const {
  require(in_channels == 1 || in_channels == 3, Errc::ConfigError, "in_channels must be 1 or 3");
  for (int w : stage_widths) require(w > 0, Errc::ConfigError, "stage widths must be positive");
  for (int s : stage_strides)
    require(s == 2, Errc::ConfigError, "every stage must halve the spatial resolution (stride 2)");
  require(num_classes >= 2, Errc::ConfigError, "num_classes must be >= 2");
}

void FpnConfig::validate() const { require(width > 0, Errc::ConfigError, "fpn width must be positive"); }

void ModelConfig::validate() const {
  backbone.validate();
  if (use_fpn) fpn.validate();
}

void fill_kaiming_uniform(Tensor& t, int fan_in, uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Scalar bound = std::sqrt(6.0 / static_cast<Scalar>(fan_in));
  std::uniform_real_distribution<Scalar> dist(-bound, bound);
  for (auto& v : t.vec()) v = dist(rng);
}

namespace {

ConvParams make_conv(int co, int ci, int k, uint64_t seed) {
  ConvParams p{Tensor({co, ci, k, k}, true), Tensor({co}, true)};
  fill_kaiming_uniform(p.w, ci * k * k, seed);
  return p;  // biases stay zero
}

ConvParams make_linear(int out, int in, uint64_t seed) {
  ConvParams p{Tensor({out, in}, true), Tensor({out}, true)};
  fill_kaiming_uniform(p.w, in, seed);
  return p;
}

}  // namespace

Backbone::Backbone(const BackboneConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  uint64_t s = seed;
  stem_ = make_conv(cfg_.stage_widths[0], cfg_.in_channels, 3, s++);
  int in = cfg_.stage_widths[0];
  for (int i = 0; i < 4; ++i) {
    const int out = cfg_.stage_widths[static_cast<size_t>(i)];
    stages_[static_cast<size_t>(i)].down = make_conv(out, in, 3, s++);
    stages_[static_cast<size_t>(i)].same = make_conv(out, out, 3, s++);
    in = out;
  }
}

std::array<Tensor, 4> Backbone::forward(const Tensor& x) const {
  require(x.ndim() == 4, Errc::ShapeError, "backbone input must be (B,K,H,W)");
  require(x.dim(1) == cfg_.in_channels, Errc::ShapeError,
          "backbone expects " + std::to_string(cfg_.in_channels) + " input channels, got " +
              std::to_string(x.dim(1)));
  require(x.dim(2) % 32 == 0 && x.dim(3) % 32 == 0, Errc::ShapeError,
          "backbone input H,W must be divisible by 32, got " + shape_str(x.shape()));

  Tensor h = relu(conv2d(x, stem_.w, stem_.b, 2, 1));
  std::array<Tensor, 4> c;
  for (int i = 0; i < 4; ++i) {
    const auto& st = stages_[static_cast<size_t>(i)];
    h = relu(conv2d(h, st.down.w, st.down.b, cfg_.stage_strides[static_cast<size_t>(i)], 1));
    h = relu(conv2d(h, st.same.w, st.same.b, 1, 1));
    c[static_cast<size_t>(i)] = h;
  }
  return c;
}

void Backbone::collect_params(const std::string& prefix, NamedParams& out) {
  out.emplace_back(prefix + "stem.w", stem_.w);
  out.emplace_back(prefix + "stem.b", stem_.b);
  for (int i = 0; i < 4; ++i) {
    const std::string sp = prefix + "stage" + std::to_string(i + 1) + ".";
    auto& st = stages_[static_cast<size_t>(i)];
    out.emplace_back(sp + "down.w", st.down.w);
    out.emplace_back(sp + "down.b", st.down.b);
    out.emplace_back(sp + "same.w", st.same.w);
    out.emplace_back(sp + "same.b", st.same.b);
  }
}

Fpn::Fpn(const std::array<int, 4>& c_widths, const FpnConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  uint64_t s = seed;
  for (int i = 0; i < 4; ++i) {
    laterals_[static_cast<size_t>(i)] = make_conv(cfg_.width, c_widths[static_cast<size_t>(i)], 1, s++);
  }
}

std::array<Tensor, 4> Fpn::fuse(const std::array<Tensor, 4>& c) const {
  for (int i = 0; i < 3; ++i) {
    const Tensor& fine = c[static_cast<size_t>(i)];
    const Tensor& coarse = c[static_cast<size_t>(i) + 1];
    require(fine.dim(2) == 2 * coarse.dim(2) && fine.dim(3) == 2 * coarse.dim(3), Errc::ShapeError,
            "pyramid inputs must halve between levels: " + shape_str(fine.shape()) + " vs " +
                shape_str(coarse.shape()));
    require(fine.dim(0) == coarse.dim(0), Errc::ShapeError, "pyramid batch mismatch");
  }

  std::array<Tensor, 4> p;
  p[3] = conv2d(c[3], laterals_[3].w, laterals_[3].b, 1, 0);
  for (int i = 2; i >= 0; --i) {
    Tensor lat = conv2d(c[static_cast<size_t>(i)], laterals_[static_cast<size_t>(i)].w,
                        laterals_[static_cast<size_t>(i)].b, 1, 0);
    p[static_cast<size_t>(i)] = add(lat, upsample_nearest2x(p[static_cast<size_t>(i) + 1]));
  }
  return p;
}

void Fpn::collect_params(const std::string& prefix, NamedParams& out) {
  for (int i = 0; i < 4; ++i) {
    const std::string sp = prefix + "lateral" + std::to_string(i + 2) + ".";
    auto& l = laterals_[static_cast<size_t>(i)];
    out.emplace_back(sp + "w", l.w);
    out.emplace_back(sp + "b", l.b);
  }
}

Head::Head(int in_features, int num_classes, uint64_t seed) : fc_(make_linear(num_classes, in_features, seed)) {}

Tensor Head::forward_plain(const Tensor& c5) const { return linear(global_avg_pool(c5), fc_.w, fc_.b); }

Tensor Head::forward_fpn(const std::array<Tensor, 4>& p) const {
  std::vector<Tensor> pooled;
  pooled.reserve(4);
  for (const auto& t : p) pooled.push_back(global_avg_pool(t));
  return linear(concat_features(pooled), fc_.w, fc_.b);
}

Model::Model(const ModelConfig& cfg, uint64_t seed)
    : cfg_(cfg),
      backbone_(cfg.backbone, seed),
      head_(cfg.use_fpn ? 4 * cfg.fpn.width : cfg.backbone.stage_widths[3], cfg.backbone.num_classes,
            seed + 101) {
  cfg_.validate();
  if (cfg_.use_fpn) fpn_.emplace(cfg_.backbone.stage_widths, cfg_.fpn, seed + 51);
  backbone_.collect_params("backbone.", params_);
  if (fpn_) fpn_->collect_params("fpn.", params_);
  head_.collect_params("head.", params_);
}

Tensor Model::forward(const Tensor& x) const {
  auto c = backbone_.forward(x);
  if (fpn_) return head_.forward_fpn(fpn_->fuse(c));
  return head_.forward_plain(c[3]);
}

void Head::collect_params(const std::string& prefix, NamedParams& out) {
  out.emplace_back(prefix + "fc.w", fc_.w);
  out.emplace_back(prefix + "fc.b", fc_.b);
}

int64_t Model::param_count() const {
  int64_t n = 0;
  for (const auto& [name, t] : params_) n += t.numel();
  return n;
}

std::vector<Scalar> Model::flatten_params() const {
  std::vector<Scalar> flat;
  flat.reserve(static_cast<size_t>(param_count()));
  for (const auto& [name, t] : params_) flat.insert(flat.end(), t.vec().begin(), t.vec().end());
  return flat;
}

std::vector<Scalar> Model::flatten_grads() const {
  std::vector<Scalar> flat;
  flat.reserve(static_cast<size_t>(param_count()));
  for (const auto& [name, t] : params_) {
    const auto& g = t.grad_vec();
    if (g.empty()) {
      flat.insert(flat.end(), static_cast<size_t>(t.numel()), 0.0);
    } else {
      flat.insert(flat.end(), g.begin(), g.end());
    }
  }
  return flat;
}

void Model::load_flat_params(const std::vector<Scalar>& flat) {
  require(static_cast<int64_t>(flat.size()) == param_count(), Errc::ShapeError,
          "flat parameter vector size mismatch");
  size_t off = 0;
  for (auto& [name, t] : params_) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
              flat.begin() + static_cast<std::ptrdiff_t>(off + t.vec().size()), t.vec().begin());
    off += t.vec().size();
  }
}

void Model::zero_grads() {
  for (auto& [name, t] : params_) t.zero_grad();
}

}  // namespace malimg::nn
