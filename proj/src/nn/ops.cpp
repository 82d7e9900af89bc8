#include "malimg/nn/ops.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>

namespace malimg::nn {

namespace {

using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ColMat = Eigen::MatrixXd;
template <typename M>
using Map = Eigen::Map<M>;
template <typename M>
using CMap = Eigen::Map<const M>;

struct ConvDims {
  int B, Ci, H, W, Co, kh, kw, stride, pad, Ho, Wo;
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  require(x.ndim() == 4, Errc::ShapeError, "conv2d input must be 4-D, got " + shape_str(x.shape()));
  require(w.ndim() == 4, Errc::ShapeError, "conv2d weight must be 4-D");
  require(b.ndim() == 1, Errc::ShapeError, "conv2d bias must be 1-D");
  ConvDims d{};
  d.B = x.dim(0);
  d.Ci = x.dim(1);
  d.H = x.dim(2);
  d.W = x.dim(3);
  d.Co = w.dim(0);
  d.kh = w.dim(2);
  d.kw = w.dim(3);
  d.stride = stride;
  d.pad = pad;
  require(w.dim(1) == d.Ci, Errc::ShapeError, "conv2d channel mismatch");
  require(b.dim(0) == d.Co, Errc::ShapeError, "conv2d bias size mismatch");
  require(stride >= 1 && pad >= 0, Errc::ShapeError, "conv2d bad stride/pad");
  require(d.H + 2 * pad >= d.kh && d.W + 2 * pad >= d.kw, Errc::ShapeError, "conv2d kernel larger than input");
  d.Ho = (d.H + 2 * pad - d.kh) / stride + 1;
  d.Wo = (d.W + 2 * pad - d.kw) / stride + 1;
  return d;
}

void im2col(const Scalar* x, const ConvDims& d, ColMat& col) {
  const int ckk = d.Ci * d.kh * d.kw;
  const int owo = d.Ho * d.Wo;
  col.resize(ckk, owo);
  for (int ci = 0; ci < d.Ci; ++ci) {
    const Scalar* plane = x + static_cast<int64_t>(ci) * d.H * d.W;
    for (int ki = 0; ki < d.kh; ++ki) {
      for (int kj = 0; kj < d.kw; ++kj) {
        const int r = (ci * d.kh + ki) * d.kw + kj;
        for (int oy = 0; oy < d.Ho; ++oy) {
          const int iy = oy * d.stride + ki - d.pad;
          for (int ox = 0; ox < d.Wo; ++ox) {
            const int ix = ox * d.stride + kj - d.pad;
            col(r, oy * d.Wo + ox) =
                (iy >= 0 && iy < d.H && ix >= 0 && ix < d.W) ? plane[iy * d.W + ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const ColMat& col, const ConvDims& d, Scalar* x) {
  for (int ci = 0; ci < d.Ci; ++ci) {
    Scalar* plane = x + static_cast<int64_t>(ci) * d.H * d.W;
    for (int ki = 0; ki < d.kh; ++ki) {
      for (int kj = 0; kj < d.kw; ++kj) {
        const int r = (ci * d.kh + ki) * d.kw + kj;
        for (int oy = 0; oy < d.Ho; ++oy) {
          const int iy = oy * d.stride + ki - d.pad;
          if (iy < 0 || iy >= d.H) continue;
          for (int ox = 0; ox < d.Wo; ++ox) {
            const int ix = ox * d.stride + kj - d.pad;
            if (ix < 0 || ix >= d.W) continue;
            plane[iy * d.W + ix] += col(r, oy * d.Wo + ox);
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  const ConvDims d = conv_dims(x, w, b, stride, pad);
  const int ckk = d.Ci * d.kh * d.kw;
  const int owo = d.Ho * d.Wo;

  Tensor out = make_op({d.B, d.Co, d.Ho, d.Wo}, {x, w, b}, [&](Node& n) {
    Node* px = x.node().get();
    Node* pw = w.node().get();
    Node* pb = b.node().get();
    Node* self = &n;
    ConvDims dims = d;
    n.backprop = [px, pw, pb, self, dims]() {
      const int ckk2 = dims.Ci * dims.kh * dims.kw;
      const int owo2 = dims.Ho * dims.Wo;
      CMap<RowMat> Wm(pw->data.data(), dims.Co, ckk2);
      ColMat col;
      for (int bi = 0; bi < dims.B; ++bi) {
        CMap<RowMat> dY(self->grad.data() + static_cast<int64_t>(bi) * dims.Co * owo2, dims.Co, owo2);
        im2col(px->data.data() + static_cast<int64_t>(bi) * dims.Ci * dims.H * dims.W, dims, col);
        if (pw->requires_grad) {
          pw->ensure_grad();
          Map<RowMat> dW(pw->grad.data(), dims.Co, ckk2);
          dW.noalias() += dY * col.transpose();
        }
        if (pb->requires_grad) {
          pb->ensure_grad();
          Map<Eigen::VectorXd> db(pb->grad.data(), dims.Co);
          db.noalias() += dY.rowwise().sum();
        }
        if (px->requires_grad) {
          px->ensure_grad();
          ColMat dcol = Wm.transpose() * dY;
          col2im_add(dcol, dims, px->grad.data() + static_cast<int64_t>(bi) * dims.Ci * dims.H * dims.W);
        }
      }
    };
  });

  CMap<RowMat> Wm(w.data(), d.Co, ckk);
  CMap<Eigen::VectorXd> bias(b.data(), d.Co);
  ColMat col;
  for (int bi = 0; bi < d.B; ++bi) {
    im2col(x.data() + static_cast<int64_t>(bi) * d.Ci * d.H * d.W, d, col);
    Map<RowMat> Y(out.data() + static_cast<int64_t>(bi) * d.Co * owo, d.Co, owo);
    Y.noalias() = Wm * col;
    Y.colwise() += bias;
  }
  check_finite(out, "conv2d");
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  require(x.ndim() == 2 && w.ndim() == 2 && b.ndim() == 1, Errc::ShapeError, "linear expects (B,F),(O,F),(O)");
  const int B = x.dim(0), F = x.dim(1), O = w.dim(0);
  require(w.dim(1) == F && b.dim(0) == O, Errc::ShapeError,
          "linear shape mismatch: x" + shape_str(x.shape()) + " w" + shape_str(w.shape()));

  Tensor out = make_op({B, O}, {x, w, b}, [&](Node& n) {
    Node* px = x.node().get();
    Node* pw = w.node().get();
    Node* pb = b.node().get();
    Node* self = &n;
    n.backprop = [px, pw, pb, self, B, F, O]() {
      CMap<RowMat> dY(self->grad.data(), B, O);
      CMap<RowMat> X(px->data.data(), B, F);
      CMap<RowMat> W(pw->data.data(), O, F);
      if (pw->requires_grad) {
        pw->ensure_grad();
        Map<RowMat> dW(pw->grad.data(), O, F);
        dW.noalias() += dY.transpose() * X;
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        Map<Eigen::VectorXd> db(pb->grad.data(), O);
        db.noalias() += dY.colwise().sum().transpose();
      }
      if (px->requires_grad) {
        px->ensure_grad();
        Map<RowMat> dX(px->grad.data(), B, F);
        dX.noalias() += dY * W;
      }
    };
  });

  CMap<RowMat> X(x.data(), B, F);
  CMap<RowMat> W(w.data(), O, F);
  CMap<Eigen::VectorXd> bias(b.data(), O);
  Map<RowMat> Y(out.data(), B, O);
  Y.noalias() = X * W.transpose();
  Y.rowwise() += bias.transpose();
  check_finite(out, "linear");
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out = make_op(x.shape(), {x}, [&](Node& n) {
    Node* px = x.node().get();
    Node* self = &n;
    n.backprop = [px, self]() {
      if (!px->requires_grad) return;
      px->ensure_grad();
      const int64_t m = static_cast<int64_t>(px->data.size());
      for (int64_t i = 0; i < m; ++i) {
        if (px->data[i] > 0) px->grad[i] += self->grad[i];
      }
    };
  });
  const int64_t m = x.numel();
  const Scalar* in = x.data();
  Scalar* o = out.data();
  for (int64_t i = 0; i < m; ++i) o[i] = in[i] > 0 ? in[i] : 0.0;
  check_finite(out, "relu");
  return out;
}

Tensor global_avg_pool(const Tensor& x) {
  require(x.ndim() == 4, Errc::ShapeError, "global_avg_pool expects (B,C,H,W)");
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t hw = static_cast<int64_t>(H) * W;

  Tensor out = make_op({B, C}, {x}, [&](Node& n) {
    Node* px = x.node().get();
    Node* self = &n;
    n.backprop = [px, self, B, C, hw]() {
      if (!px->requires_grad) return;
      px->ensure_grad();
      for (int64_t bc = 0; bc < static_cast<int64_t>(B) * C; ++bc) {
        const Scalar g = self->grad[bc] / static_cast<Scalar>(hw);
        Scalar* dst = px->grad.data() + bc * hw;
        for (int64_t i = 0; i < hw; ++i) dst[i] += g;
      }
    };
  });

  const Scalar* in = x.data();
  Scalar* o = out.data();
  for (int64_t bc = 0; bc < static_cast<int64_t>(B) * C; ++bc) {
    Scalar acc = 0;
    const Scalar* src = in + bc * hw;
    for (int64_t i = 0; i < hw; ++i) acc += src[i];
    o[bc] = acc / static_cast<Scalar>(hw);
  }
  check_finite(out, "global_avg_pool");
  return out;
}

Tensor upsample_nearest2x(const Tensor& x) {
  require(x.ndim() == 4, Errc::ShapeError, "upsample_nearest2x expects (B,C,H,W)");
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Ho = 2 * H, Wo = 2 * W;

  Tensor out = make_op({B, C, Ho, Wo}, {x}, [&](Node& n) {
    Node* px = x.node().get();
    Node* self = &n;
    n.backprop = [px, self, B, C, H, W, Ho, Wo]() {
      if (!px->requires_grad) return;
      px->ensure_grad();
      for (int64_t bc = 0; bc < static_cast<int64_t>(B) * C; ++bc) {
        const Scalar* g = self->grad.data() + bc * Ho * Wo;
        Scalar* dst = px->grad.data() + bc * H * W;
        for (int oy = 0; oy < Ho; ++oy) {
          for (int ox = 0; ox < Wo; ++ox) {
            dst[(oy / 2) * W + ox / 2] += g[oy * Wo + ox];
          }
        }
      }
    };
  });

  const Scalar* in = x.data();
  Scalar* o = out.data();
  for (int64_t bc = 0; bc < static_cast<int64_t>(B) * C; ++bc) {
    const Scalar* src = in + bc * H * W;
    Scalar* dst = o + bc * Ho * Wo;
    for (int oy = 0; oy < Ho; ++oy) {
      for (int ox = 0; ox < Wo; ++ox) dst[oy * Wo + ox] = src[(oy / 2) * W + ox / 2];
    }
  }
  check_finite(out, "upsample_nearest2x");
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), Errc::ShapeError,
          "add shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor out = make_op(a.shape(), {a, b}, [&](Node& n) {
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    Node* self = &n;
    n.backprop = [pa, pb, self]() {
      const int64_t m = static_cast<int64_t>(self->grad.size());
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (int64_t i = 0; i < m; ++i) pa->grad[i] += self->grad[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (int64_t i = 0; i < m; ++i) pb->grad[i] += self->grad[i];
      }
    };
  });
  const int64_t m = a.numel();
  const Scalar* ad = a.data();
  const Scalar* bd = b.data();
  Scalar* o = out.data();
  for (int64_t i = 0; i < m; ++i) o[i] = ad[i] + bd[i];
  check_finite(out, "add");
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), Errc::ShapeError, "mul shape mismatch");
  Tensor out = make_op(a.shape(), {a, b}, [&](Node& n) {
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    Node* self = &n;
    n.backprop = [pa, pb, self]() {
      const int64_t m = static_cast<int64_t>(self->grad.size());
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (int64_t i = 0; i < m; ++i) pa->grad[i] += self->grad[i] * pb->data[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (int64_t i = 0; i < m; ++i) pb->grad[i] += self->grad[i] * pa->data[i];
      }
    };
  });
  const int64_t m = a.numel();
  const Scalar* ad = a.data();
  const Scalar* bd = b.data();
  Scalar* o = out.data();
  for (int64_t i = 0; i < m; ++i) o[i] = ad[i] * bd[i];
  check_finite(out, "mul");
  return out;
}

Tensor sum(const Tensor& x) {
  Tensor out = make_op({1}, {x}, [&](Node& n) {
    Node* px = x.node().get();
    Node* self = &n;
    n.backprop = [px, self]() {
      if (!px->requires_grad) return;
      px->ensure_grad();
      const Scalar g = self->grad[0];
      for (auto& v : px->grad) v += g;
    };
  });
  Scalar acc = 0;
  const Scalar* in = x.data();
  const int64_t m = x.numel();
  for (int64_t i = 0; i < m; ++i) acc += in[i];
  out.data()[0] = acc;
  check_finite(out, "sum");
  return out;
}

Tensor concat_features(const std::vector<Tensor>& parts) {
  require(!parts.empty(), Errc::ShapeError, "concat of zero tensors");
  const int B = parts[0].dim(0);
  int total = 0;
  for (const auto& p : parts) {
    require(p.ndim() == 2 && p.dim(0) == B, Errc::ShapeError, "concat_features expects matching (B,Fi)");
    total += p.dim(1);
  }

  Tensor out = make_op({B, total}, parts, [&](Node& n) {
    std::vector<Node*> srcs;
    std::vector<int> widths;
    for (const auto& p : parts) {
      srcs.push_back(p.node().get());
      widths.push_back(p.dim(1));
    }
    Node* self = &n;
    n.backprop = [srcs, widths, self, B, total]() {
      int off = 0;
      for (size_t k = 0; k < srcs.size(); ++k) {
        Node* p = srcs[k];
        if (p->requires_grad) {
          p->ensure_grad();
          for (int bi = 0; bi < B; ++bi) {
            const Scalar* g = self->grad.data() + static_cast<int64_t>(bi) * total + off;
            Scalar* dst = p->grad.data() + static_cast<int64_t>(bi) * widths[k];
            for (int j = 0; j < widths[k]; ++j) dst[j] += g[j];
          }
        }
        off += widths[k];
      }
    };
  });

  int off = 0;
  for (const auto& p : parts) {
    const int w = p.dim(1);
    for (int bi = 0; bi < B; ++bi) {
      std::memcpy(out.data() + static_cast<int64_t>(bi) * total + off,
                  p.data() + static_cast<int64_t>(bi) * w, sizeof(Scalar) * w);
    }
    off += w;
  }
  check_finite(out, "concat_features");
  return out;
}

Tensor cross_entropy(const Tensor& logits, const Tensor& targets, const std::vector<Scalar>& weights) {
  require(logits.ndim() == 2 && targets.ndim() == 2, Errc::ShapeError, "cross_entropy expects (B,C) tensors");
  const int B = logits.dim(0), C = logits.dim(1);
  require(targets.dim(0) == B && targets.dim(1) == C, Errc::ShapeError, "cross_entropy target shape mismatch");
  require(static_cast<int>(weights.size()) == C, Errc::ShapeError, "class weight count mismatch");
  for (int bi = 0; bi < B; ++bi) {
    Scalar s = 0;
    for (int c = 0; c < C; ++c) s += targets.data()[static_cast<int64_t>(bi) * C + c];
    require(std::abs(s - 1.0) <= 1e-6, Errc::InvalidTarget,
            "target row " + std::to_string(bi) + " sums to " + std::to_string(s));
  }

  // Stable per-row: L_b = sum_c w_c y_bc (logsumexp_b - l_bc).
  std::vector<Scalar> probs(static_cast<size_t>(B) * C);
  Scalar loss = 0;
  for (int bi = 0; bi < B; ++bi) {
    const Scalar* l = logits.data() + static_cast<int64_t>(bi) * C;
    const Scalar* y = targets.data() + static_cast<int64_t>(bi) * C;
    Scalar mx = l[0];
    for (int c = 1; c < C; ++c) mx = std::max(mx, l[c]);
    Scalar se = 0;
    for (int c = 0; c < C; ++c) se += std::exp(l[c] - mx);
    const Scalar lse = mx + std::log(se);
    Scalar* p = probs.data() + static_cast<int64_t>(bi) * C;
    for (int c = 0; c < C; ++c) p[c] = std::exp(l[c] - lse);
    for (int c = 0; c < C; ++c) loss += weights[static_cast<size_t>(c)] * y[c] * (lse - l[c]);
  }
  loss /= static_cast<Scalar>(B);

  Tensor out = make_op({1}, {logits, targets}, [&](Node& n) {
    Node* pl = logits.node().get();
    Node* pt = targets.node().get();
    Node* self = &n;
    std::vector<Scalar> w = weights;
    std::vector<Scalar> p = probs;
    n.backprop = [pl, pt, self, w = std::move(w), p = std::move(p), B, C]() {
      if (!pl->requires_grad) return;
      pl->ensure_grad();
      const Scalar g = self->grad[0] / static_cast<Scalar>(B);
      for (int bi = 0; bi < B; ++bi) {
        const Scalar* y = pt->data.data() + static_cast<int64_t>(bi) * C;
        const Scalar* pr = p.data() + static_cast<int64_t>(bi) * C;
        Scalar wy = 0;
        for (int c = 0; c < C; ++c) wy += w[static_cast<size_t>(c)] * y[c];
        Scalar* dl = pl->grad.data() + static_cast<int64_t>(bi) * C;
        for (int c = 0; c < C; ++c) dl[c] += g * (pr[c] * wy - w[static_cast<size_t>(c)] * y[c]);
      }
    };
  });
  out.data()[0] = loss;
  check_finite(out, "cross_entropy");
  return out;
}

std::vector<Scalar> softmax_rows(const Tensor& logits) {
  require(logits.ndim() == 2, Errc::ShapeError, "softmax_rows expects (B,C)");
  const int B = logits.dim(0), C = logits.dim(1);
  std::vector<Scalar> probs(static_cast<size_t>(B) * C);
  for (int bi = 0; bi < B; ++bi) {
    const Scalar* l = logits.data() + static_cast<int64_t>(bi) * C;
    Scalar* p = probs.data() + static_cast<int64_t>(bi) * C;
    Scalar mx = l[0];
    for (int c = 1; c < C; ++c) mx = std::max(mx, l[c]);
    Scalar se = 0;
    for (int c = 0; c < C; ++c) {
      p[c] = std::exp(l[c] - mx);
      se += p[c];
    }
    for (int c = 0; c < C; ++c) p[c] /= se;
  }
  return probs;
}

}  // namespace malimg::nn
