#include "malimg/opt/adamw.hpp"

#include <cmath>

namespace malimg::opt {

void AdamWHyper::validate() const {
  require(lr > 0, Errc::ConfigError, "lr must be positive");
  require(beta1 >= 0 && beta1 < 1, Errc::ConfigError, "beta1 must be in [0,1)");
  require(beta2 >= 0 && beta2 < 1, Errc::ConfigError, "beta2 must be in [0,1)");
  require(eps > 0, Errc::ConfigError, "eps must be positive");
  require(weight_decay >= 0, Errc::ConfigError, "weight_decay must be >= 0");
}

AdamWState adamw_init(size_t n) {
  AdamWState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  return s;
}

void adamw_step(AdamWState& s, std::span<double> params, std::span<const double> g, const AdamWHyper& h) {
  require(params.size() == s.size() && g.size() == s.size(), Errc::ShapeError, "adamw size mismatch");
  for (double v : g) {
    if (!std::isfinite(v)) fail(Errc::NonFiniteGradient, "gradient contains NaN/Inf");
  }

  const long t = ++s.step_count;
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));

  for (size_t i = 0; i < s.size(); ++i) {
    s.m[i] = h.beta1 * s.m[i] + (1.0 - h.beta1) * g[i];
    s.v[i] = h.beta2 * s.v[i] + (1.0 - h.beta2) * g[i] * g[i];
    const double mhat = s.m[i] / bc1;
    const double vhat = s.v[i] / bc2;
    params[i] -= h.lr * mhat / (std::sqrt(vhat) + h.eps) + h.lr * h.weight_decay * params[i];
  }

  for (size_t i = 0; i < s.size(); ++i) {
    if (!std::isfinite(params[i]) || !std::isfinite(s.m[i]) || !std::isfinite(s.v[i])) {
      fail(Errc::NonFiniteState, "adamw state diverged at step " + std::to_string(t));
    }
  }
}

}  // namespace malimg::opt
