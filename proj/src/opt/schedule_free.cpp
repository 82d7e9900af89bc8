#include "malimg/opt/schedule_free.hpp"

#include <cmath>

namespace malimg::opt {

void SfHyper::validate() const {
  require(lr > 0, Errc::ConfigError, "lr must be positive");
  require(beta1 >= 0 && beta1 < 1, Errc::ConfigError, "beta1 must be in [0,1)");
  require(beta2 >= 0 && beta2 < 1, Errc::ConfigError, "beta2 must be in [0,1)");
  require(eps > 0, Errc::ConfigError, "eps must be positive");
  require(weight_decay >= 0, Errc::ConfigError, "weight_decay must be >= 0");
  require(warmup_steps >= 0, Errc::ConfigError, "warmup_steps must be >= 0");
}

SfState sf_init(std::span<const double> theta0) {
  SfState s;
  s.x.assign(theta0.begin(), theta0.end());
  s.z = s.x;
  s.v.assign(theta0.size(), 0.0);
  return s;
}

double sf_eta(const SfHyper& h, long t) {
  if (h.warmup_steps == 0) return h.lr;
  return h.lr * std::min(1.0, static_cast<double>(t) / static_cast<double>(h.warmup_steps));
}

void sf_eval_point(const SfState& s, const SfHyper& h, std::span<double> y) {
  require(y.size() == s.size(), Errc::ShapeError, "eval point size mismatch");
  for (size_t i = 0; i < y.size(); ++i) y[i] = (1.0 - h.beta1) * s.z[i] + h.beta1 * s.x[i];
}

std::vector<double> sf_eval_point(const SfState& s, const SfHyper& h) {
  std::vector<double> y(s.size());
  sf_eval_point(s, h, y);
  return y;
}

void sf_step(SfState& s, std::span<const double> g, const SfHyper& h) {
  require(g.size() == s.size(), Errc::ShapeError, "gradient size mismatch");
  for (double v : g) {
    if (!std::isfinite(v)) fail(Errc::NonFiniteGradient, "gradient contains NaN/Inf");
  }

  const long t = s.step_count + 1;
  const double eta = sf_eta(h, t);
  const double bc = 1.0 - std::pow(h.beta2, static_cast<double>(t));

  s.lr_sq_sum += eta * eta;
  const double c = (eta * eta) / s.lr_sq_sum;  // c_{t+1}; equals 1 at t=1

  for (size_t i = 0; i < s.size(); ++i) {
    const double y = (1.0 - h.beta1) * s.z[i] + h.beta1 * s.x[i];
    s.v[i] = h.beta2 * s.v[i] + (1.0 - h.beta2) * g[i] * g[i];
    const double vhat = s.v[i] / bc;
    s.z[i] -= eta * g[i] / (std::sqrt(vhat) + h.eps) + eta * h.weight_decay * y;
    s.x[i] = (1.0 - c) * s.x[i] + c * s.z[i];
  }
  s.step_count = t;

  for (size_t i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s.x[i]) || !std::isfinite(s.z[i]) || !std::isfinite(s.v[i])) {
      fail(Errc::NonFiniteState, "optimizer state diverged at step " + std::to_string(t));
    }
  }
}

}  // namespace malimg::opt
