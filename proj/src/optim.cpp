#include "edkit/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace edkit {

double scheduled_lr(const AdamConfig& cfg, int step) {
  if (step < 1) throw std::invalid_argument("scheduled_lr: step must be >= 1");
  if (cfg.warmup_steps > 0 && step <= cfg.warmup_steps) {
    return cfg.lr * double(step) / double(cfg.warmup_steps);
  }
  if (cfg.decay == LrDecay::None) return cfg.lr;
  if (cfg.total_steps <= cfg.warmup_steps) return cfg.lr;
  if (step >= cfg.total_steps) return 0.0;
  return cfg.lr * double(cfg.total_steps - step) / double(cfg.total_steps - cfg.warmup_steps);
}

AdamW::AdamW(std::vector<ParamSlot> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  state_.resize(params_.size());
  for (size_t i = 0; i < params_.size(); ++i) {
    size_t n = static_cast<size_t>(params_[i].tensor.size());
    state_[i].m.assign(n, 0.0f);
    state_[i].v.assign(n, 0.0f);
  }
}

void AdamW::zero_grad() {
  for (ParamSlot& p : params_) p.tensor.zero_grad();
}

void AdamW::step() {
  ++step_;
  const double lr = scheduled_lr(cfg_, step_);
  last_lr_ = lr;

  // global gradient norm, with the NaN scan folded in
  double sumsq = 0.0;
  for (ParamSlot& p : params_) {
    if (!p.tensor.requires_grad() || !p.tensor.has_grad()) continue;
    const float* g = p.tensor.grad();
    double local = 0.0;
    for (int64_t i = 0; i < p.tensor.size(); ++i) local += double(g[i]) * double(g[i]);
    if (!std::isfinite(local)) {
      throw std::runtime_error("adam: non-finite gradient in tensor '" + p.name + "'");
    }
    sumsq += local;
  }
  last_grad_norm_ = std::sqrt(sumsq);
  double clip_scale = 1.0;
  if (cfg_.clip_norm > 0.0 && last_grad_norm_ > cfg_.clip_norm) {
    clip_scale = cfg_.clip_norm / last_grad_norm_;
  }

  const double bc1 = 1.0 - std::pow(cfg_.beta1, step_);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, step_);
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    ParamSlot& p = params_[pi];
    if (!p.tensor.requires_grad()) continue;
    float* w = p.tensor.data();
    const float* g = p.tensor.has_grad() ? p.tensor.grad() : nullptr;
    Moments& st = state_[pi];
    for (int64_t i = 0; i < p.tensor.size(); ++i) {
      double gi = g ? double(g[i]) * clip_scale : 0.0;
      if (!std::isfinite(gi)) {
        throw std::runtime_error("adam: non-finite gradient in tensor '" + p.name + "'");
      }
      double m = cfg_.beta1 * double(st.m[i]) + (1.0 - cfg_.beta1) * gi;
      double v = cfg_.beta2 * double(st.v[i]) + (1.0 - cfg_.beta2) * gi * gi;
      st.m[i] = static_cast<float>(m);
      st.v[i] = static_cast<float>(v);
      double update = (m / bc1) / (std::sqrt(v / bc2) + cfg_.eps);
      if (p.decay && cfg_.weight_decay > 0.0) update += cfg_.weight_decay * double(w[i]);
      w[i] = static_cast<float>(double(w[i]) - lr * update);
    }
  }
}

}  // namespace edkit
