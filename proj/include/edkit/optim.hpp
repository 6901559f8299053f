#pragma once

#include <string>
#include <vector>

#include "edkit/tensor.hpp"

namespace edkit {

enum class LrDecay { None, Linear };

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-6;
  double weight_decay = 0.01;
  double clip_norm = 1.0;  // <= 0 disables clipping
  int warmup_steps = 0;
  LrDecay decay = LrDecay::Linear;
  int total_steps = 0;  // required when decay == Linear
};

struct ParamSlot {
  std::string name;
  Tensor tensor;
  bool decay = true;        // decoupled weight decay applies to this tensor
  std::string group;        // freeze-plan group ("encoder", "word_embeddings", ...)
};

// Warmup then optional linear decay. Steps are 1-based: the multiplier ramps
// to 1 exactly at step == warmup_steps and, under linear decay, reaches 0
// exactly at step == total_steps.
double scheduled_lr(const AdamConfig& cfg, int step);

// Adam with decoupled weight decay and global gradient-norm clipping.
// Tensors whose requires_grad flag is off are skipped entirely.
class AdamW {
 public:
  AdamW(std::vector<ParamSlot> params, AdamConfig cfg);

  // Applies one update using the gradients currently on the tensors.
  // Throws if any gradient is non-finite, naming the offending tensor.
  void step();
  void zero_grad();

  int step_count() const { return step_; }
  double last_lr() const { return last_lr_; }
  double last_grad_norm() const { return last_grad_norm_; }

 private:
  struct Moments {
    std::vector<float> m, v;
  };
  std::vector<ParamSlot> params_;
  std::vector<Moments> state_;
  AdamConfig cfg_;
  int step_ = 0;
  double last_lr_ = 0.0;
  double last_grad_norm_ = 0.0;
};

}  // namespace edkit
