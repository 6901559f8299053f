#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edkit/optim.hpp"
#include "edkit/tensor.hpp"

namespace edkit {

struct ModelConfig {
  int hidden = 64;
  int layers = 2;
  int heads = 4;
  int head_size = 0;  // 0 -> hidden / heads
  int max_words = 128;
  int word_vocab = 0;
  int entity_vocab = 0;
  float dropout = 0.1f;
  int ffn_inner = 0;  // 0 -> 4 * hidden

  int head_dim() const { return head_size > 0 ? head_size : hidden / heads; }
  int ffn() const { return ffn_inner > 0 ? ffn_inner : 4 * hidden; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct LayerParams {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;  // attention projections, [H,H] / [H]
  Tensor ln1_gain, ln1_bias;
  Tensor ff1_w, ff1_b;  // [H, ffn] / [ffn]
  Tensor ff2_w, ff2_b;  // [ffn, H] / [H]
  Tensor ln2_gain, ln2_bias;
};

// Every learnable tensor of the model. Weight matrices apply as x · W, so a
// row indexes an input feature.
struct ModelParams {
  ModelConfig config;
  Tensor word_emb;     // [V_w, H]
  Tensor entity_emb;   // [V_e, H], shared with the prediction output projection
  Tensor type_word;    // [H]
  Tensor type_entity;  // [H]
  Tensor word_pos;     // [max_words, H]
  Tensor entity_pos;   // [max_words, H]
  std::vector<LayerParams> layers;
  Tensor mep_w, mep_b;              // [H,H] / [H]
  Tensor mep_ln_gain, mep_ln_bias;  // [H]
  Tensor out_bias;                  // [V_e]

  // Truncated-normal(0.02) weights, zero biases, unit gains.
  static ModelParams init(const ModelConfig& cfg, uint64_t seed);

  // Canonical name -> tensor registry; defines checkpoint order, weight-decay
  // eligibility, and freeze-plan groups.
  std::vector<ParamSlot> named() const;
  Tensor find(const std::string& name) const;

  void set_trainable(bool value);
  // Marks every tensor in the given groups as frozen, the rest trainable.
  void freeze_groups(const std::vector<std::string>& groups);
  // Marks the named tensors frozen, the rest trainable.
  void freeze_names(const std::vector<std::string>& names);
};

// Draws from N(0, stddev) redrawing anything beyond two standard deviations.
void fill_truncated_normal(Tensor& t, float stddev, std::mt19937_64& rng);

}  // namespace edkit
