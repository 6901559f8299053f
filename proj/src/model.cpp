#include "edkit/model.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace edkit {

void ModelConfig::validate() const {
  if (hidden < 1 || layers < 0 || heads < 1) {
    throw std::invalid_argument("model config: hidden/layers/heads out of range");
  }
  if (heads * head_dim() != hidden) {
    throw std::invalid_argument("model config: heads * head_size != hidden (" +
                                std::to_string(heads) + " * " + std::to_string(head_dim()) +
                                " != " + std::to_string(hidden) + ")");
  }
  if (max_words < 4) throw std::invalid_argument("model config: max_words must be >= 4");
  if (word_vocab < 5 || entity_vocab < 3) {
    throw std::invalid_argument("model config: vocabulary sizes too small");
  }
  if (dropout < 0.0f || dropout >= 1.0f) {
    throw std::invalid_argument("model config: dropout outside [0,1)");
  }
}

void fill_truncated_normal(Tensor& t, float stddev, std::mt19937_64& rng) {
  std::normal_distribution<float> dist(0.0f, stddev);
  float* p = t.data();
  for (int64_t i = 0; i < t.size(); ++i) {
    float v = dist(rng);
    while (std::abs(v) > 2.0f * stddev) v = dist(rng);
    p[i] = v;
  }
}

ModelParams ModelParams::init(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  const int h = cfg.hidden;
  ModelParams p;
  p.config = cfg;
  // pin the derived fields so configs compare and serialize canonically
  p.config.head_size = cfg.head_dim();
  p.config.ffn_inner = cfg.ffn();
  auto weight = [&](std::vector<int> shape) {
    Tensor t = Tensor::zeros(std::move(shape));
    fill_truncated_normal(t, 0.02f, rng);
    return t;
  };
  p.word_emb = weight({cfg.word_vocab, h});
  p.entity_emb = weight({cfg.entity_vocab, h});
  p.type_word = weight({h});
  p.type_entity = weight({h});
  p.word_pos = weight({cfg.max_words, h});
  p.entity_pos = weight({cfg.max_words, h});
  p.layers.resize(size_t(cfg.layers));
  for (LayerParams& l : p.layers) {
    l.wq = weight({h, h});
    l.bq = Tensor::zeros({h});
    l.wk = weight({h, h});
    l.bk = Tensor::zeros({h});
    l.wv = weight({h, h});
    l.bv = Tensor::zeros({h});
    l.wo = weight({h, h});
    l.bo = Tensor::zeros({h});
    l.ln1_gain = Tensor::full({h}, 1.0f);
    l.ln1_bias = Tensor::zeros({h});
    l.ff1_w = weight({h, cfg.ffn()});
    l.ff1_b = Tensor::zeros({cfg.ffn()});
    l.ff2_w = weight({cfg.ffn(), h});
    l.ff2_b = Tensor::zeros({h});
    l.ln2_gain = Tensor::full({h}, 1.0f);
    l.ln2_bias = Tensor::zeros({h});
  }
  p.mep_w = weight({h, h});
  p.mep_b = Tensor::zeros({h});
  p.mep_ln_gain = Tensor::full({h}, 1.0f);
  p.mep_ln_bias = Tensor::zeros({h});
  p.out_bias = Tensor::zeros({cfg.entity_vocab});
  p.set_trainable(true);
  return p;
}

std::vector<ParamSlot> ModelParams::named() const {
  std::vector<ParamSlot> slots;
  auto add = [&slots](std::string name, Tensor t, bool decay, std::string group) {
    slots.push_back({std::move(name), std::move(t), decay, std::move(group)});
  };
  add("word_emb", word_emb, true, "word_embeddings");
  add("type_word", type_word, true, "word_embeddings");
  add("word_pos", word_pos, true, "word_embeddings");
  add("entity_emb", entity_emb, true, "entity_embeddings");
  add("type_entity", type_entity, true, "entity_embeddings");
  add("entity_pos", entity_pos, true, "entity_embeddings");
  for (size_t i = 0; i < layers.size(); ++i) {
    const LayerParams& l = layers[i];
    std::string pre = "layer" + std::to_string(i) + ".";
    add(pre + "wq", l.wq, true, "encoder");
    add(pre + "bq", l.bq, false, "encoder");
    add(pre + "wk", l.wk, true, "encoder");
    add(pre + "bk", l.bk, false, "encoder");
    add(pre + "wv", l.wv, true, "encoder");
    add(pre + "bv", l.bv, false, "encoder");
    add(pre + "wo", l.wo, true, "encoder");
    add(pre + "bo", l.bo, false, "encoder");
    add(pre + "ln1_gain", l.ln1_gain, false, "encoder");
    add(pre + "ln1_bias", l.ln1_bias, false, "encoder");
    add(pre + "ff1_w", l.ff1_w, true, "encoder");
    add(pre + "ff1_b", l.ff1_b, false, "encoder");
    add(pre + "ff2_w", l.ff2_w, true, "encoder");
    add(pre + "ff2_b", l.ff2_b, false, "encoder");
    add(pre + "ln2_gain", l.ln2_gain, false, "encoder");
    add(pre + "ln2_bias", l.ln2_bias, false, "encoder");
  }
  add("mep.w", mep_w, true, "mep_head");
  add("mep.b", mep_b, false, "mep_head");
  add("mep.ln_gain", mep_ln_gain, false, "mep_head");
  add("mep.ln_bias", mep_ln_bias, false, "mep_head");
  // the output bias pairs with the tied entity embeddings, not with the head
  add("out_bias", out_bias, false, "entity_embeddings");
  return slots;
}

Tensor ModelParams::find(const std::string& name) const {
  for (ParamSlot& s : named()) {
    if (s.name == name) return s.tensor;
  }
  throw std::invalid_argument("no parameter named '" + name + "'");
}

void ModelParams::set_trainable(bool value) {
  for (ParamSlot& s : named()) s.tensor.set_requires_grad(value);
}

void ModelParams::freeze_groups(const std::vector<std::string>& groups) {
  std::unordered_set<std::string> frozen(groups.begin(), groups.end());
  auto slots = named();
  for (const std::string& g : groups) {
    bool known = std::any_of(slots.begin(), slots.end(),
                             [&](const ParamSlot& s) { return s.group == g; });
    if (!known) throw std::invalid_argument("unknown parameter group '" + g + "'");
  }
  for (ParamSlot& s : slots) s.tensor.set_requires_grad(!frozen.count(s.group));
}

void ModelParams::freeze_names(const std::vector<std::string>& names) {
  std::unordered_set<std::string> frozen(names.begin(), names.end());
  auto slots = named();
  for (const std::string& n : names) {
    bool known = std::any_of(slots.begin(), slots.end(),
                             [&](const ParamSlot& s) { return s.name == n; });
    if (!known) throw std::invalid_argument("no parameter named '" + n + "'");
  }
  for (ParamSlot& s : slots) s.tensor.set_requires_grad(!frozen.count(s.name));
}

}  // namespace edkit
