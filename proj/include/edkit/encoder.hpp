#pragma once

#include <random>
#include <vector>

#include "edkit/corpus.hpp"
#include "edkit/model.hpp"
#include "edkit/tensor.hpp"
#include "edkit/vocab.hpp"

namespace edkit {

// The assembled word+entity input: words (wrapped in [CLS]/[SEP]) followed by
// one entity token per mention. Entity order carries no information — an
// entity token is located purely by the word positions of its mention.
struct TokenSequence {
  std::vector<int> word_ids;                       // [CLS] w1 ... wn [SEP]
  std::vector<int> entity_ids;                     // entity id or [MASK] id
  std::vector<std::vector<int>> entity_positions;  // word positions, [CLS]-shifted

  int n_words() const { return static_cast<int>(word_ids.size()); }
  int n_entities() const { return static_cast<int>(entity_ids.size()); }
  int length() const { return n_words() + n_entities(); }
  int entity_token_index(int mention) const { return n_words() + mention; }
};

// One entity assignment per mention (its entity id, or the [MASK] entity id).
TokenSequence build_sequence(const Document& piece, const std::vector<int>& assignments,
                             const WordVocab& words, const ModelConfig& cfg);

// Token, type, and position embeddings summed per token; multi-word entities
// average the position embeddings of their span.
Tensor input_embeddings(Tape& tape, const TokenSequence& seq, const ModelParams& params);

// Per-layer, per-head attention probabilities, recorded when requested.
struct EncodeTrace {
  std::vector<Tensor> attention;
};

// Post-layer-norm transformer stack over the full sequence; words and
// entities attend to each other without masking. Returns one row per token.
Tensor encode(Tape& tape, const TokenSequence& seq, const ModelParams& params,
              std::mt19937_64* dropout_rng = nullptr, bool train = false,
              EncodeTrace* trace = nullptr);

}  // namespace edkit
