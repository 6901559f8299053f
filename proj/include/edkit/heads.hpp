#pragma once

#include <vector>

#include "edkit/corpus.hpp"
#include "edkit/model.hpp"
#include "edkit/tensor.hpp"

namespace edkit {

// A probability distribution over entities: either the full vocabulary or a
// mention's candidate set.
struct PredictionDistribution {
  enum class Scope { FullVocab, Candidates };
  Scope scope = Scope::FullVocab;
  std::vector<int> entity_ids;  // candidate ids; empty for the full vocabulary
  std::vector<float> probs;
  int argmax_entity = -1;
  float confidence = 0.0f;  // max probability

  void finalize();  // fills argmax/confidence (ties: smaller entity id)
};

// m = layer_norm(gelu(W h + b)) applied row-wise; h is [M,H].
Tensor mep_transform(Tape& tape, const Tensor& h, const ModelParams& params);

// Full-vocabulary logits m Bᵀ + b_o, sharing the entity embedding matrix as
// the output projection; m is [M,H], result [M,V_e].
Tensor mep_logits(Tape& tape, const Tensor& m, const ModelParams& params);

// Candidate-restricted logits for one mention; m_row is [1,H], result [1,K].
Tensor ed_logits(Tape& tape, const Tensor& m_row, const std::vector<int>& candidates,
                 const ModelParams& params);

// Softmax over the whole entity vocabulary for one transformed embedding.
PredictionDistribution mep_predict(const Tensor& m_row, const ModelParams& params);

// Softmax over the mention's candidates. The mention must have candidates.
PredictionDistribution ed_predict(const Tensor& m_row, const Mention& mention,
                                  const ModelParams& params);

}  // namespace edkit
