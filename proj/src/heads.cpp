#include "edkit/heads.hpp"

#include <stdexcept>

namespace edkit {

void PredictionDistribution::finalize() {
  argmax_entity = -1;
  confidence = 0.0f;
  for (size_t i = 0; i < probs.size(); ++i) {
    int id = scope == Scope::FullVocab ? static_cast<int>(i) : entity_ids[i];
    if (argmax_entity < 0 || probs[i] > confidence ||
        (probs[i] == confidence && id < argmax_entity)) {
      confidence = probs[i];
      argmax_entity = id;
    }
  }
}

Tensor mep_transform(Tape& tape, const Tensor& h, const ModelParams& params) {
  Tensor m = tape.add_row_bias(tape.matmul(h, params.mep_w), params.mep_b);
  m = tape.gelu(m);
  return tape.layer_norm_rows(m, params.mep_ln_gain, params.mep_ln_bias);
}

Tensor mep_logits(Tape& tape, const Tensor& m, const ModelParams& params) {
  return tape.add_row_bias(tape.matmul_nt(m, params.entity_emb), params.out_bias);
}

Tensor ed_logits(Tape& tape, const Tensor& m_row, const std::vector<int>& candidates,
                 const ModelParams& params) {
  if (candidates.empty()) {
    throw std::invalid_argument("ed_logits: mention has no candidates");
  }
  Tensor sub_emb = tape.gather_rows(params.entity_emb, candidates);
  Tensor sub_bias = tape.gather_rows(params.out_bias, candidates);
  return tape.add_row_bias(tape.matmul_nt(m_row, sub_emb), sub_bias);
}

PredictionDistribution mep_predict(const Tensor& m_row, const ModelParams& params) {
  Tape tape(false);
  Tensor probs = tape.softmax_rows(mep_logits(tape, m_row, params));
  PredictionDistribution dist;
  dist.scope = PredictionDistribution::Scope::FullVocab;
  dist.probs = probs.to_vector();
  dist.finalize();
  return dist;
}

PredictionDistribution ed_predict(const Tensor& m_row, const Mention& mention,
                                  const ModelParams& params) {
  std::vector<int> ids;
  ids.reserve(mention.candidates.size());
  for (const Candidate& c : mention.candidates) ids.push_back(c.entity);
  Tape tape(false);
  Tensor probs = tape.softmax_rows(ed_logits(tape, m_row, ids, params));
  PredictionDistribution dist;
  dist.scope = PredictionDistribution::Scope::Candidates;
  dist.entity_ids = std::move(ids);
  dist.probs = probs.to_vector();
  dist.finalize();
  return dist;
}

}  // namespace edkit
