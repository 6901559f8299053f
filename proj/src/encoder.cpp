#include "edkit/encoder.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace edkit {

TokenSequence build_sequence(const Document& piece, const std::vector<int>& assignments,
                             const WordVocab& words, const ModelConfig& cfg) {
  if (assignments.size() != piece.mentions.size()) {
    throw std::invalid_argument("build_sequence: " + std::to_string(assignments.size()) +
                                " assignments for " + std::to_string(piece.mentions.size()) +
                                " mentions");
  }
  TokenSequence seq;
  seq.word_ids.reserve(piece.words.size() + 2);
  seq.word_ids.push_back(words.cls_id());
  for (const std::string& w : piece.words) seq.word_ids.push_back(words.id(w));
  seq.word_ids.push_back(words.sep_id());
  if (seq.n_words() > cfg.max_words) {
    throw std::runtime_error("doc '" + piece.id + "': sequence of " +
                             std::to_string(seq.n_words()) + " words exceeds max_words " +
                             std::to_string(cfg.max_words));
  }
  for (size_t i = 0; i < piece.mentions.size(); ++i) {
    const Mention& m = piece.mentions[i];
    int id = assignments[i];
    if (id < 0 || id >= cfg.entity_vocab) {
      throw std::out_of_range("build_sequence: entity id " + std::to_string(id) +
                              " outside vocabulary of " + std::to_string(cfg.entity_vocab));
    }
    std::vector<int> positions(size_t(m.length()));
    std::iota(positions.begin(), positions.end(), m.start + 1);  // +1 for [CLS]
    seq.entity_ids.push_back(id);
    seq.entity_positions.push_back(std::move(positions));
  }
  return seq;
}

Tensor input_embeddings(Tape& tape, const TokenSequence& seq, const ModelParams& params) {
  std::vector<int> word_positions(size_t(seq.n_words()));
  std::iota(word_positions.begin(), word_positions.end(), 0);
  Tensor w = tape.gather_rows(params.word_emb, seq.word_ids);
  w = tape.add_row_bias(w, params.type_word);
  w = tape.add(w, tape.gather_rows(params.word_pos, word_positions));
  if (seq.n_entities() == 0) return w;
  Tensor e = tape.gather_rows(params.entity_emb, seq.entity_ids);
  e = tape.add_row_bias(e, params.type_entity);
  e = tape.add(e, tape.gather_mean_rows(params.entity_pos, seq.entity_positions));
  return tape.concat_rows({w, e});
}

namespace {

Tensor self_attention(Tape& tape, const Tensor& x, const LayerParams& l,
                      const ModelConfig& cfg, std::mt19937_64* rng, bool train,
                      EncodeTrace* trace) {
  const int dh = cfg.head_dim();
  Tensor q = tape.add_row_bias(tape.matmul(x, l.wq), l.bq);
  Tensor k = tape.add_row_bias(tape.matmul(x, l.wk), l.bk);
  Tensor v = tape.add_row_bias(tape.matmul(x, l.wv), l.bv);
  const float inv_sqrt_dh = 1.0f / std::sqrt(float(dh));
  std::vector<Tensor> heads;
  heads.reserve(size_t(cfg.heads));
  for (int h = 0; h < cfg.heads; ++h) {
    Tensor qh = tape.slice_cols(q, h * dh, dh);
    Tensor kh = tape.slice_cols(k, h * dh, dh);
    Tensor vh = tape.slice_cols(v, h * dh, dh);
    Tensor scores = tape.scale(tape.matmul_nt(qh, kh), inv_sqrt_dh);
    Tensor probs = tape.softmax_rows(scores);
    if (trace) trace->attention.push_back(probs);
    if (rng) probs = tape.dropout(probs, cfg.dropout, *rng, train);
    heads.push_back(tape.matmul(probs, vh));
  }
  Tensor merged = cfg.heads == 1 ? heads[0] : tape.concat_cols(heads);
  return tape.add_row_bias(tape.matmul(merged, l.wo), l.bo);
}

}  // namespace

Tensor encode(Tape& tape, const TokenSequence& seq, const ModelParams& params,
              std::mt19937_64* dropout_rng, bool train, EncodeTrace* trace) {
  const ModelConfig& cfg = params.config;
  Tensor x = input_embeddings(tape, seq, params);
  for (const LayerParams& l : params.layers) {
    Tensor attn = self_attention(tape, x, l, cfg, dropout_rng, train, trace);
    if (dropout_rng) attn = tape.dropout(attn, cfg.dropout, *dropout_rng, train);
    x = tape.layer_norm_rows(tape.add(x, attn), l.ln1_gain, l.ln1_bias);
    Tensor ff = tape.add_row_bias(tape.matmul(x, l.ff1_w), l.ff1_b);
    ff = tape.gelu(ff);
    ff = tape.add_row_bias(tape.matmul(ff, l.ff2_w), l.ff2_b);
    if (dropout_rng) ff = tape.dropout(ff, cfg.dropout, *dropout_rng, train);
    x = tape.layer_norm_rows(tape.add(x, ff), l.ln2_gain, l.ln2_bias);
  }
  return x;
}

}  // namespace edkit
