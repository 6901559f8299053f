#include "support/reference_model.hpp"

#include <cmath>

namespace edkit::test::ref {

namespace {

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

std::vector<double> layer_norm(const std::vector<double>& x, const Tensor& gain,
                               const Tensor& bias) {
  const size_t d = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= double(d);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= double(d);
  double inv = 1.0 / std::sqrt(var + 1e-5);
  std::vector<double> y(d);
  for (size_t j = 0; j < d; ++j) {
    y[j] = (x[j] - mean) * inv * double(gain.data()[j]) + double(bias.data()[j]);
  }
  return y;
}

std::vector<double> softmax(const std::vector<double>& x) {
  double mx = x[0];
  for (double v : x) mx = std::max(mx, v);
  double sum = 0.0;
  std::vector<double> y(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - mx);
    sum += y[i];
  }
  for (double& v : y) v /= sum;
  return y;
}

// y = x W + b with W stored row-major [in, out]
std::vector<double> affine(const std::vector<double>& x, const Tensor& w, const Tensor& b) {
  const int in = w.dim(0), out = w.dim(1);
  std::vector<double> y(size_t(out), 0.0);
  for (int j = 0; j < out; ++j) {
    double acc = b.size() ? double(b.data()[j]) : 0.0;
    for (int i = 0; i < in; ++i) acc += x[size_t(i)] * double(w.data()[i * out + j]);
    y[size_t(j)] = acc;
  }
  return y;
}

}  // namespace

Mat encode(const TokenSequence& seq, const ModelParams& params) {
  const ModelConfig& cfg = params.config;
  const int h = cfg.hidden;
  const int n_words = seq.n_words();
  const int n_tokens = seq.length();

  Mat x(size_t(n_tokens), std::vector<double>(size_t(h), 0.0));
  for (int i = 0; i < n_words; ++i) {
    int id = seq.word_ids[size_t(i)];
    for (int j = 0; j < h; ++j) {
      x[size_t(i)][size_t(j)] = double(params.word_emb.data()[id * h + j]) +
                                double(params.type_word.data()[j]) +
                                double(params.word_pos.data()[i * h + j]);
    }
  }
  for (int e = 0; e < seq.n_entities(); ++e) {
    int id = seq.entity_ids[size_t(e)];
    const auto& positions = seq.entity_positions[size_t(e)];
    for (int j = 0; j < h; ++j) {
      double pos = 0.0;
      for (int p : positions) pos += double(params.entity_pos.data()[p * h + j]);
      pos /= double(positions.size());
      x[size_t(n_words + e)][size_t(j)] = double(params.entity_emb.data()[id * h + j]) +
                                          double(params.type_entity.data()[j]) + pos;
    }
  }

  const int dh = cfg.head_dim();
  for (const LayerParams& l : params.layers) {
    Mat q(x.size()), k(x.size()), v(x.size());
    for (size_t t = 0; t < x.size(); ++t) {
      q[t] = affine(x[t], l.wq, l.bq);
      k[t] = affine(x[t], l.wk, l.bk);
      v[t] = affine(x[t], l.wv, l.bv);
    }
    Mat attn_out(x.size(), std::vector<double>(size_t(h), 0.0));
    for (int head = 0; head < cfg.heads; ++head) {
      const int off = head * dh;
      for (size_t t = 0; t < x.size(); ++t) {
        std::vector<double> scores(x.size(), 0.0);
        for (size_t u = 0; u < x.size(); ++u) {
          double dot = 0.0;
          for (int j = 0; j < dh; ++j) dot += q[t][size_t(off + j)] * k[u][size_t(off + j)];
          scores[u] = dot / std::sqrt(double(dh));
        }
        std::vector<double> probs = softmax(scores);
        for (size_t u = 0; u < x.size(); ++u) {
          for (int j = 0; j < dh; ++j) {
            attn_out[t][size_t(off + j)] += probs[u] * v[u][size_t(off + j)];
          }
        }
      }
    }
    for (size_t t = 0; t < x.size(); ++t) {
      std::vector<double> a = affine(attn_out[t], l.wo, l.bo);
      for (int j = 0; j < h; ++j) a[size_t(j)] += x[t][size_t(j)];
      x[t] = layer_norm(a, l.ln1_gain, l.ln1_bias);
      std::vector<double> f = affine(x[t], l.ff1_w, l.ff1_b);
      for (double& val : f) val = gelu(val);
      f = affine(f, l.ff2_w, l.ff2_b);
      for (int j = 0; j < h; ++j) f[size_t(j)] += x[t][size_t(j)];
      x[t] = layer_norm(f, l.ln2_gain, l.ln2_bias);
    }
  }
  return x;
}

std::vector<double> mep_transform(const std::vector<double>& h, const ModelParams& params) {
  std::vector<double> m = affine(h, params.mep_w, params.mep_b);
  for (double& v : m) v = gelu(v);
  return layer_norm(m, params.mep_ln_gain, params.mep_ln_bias);
}

std::vector<double> mep_probs(const std::vector<double>& m, const ModelParams& params) {
  const int ve = params.config.entity_vocab;
  const int h = params.config.hidden;
  std::vector<double> logits(size_t(ve), 0.0);
  for (int e = 0; e < ve; ++e) {
    double acc = double(params.out_bias.data()[e]);
    for (int j = 0; j < h; ++j) acc += m[size_t(j)] * double(params.entity_emb.data()[e * h + j]);
    logits[size_t(e)] = acc;
  }
  return softmax(logits);
}

std::vector<double> ed_probs(const std::vector<double>& m, const std::vector<int>& candidates,
                             const ModelParams& params) {
  const int h = params.config.hidden;
  std::vector<double> logits(candidates.size(), 0.0);
  for (size_t c = 0; c < candidates.size(); ++c) {
    double acc = double(params.out_bias.data()[candidates[c]]);
    for (int j = 0; j < h; ++j) {
      acc += m[size_t(j)] * double(params.entity_emb.data()[candidates[c] * h + j]);
    }
    logits[c] = acc;
  }
  return softmax(logits);
}

double mep_loss(const Document& piece, const std::vector<int>& assignments,
                const std::vector<std::pair<int, int>>& masked, const ModelParams& params,
                const WordVocab& words) {
  TokenSequence seq = build_sequence(piece, assignments, words, params.config);
  Mat enc = encode(seq, params);
  double total = 0.0;
  for (auto [mention, target] : masked) {
    std::vector<double> m = mep_transform(enc[size_t(seq.entity_token_index(mention))], params);
    std::vector<double> probs = mep_probs(m, params);
    total += -std::log(probs[size_t(target)]);
  }
  return total / double(masked.size());
}

}  // namespace edkit::test::ref
