#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "edkit/encoder.hpp"
#include "support/reference_model.hpp"
#include "support/test_util.hpp"
#include "support/toy_data.hpp"

using namespace edkit;
using test::close;
using test::ToyVocabs;

namespace {

ModelConfig tiny_config(const ToyVocabs& v, int layers = 1, int hidden = 8, int heads = 2) {
  ModelConfig cfg;
  cfg.hidden = hidden;
  cfg.layers = layers;
  cfg.heads = heads;
  cfg.max_words = 16;
  cfg.word_vocab = v.words.size();
  cfg.entity_vocab = v.entities.size();
  cfg.dropout = 0.0f;
  return cfg;
}

Document abc_doc() {
  Document d;
  d.id = "abc";
  d.words = {"w0", "w1", "w2"};
  d.mentions = {{1, 2, {{2, 1.0f}}, 2}};
  return d;
}

}  // namespace

TEST_CASE("build_sequence wraps words and shifts entity positions past [CLS]") {
  ToyVocabs v = test::make_toy_vocabs(8, 4);
  ModelConfig cfg = tiny_config(v);
  Document d = abc_doc();
  TokenSequence seq = build_sequence(d, {v.entities.mask_id()}, v.words, cfg);
  CHECK(seq.word_ids == std::vector<int>{v.words.cls_id(), v.words.id("w0"), v.words.id("w1"),
                                         v.words.id("w2"), v.words.sep_id()});
  REQUIRE(seq.n_entities() == 1);
  CHECK(seq.entity_ids[0] == v.entities.mask_id());
  CHECK(seq.entity_positions[0] == std::vector<int>{2});
  CHECK(seq.entity_token_index(0) == 5);
}

TEST_CASE("build_sequence with no mentions is words only") {
  ToyVocabs v = test::make_toy_vocabs(8, 4);
  Document d;
  d.id = "plain";
  d.words = {"w0", "w1"};
  TokenSequence seq = build_sequence(d, {}, v.words, tiny_config(v));
  CHECK(seq.n_entities() == 0);
  CHECK(seq.length() == 4);
}

TEST_CASE("a multi-word mention lists every shifted position") {
  ToyVocabs v = test::make_toy_vocabs(8, 4);
  Document d;
  d.id = "multi";
  d.words = {"w0", "w1", "w2", "w3"};
  d.mentions = {{1, 3, {}, -1}};
  TokenSequence seq = build_sequence(d, {2}, v.words, tiny_config(v));
  CHECK(seq.entity_positions[0] == std::vector<int>{2, 3});
}

TEST_CASE("build_sequence rejects oversize docs and bad entity ids") {
  ToyVocabs v = test::make_toy_vocabs(8, 4);
  ModelConfig cfg = tiny_config(v);
  Document big;
  big.id = "big";
  for (int i = 0; i < cfg.max_words; ++i) big.words.push_back("w0");
  CHECK_THROWS_WITH_AS(build_sequence(big, {}, v.words, cfg), doctest::Contains("max_words"),
                       std::runtime_error);
  CHECK_THROWS_AS(build_sequence(abc_doc(), {cfg.entity_vocab}, v.words, cfg),
                  std::out_of_range);
}

TEST_CASE("input embeddings sum token, type, and position parts") {
  ToyVocabs v = test::make_toy_vocabs(8, 4);
  ModelConfig cfg = tiny_config(v);
  ModelParams p = ModelParams::init(cfg, 42);
  const int h = cfg.hidden;

  Document d;
  d.id = "emb";
  d.words = {"w0", "w1", "w2", "w3"};
  d.mentions = {{0, 1, {}, -1}, {1, 3, {}, -1}};  // single- and multi-word
  TokenSequence seq = build_sequence(d, {2, 3}, v.words, cfg);
  Tape tape(false);
  Tensor x = input_embeddings(tape, seq, p);
  REQUIRE(x.shape() == std::vector<int>{8, h});

  // word [CLS] at position 0
  for (int j = 0; j < h; ++j) {
    float expect = p.word_emb.at(v.words.cls_id(), j) + p.type_word.at(j) + p.word_pos.at(0, j);
    CHECK(x.at(0, j) == expect);
  }
  // single-position entity: B[id] + C_entity + E[1]
  for (int j = 0; j < h; ++j) {
    float expect = p.entity_emb.at(2, j) + p.type_entity.at(j) + p.entity_pos.at(1, j);
    CHECK(close(x.at(6, j), expect, 1e-6));
  }
  // entity over word positions {2,3}: averaged position embedding
  for (int j = 0; j < h; ++j) {
    float mean = 0.5f * (p.entity_pos.at(2, j) + p.entity_pos.at(3, j));
    float expect = p.entity_emb.at(3, j) + p.type_entity.at(j) + mean;
    CHECK(close(x.at(7, j), expect, 1e-6));
  }
}

TEST_CASE("a zero-layer stack returns the input embeddings") {
  ToyVocabs v = test::make_toy_vocabs(8, 4);
  ModelConfig cfg = tiny_config(v, 0);
  ModelParams p = ModelParams::init(cfg, 1);
  TokenSequence seq = build_sequence(abc_doc(), {2}, v.words, cfg);
  Tape t1(false), t2(false);
  Tensor enc = encode(t1, seq, p);
  Tensor emb = input_embeddings(t2, seq, p);
  CHECK(enc.to_vector() == emb.to_vector());
}

TEST_CASE("encoding is deterministic with dropout disabled") {
  ToyVocabs v = test::make_toy_vocabs(8, 4);
  ModelConfig cfg = tiny_config(v, 2);
  ModelParams p = ModelParams::init(cfg, 3);
  TokenSequence seq = build_sequence(abc_doc(), {2}, v.words, cfg);
  Tape t1(false), t2(false);
  std::mt19937_64 r1(1), r2(99);  // different streams must not matter in eval mode
  Tensor a = encode(t1, seq, p, &r1, false);
  Tensor b = encode(t2, seq, p, &r2, false);
  CHECK(a.to_vector() == b.to_vector());
}

TEST_CASE("encoder output matches the straight-line double-precision reference") {
  ToyVocabs v = test::make_toy_vocabs(12, 6);
  ModelConfig cfg = tiny_config(v, 2, 16, 4);
  ModelParams p = ModelParams::init(cfg, 7);
  std::mt19937_64 rng(5);
  test::RandomDocOptions opt;
  opt.word_pool = 12;
  opt.entity_pool = 6;
  Document d = test::random_document(rng, v, opt, "ref");
  std::vector<int> assignments(d.mentions.size(), v.entities.mask_id());
  TokenSequence seq = build_sequence(d, assignments, v.words, cfg);
  Tape tape(false);
  Tensor enc = encode(tape, seq, p);
  auto ref = test::ref::encode(seq, p);
  for (int t = 0; t < seq.length(); ++t) {
    for (int j = 0; j < cfg.hidden; ++j) {
      CHECK(close(enc.at(t, j), ref[size_t(t)][size_t(j)], 1e-5));
    }
  }
}

TEST_CASE("entity token order is irrelevant given fixed position lists") {
  ToyVocabs v = test::make_toy_vocabs(12, 6);
  ModelConfig cfg = tiny_config(v, 2, 16, 4);
  ModelParams p = ModelParams::init(cfg, 11);
  Document d;
  d.id = "perm";
  d.words = {"w1", "w2", "w3", "w4", "w5"};
  d.mentions = {{0, 2, {}, -1}, {3, 4, {}, -1}};
  TokenSequence seq = build_sequence(d, {2, 4}, v.words, cfg);

  TokenSequence swapped = seq;
  std::swap(swapped.entity_ids[0], swapped.entity_ids[1]);
  std::swap(swapped.entity_positions[0], swapped.entity_positions[1]);

  Tape t1(false), t2(false);
  Tensor a = encode(t1, seq, p);
  Tensor b = encode(t2, swapped, p);
  const int nw = seq.n_words();
  for (int t = 0; t < nw; ++t) {
    for (int j = 0; j < cfg.hidden; ++j) CHECK(close(a.at(t, j), b.at(t, j), 1e-5));
  }
  for (int j = 0; j < cfg.hidden; ++j) {
    CHECK(close(a.at(nw + 0, j), b.at(nw + 1, j), 1e-5));
    CHECK(close(a.at(nw + 1, j), b.at(nw + 0, j), 1e-5));
  }
}

TEST_CASE("attention rows sum to one for every layer and head") {
  ToyVocabs v = test::make_toy_vocabs(12, 6);
  ModelConfig cfg = tiny_config(v, 2, 16, 4);
  ModelParams p = ModelParams::init(cfg, 13);
  TokenSequence seq = build_sequence(abc_doc(), {2}, v.words, cfg);
  Tape tape(false);
  EncodeTrace trace;
  encode(tape, seq, p, nullptr, false, &trace);
  REQUIRE(trace.attention.size() == size_t(cfg.layers * cfg.heads));
  for (const Tensor& probs : trace.attention) {
    REQUIRE(probs.shape() == std::vector<int>{seq.length(), seq.length()});
    for (int i = 0; i < seq.length(); ++i) {
      double sum = 0.0;
      for (int j = 0; j < seq.length(); ++j) sum += probs.at(i, j);
      CHECK(close(sum, 1.0, 1e-5));
    }
  }
}

TEST_CASE("entity tokens influence word outputs through attention") {
  ToyVocabs v = test::make_toy_vocabs(12, 6);
  ModelConfig cfg = tiny_config(v, 1, 16, 2);
  ModelParams p = ModelParams::init(cfg, 17);
  TokenSequence seq = build_sequence(abc_doc(), {2}, v.words, cfg);
  Tape t1(false);
  Tensor before = encode(t1, seq, p);
  // zero the assigned entity's embedding row
  for (int j = 0; j < cfg.hidden; ++j) p.entity_emb.at(2, j) = 0.0f;
  Tape t2(false);
  Tensor after = encode(t2, seq, p);
  bool any_word_changed = false;
  for (int t = 0; t < seq.n_words(); ++t) {
    for (int j = 0; j < cfg.hidden; ++j) {
      if (before.at(t, j) != after.at(t, j)) any_word_changed = true;
    }
  }
  CHECK(any_word_changed);
}

TEST_CASE("dropout in training mode perturbs the encoding but stays seeded") {
  ToyVocabs v = test::make_toy_vocabs(8, 4);
  ModelConfig cfg = tiny_config(v, 1);
  cfg.dropout = 0.3f;
  ModelParams p = ModelParams::init(cfg, 19);
  TokenSequence seq = build_sequence(abc_doc(), {2}, v.words, cfg);
  Tape t1, t2, t3;
  std::mt19937_64 r1(5), r2(5), r3(6);
  Tensor a = encode(t1, seq, p, &r1, true);
  Tensor b = encode(t2, seq, p, &r2, true);
  Tensor c = encode(t3, seq, p, &r3, true);
  CHECK(a.to_vector() == b.to_vector());
  CHECK(a.to_vector() != c.to_vector());
}
