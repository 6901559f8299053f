#pragma once

// Shared builders for desk-scale fixtures: random annotated documents, a
// memorizable pretraining corpus, and the hand-built two-mention scenario
// where sequential decoding corrects the local model.

#include <random>
#include <string>
#include <vector>

#include "edkit/corpus.hpp"
#include "edkit/model.hpp"
#include "edkit/vocab.hpp"

namespace edkit::test {

struct ToyVocabs {
  WordVocab words;
  EntityVocab entities;
};

// Words "w0..w{n_words-1}", entities "e0..e{n_entities-1}" (plus reserved).
ToyVocabs make_toy_vocabs(int n_words, int n_entities);

struct RandomDocOptions {
  int min_words = 6;
  int max_words = 12;
  int max_mentions = 4;
  int max_span = 2;
  int max_candidates = 4;
  double empty_candidate_prob = 0.0;
  double no_gold_prob = 0.0;
  bool force_gold_into_candidates = true;
  int word_pool = 40;
  int entity_pool = 20;  // drawn as "e0".."e{pool-1}" ids
};

Document random_document(std::mt19937_64& rng, const ToyVocabs& vocabs,
                         const RandomDocOptions& opt, const std::string& id);

// Documents whose mention words determine their entities, so masked entity
// prediction can reach perfect recovery by memorization.
std::vector<Document> make_overfit_corpus(const ToyVocabs& vocabs, int n_docs,
                                          int mentions_per_doc, std::mt19937_64& rng);

// Table-driven toy model with two mentions: mention 0 is unambiguous, and
// mention 1 flips to its correct entity only once mention 0's entity token
// is fed back. Attention is uniform (zero query/key weights) and the value
// path is the identity, so resolving E1 injects its embedding into every
// token; E1's embedding is aligned with the correct candidate Y while the
// output bias slightly favors the wrong candidate X.
struct FlipScenario {
  ModelParams params;
  WordVocab words;
  EntityVocab entities;
  Document doc;
  int e1 = -1, x = -1, y = -1;  // entity ids
};

FlipScenario build_flip_scenario();

}  // namespace edkit::test
