#pragma once

#include <string>
#include <utility>
#include <vector>

#include "edkit/corpus.hpp"
#include "edkit/heads.hpp"
#include "edkit/model.hpp"
#include "edkit/vocab.hpp"

namespace edkit {

// Assignment sentinel for mentions that cannot be resolved (no candidates).
constexpr int kUnresolved = -1;

enum class DecodeOrder { Local, Natural, Confidence };

DecodeOrder parse_decode_order(const std::string& name);
std::string decode_order_name(DecodeOrder order);

struct StepRecord {
  int step = 0;     // 1-based
  int mention = 0;  // mention index within the piece
  int entity = kUnresolved;
  double confidence = 0.0;
};

// Mutable state of the sequential decoder: one assignment per mention plus
// the resolution log. Exactly one mention is resolved per step and never
// revisited.
struct DecodingState {
  std::vector<int> assignments;  // entity id, or kUnresolved for sentinels
  std::vector<bool> resolved;
  std::vector<StepRecord> steps;
};

struct LocalResult {
  std::vector<int> assignments;
  std::vector<PredictionDistribution> distributions;  // empty probs for no-candidate mentions
};

// One forward pass with every mention masked; each mention takes the argmax
// of its candidate softmax.
LocalResult disambiguate_local(const Document& piece, const ModelParams& params,
                               const WordVocab& words, const EntityVocab& entities);

// Per-step predictions over unresolved mentions, recorded for verification.
struct StepTrace {
  std::vector<std::vector<std::pair<int, PredictionDistribution>>> per_step;
};

// Sequential global decoding: N steps, each re-encoding the sequence with
// the assignments made so far and resolving one more mention. Confidence
// order picks the unresolved mention with the highest candidate probability
// (ties: smallest mention index); natural order walks mentions in span
// order. Mentions without candidates are resolved last, to the sentinel.
// With feedback disabled every pass keeps all entity tokens masked.
DecodingState disambiguate_global(const Document& piece, const ModelParams& params,
                                  const WordVocab& words, const EntityVocab& entities,
                                  DecodeOrder order, bool feedback = true,
                                  StepTrace* trace = nullptr);

// Step log plus the piece each step belongs to, with mention indices mapped
// back to the source document.
struct PieceStep {
  int piece = 0;
  StepRecord record;
};

struct DocAssignments {
  std::vector<int> entities;        // per source mention; kUnresolved sentinel allowed
  std::vector<double> confidences;  // confidence at resolution time
  std::vector<PieceStep> steps;     // empty for local decoding
};

// Splits the document, decodes each piece independently, and merges the
// per-piece assignments back to the original mention order.
DocAssignments decode_document(const Document& full, const ModelParams& params,
                               const WordVocab& words, const EntityVocab& entities,
                               DecodeOrder order, int max_words_split);

}  // namespace edkit
