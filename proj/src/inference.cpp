#include "edkit/inference.hpp"

#include <stdexcept>

#include "edkit/encoder.hpp"

namespace edkit {

DecodeOrder parse_decode_order(const std::string& name) {
  if (name == "local") return DecodeOrder::Local;
  if (name == "natural") return DecodeOrder::Natural;
  if (name == "confidence") return DecodeOrder::Confidence;
  throw std::invalid_argument("unknown decoding order '" + name +
                              "' (expected local|natural|confidence)");
}

std::string decode_order_name(DecodeOrder order) {
  switch (order) {
    case DecodeOrder::Local: return "local";
    case DecodeOrder::Natural: return "natural";
    case DecodeOrder::Confidence: return "confidence";
  }
  return "?";
}

namespace {

// Candidate distributions for the requested mentions from one forward pass
// with the given entity assignments as input tokens.
std::vector<PredictionDistribution> predict_mentions(
    const Document& piece, const std::vector<int>& assignments,
    const std::vector<int>& wanted, const ModelParams& params, const WordVocab& words) {
  TokenSequence seq = build_sequence(piece, assignments, words, params.config);
  Tape tape(false);
  Tensor enc = encode(tape, seq, params);
  std::vector<PredictionDistribution> out;
  out.reserve(wanted.size());
  for (int mi : wanted) {
    Tensor h = tape.gather_rows(enc, {seq.entity_token_index(mi)});
    Tensor m = mep_transform(tape, h, params);
    out.push_back(ed_predict(m, piece.mentions[size_t(mi)], params));
  }
  return out;
}

}  // namespace

LocalResult disambiguate_local(const Document& piece, const ModelParams& params,
                               const WordVocab& words, const EntityVocab& entities) {
  const int n = static_cast<int>(piece.mentions.size());
  LocalResult result;
  result.assignments.assign(size_t(n), kUnresolved);
  result.distributions.resize(size_t(n));
  if (n == 0) return result;
  std::vector<int> assignments(size_t(n), entities.mask_id());
  std::vector<int> wanted;
  for (int i = 0; i < n; ++i) {
    if (!piece.mentions[size_t(i)].candidates.empty()) wanted.push_back(i);
  }
  auto dists = predict_mentions(piece, assignments, wanted, params, words);
  for (size_t wi = 0; wi < wanted.size(); ++wi) {
    result.assignments[size_t(wanted[wi])] = dists[wi].argmax_entity;
    result.distributions[size_t(wanted[wi])] = std::move(dists[wi]);
  }
  return result;
}

DecodingState disambiguate_global(const Document& piece, const ModelParams& params,
                                  const WordVocab& words, const EntityVocab& entities,
                                  DecodeOrder order, bool feedback, StepTrace* trace) {
  if (order == DecodeOrder::Local) {
    throw std::invalid_argument("disambiguate_global: order must be natural or confidence");
  }
  const int n = static_cast<int>(piece.mentions.size());
  const int mask_id = entities.mask_id();
  DecodingState state;
  state.assignments.assign(size_t(n), mask_id);
  state.resolved.assign(size_t(n), false);
  for (int step = 1; step <= n; ++step) {
    std::vector<int> open;  // unresolved mentions that still compete
    for (int i = 0; i < n; ++i) {
      if (!state.resolved[size_t(i)] && !piece.mentions[size_t(i)].candidates.empty()) {
        open.push_back(i);
      }
    }
    if (open.empty()) {
      // only candidate-less mentions remain; resolve them to the sentinel
      for (int i = 0; i < n && open.empty(); ++i) {
        if (!state.resolved[size_t(i)]) {
          state.resolved[size_t(i)] = true;
          state.assignments[size_t(i)] = kUnresolved;
          state.steps.push_back({step, i, kUnresolved, 0.0});
          if (trace) trace->per_step.emplace_back();
          break;
        }
      }
      continue;
    }
    std::vector<int> input = state.assignments;
    for (int i = 0; i < n; ++i) {
      if (!state.resolved[size_t(i)] || state.assignments[size_t(i)] == kUnresolved ||
          !feedback) {
        input[size_t(i)] = mask_id;
      }
    }
    auto dists = predict_mentions(piece, input, open, params, words);
    if (trace) {
      std::vector<std::pair<int, PredictionDistribution>> snapshot;
      for (size_t oi = 0; oi < open.size(); ++oi) snapshot.emplace_back(open[oi], dists[oi]);
      trace->per_step.push_back(std::move(snapshot));
    }
    size_t pick = 0;
    if (order == DecodeOrder::Confidence) {
      for (size_t oi = 1; oi < dists.size(); ++oi) {
        if (dists[oi].confidence > dists[pick].confidence) pick = oi;
      }
    }  // natural order: smallest unresolved index, which open[0] already is
    int mi = open[pick];
    state.assignments[size_t(mi)] = dists[pick].argmax_entity;
    state.resolved[size_t(mi)] = true;
    state.steps.push_back({step, mi, dists[pick].argmax_entity, double(dists[pick].confidence)});
  }
  return state;
}

DocAssignments decode_document(const Document& full, const ModelParams& params,
                               const WordVocab& words, const EntityVocab& entities,
                               DecodeOrder order, int max_words_split) {
  DocAssignments merged;
  merged.entities.assign(full.mentions.size(), kUnresolved);
  merged.confidences.assign(full.mentions.size(), 0.0);
  auto pieces = split_document(full, max_words_split);
  for (size_t pi = 0; pi < pieces.size(); ++pi) {
    const SplitPiece& piece = pieces[pi];
    if (order == DecodeOrder::Local) {
      LocalResult local = disambiguate_local(piece.doc, params, words, entities);
      for (size_t mi = 0; mi < piece.source_mention.size(); ++mi) {
        merged.entities[size_t(piece.source_mention[mi])] = local.assignments[mi];
        merged.confidences[size_t(piece.source_mention[mi])] =
            local.distributions[mi].probs.empty() ? 0.0 : local.distributions[mi].confidence;
      }
    } else {
      DecodingState state = disambiguate_global(piece.doc, params, words, entities, order);
      for (size_t mi = 0; mi < piece.source_mention.size(); ++mi) {
        merged.entities[size_t(piece.source_mention[mi])] = state.assignments[mi];
      }
      for (const StepRecord& rec : state.steps) {
        StepRecord mapped = rec;
        mapped.mention = piece.source_mention[size_t(rec.mention)];
        merged.confidences[size_t(mapped.mention)] = rec.confidence;
        merged.steps.push_back({int(pi), mapped});
      }
    }
  }
  return merged;
}

}  // namespace edkit
