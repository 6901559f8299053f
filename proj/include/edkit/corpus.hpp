#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "edkit/vocab.hpp"

namespace edkit {

struct Candidate {
  int entity = -1;
  float prior = 0.0f;
};

// A mention span (half-open word interval) with its ranked entity candidates.
// Candidates are kept sorted by descending prior, ties by ascending id.
struct Mention {
  int start = 0;
  int end = 0;
  std::vector<Candidate> candidates;
  int gold = -1;  // entity id, or -1 when unannotated

  bool has_gold() const { return gold >= 0; }
  int length() const { return end - start; }
  bool gold_in_candidates() const;
};

struct Document {
  std::string id;
  std::vector<std::string> words;
  std::vector<Mention> mentions;
};

// JSON Lines corpus:
//   {"doc_id": ..., "words": [...],
//    "mentions": [{"start":s,"end":e,"gold":"name",
//                  "candidates":[{"entity":"name","prior":p}, ...]}, ...]}
// Entity names are resolved against the vocabulary; violations are rejected
// with the line number and document id in the message.
std::vector<Document> load_corpus(const std::string& path, const EntityVocab& entities);
void save_corpus(const std::vector<Document>& docs, const EntityVocab& entities,
                 const std::string& path);

// Keeps the k highest-prior candidates (ties: smaller entity id wins).
Mention truncate_candidates(const Mention& m, int k);
void truncate_corpus_candidates(std::vector<Document>& docs, int k);

// A piece produced by document splitting, with the map back from piece
// mention index to the mention index in the source document.
struct SplitPiece {
  Document doc;
  std::vector<int> source_mention;
};

// Splits into pieces of at most max_words words each without ever cutting a
// mention span; prefers the latest legal boundary. A mention longer than
// max_words cannot be represented and raises an error.
std::vector<SplitPiece> split_document(const Document& d, int max_words);

// Tab-separated candidate table: mention-text <TAB> entity <TAB> prior.
// Rows for the same mention text accumulate into one candidate list.
class CandidateTable {
 public:
  static CandidateTable load(const std::string& path, const EntityVocab& entities);
  const std::vector<Candidate>* find(const std::string& mention_text) const;
  size_t size() const { return table_.size(); }

 private:
  std::unordered_map<std::string, std::vector<Candidate>> table_;
};

// Fills empty candidate lists from the table, keyed by the mention's surface
// text (its words joined with single spaces).
void attach_candidates(Document& doc, const CandidateTable& table);

// One masked-entity-prediction training instance: a document with each
// annotated mention either carrying its gold entity or the [MASK] entity.
struct TrainingInstance {
  int doc_index = -1;
  std::vector<int> assignments;               // per mention: entity id or mask id
  std::vector<std::pair<int, int>> masked;    // (mention index, target entity id)
};

// Independently masks each annotated entity with the given probability.
// Instances whose documents have at least one annotated entity always get at
// least one mask. Unannotated mentions are assigned [MASK] and never targeted.
std::vector<TrainingInstance> mask_entities(const std::vector<Document>& docs,
                                            double rate, uint64_t seed,
                                            const EntityVocab& entities);

}  // namespace edkit
