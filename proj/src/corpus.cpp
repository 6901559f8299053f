#include "edkit/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace edkit {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& path, size_t line, const std::string& msg) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + msg);
}

void sort_candidates(std::vector<Candidate>& cands) {
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.prior != b.prior) return a.prior > b.prior;
    return a.entity < b.entity;
  });
}

}  // namespace

bool Mention::gold_in_candidates() const {
  if (gold < 0) return false;
  for (const Candidate& c : candidates)
    if (c.entity == gold) return true;
  return false;
}

std::vector<Document> load_corpus(const std::string& path, const EntityVocab& entities) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  std::vector<Document> docs;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      parse_fail(path, lineno, std::string("malformed record: ") + e.what());
    }
    Document doc;
    try {
      doc.id = j.at("doc_id").get<std::string>();
      doc.words = j.at("words").get<std::vector<std::string>>();
      for (const json& jm : j.value("mentions", json::array())) {
        Mention m;
        m.start = jm.at("start").get<int>();
        m.end = jm.at("end").get<int>();
        if (jm.contains("gold")) {
          std::string name = jm.at("gold").get<std::string>();
          if (name == EntityVocab::kMask) {
            parse_fail(path, lineno, "doc '" + doc.id + "': [MASK] is not a valid gold entity");
          }
          auto id = entities.lookup(name);
          if (!id) parse_fail(path, lineno, "doc '" + doc.id + "': unknown entity '" + name + "'");
          m.gold = *id;
        }
        for (const json& jc : jm.value("candidates", json::array())) {
          Candidate c;
          std::string name = jc.at("entity").get<std::string>();
          if (name == EntityVocab::kMask || name == EntityVocab::kPad) {
            parse_fail(path, lineno,
                       "doc '" + doc.id + "': reserved entity '" + name + "' as candidate");
          }
          auto id = entities.lookup(name);
          if (!id) parse_fail(path, lineno, "doc '" + doc.id + "': unknown entity '" + name + "'");
          c.entity = *id;
          c.prior = jc.at("prior").get<float>();
          if (!(c.prior >= 0.0f && c.prior <= 1.0f)) {
            parse_fail(path, lineno, "doc '" + doc.id + "': prior " + std::to_string(c.prior) +
                                         " outside [0,1]");
          }
          for (const Candidate& prev : m.candidates) {
            if (prev.entity == c.entity) {
              parse_fail(path, lineno,
                         "doc '" + doc.id + "': duplicate candidate '" + name + "'");
            }
          }
          m.candidates.push_back(c);
        }
        sort_candidates(m.candidates);
        doc.mentions.push_back(std::move(m));
      }
    } catch (const json::exception& e) {
      parse_fail(path, lineno, std::string("malformed record: ") + e.what());
    }
    std::stable_sort(doc.mentions.begin(), doc.mentions.end(),
                     [](const Mention& a, const Mention& b) { return a.start < b.start; });
    const int n_words = static_cast<int>(doc.words.size());
    int prev_end = 0;
    for (const Mention& m : doc.mentions) {
      if (m.start < 0 || m.end <= m.start || m.end > n_words) {
        parse_fail(path, lineno,
                   "doc '" + doc.id + "': mention span [" + std::to_string(m.start) + "," +
                       std::to_string(m.end) + ") outside document of " +
                       std::to_string(n_words) + " words");
      }
      if (m.start < prev_end) {
        parse_fail(path, lineno, "doc '" + doc.id + "': overlapping mention spans");
      }
      prev_end = m.end;
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

void save_corpus(const std::vector<Document>& docs, const EntityVocab& entities,
                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  for (const Document& doc : docs) {
    json j;
    j["doc_id"] = doc.id;
    j["words"] = doc.words;
    json jms = json::array();
    for (const Mention& m : doc.mentions) {
      json jm;
      jm["start"] = m.start;
      jm["end"] = m.end;
      if (m.has_gold()) jm["gold"] = entities.name(m.gold);
      json jcs = json::array();
      for (const Candidate& c : m.candidates) {
        jcs.push_back({{"entity", entities.name(c.entity)}, {"prior", c.prior}});
      }
      jm["candidates"] = std::move(jcs);
      jms.push_back(std::move(jm));
    }
    j["mentions"] = std::move(jms);
    out << j.dump() << "\n";
  }
}

Mention truncate_candidates(const Mention& m, int k) {
  if (k < 1) throw std::invalid_argument("truncate_candidates: k must be >= 1");
  Mention out = m;
  sort_candidates(out.candidates);
  if (static_cast<int>(out.candidates.size()) > k) out.candidates.resize(size_t(k));
  return out;
}

void truncate_corpus_candidates(std::vector<Document>& docs, int k) {
  for (Document& d : docs)
    for (Mention& m : d.mentions) m = truncate_candidates(m, k);
}

std::vector<SplitPiece> split_document(const Document& d, int max_words) {
  if (max_words < 1) throw std::invalid_argument("split_document: max_words must be >= 1");
  for (const Mention& m : d.mentions) {
    if (m.length() > max_words) {
      throw std::runtime_error("doc '" + d.id + "': mention of " +
                               std::to_string(m.length()) +
                               " words cannot be represented with max_words " +
                               std::to_string(max_words));
    }
  }
  const int n = static_cast<int>(d.words.size());
  std::vector<SplitPiece> pieces;
  int cursor = 0;
  size_t mention_cursor = 0;
  while (cursor < n || pieces.empty()) {
    int boundary = std::min(cursor + max_words, n);
    // pull the boundary back to the start of any mention it would cut
    for (const Mention& m : d.mentions) {
      if (m.start < boundary && m.end > boundary) {
        boundary = m.start;
        break;
      }
    }
    if (boundary <= cursor && cursor < n) {
      // cannot happen: spans are <= max_words and non-overlapping
      throw std::logic_error("split_document: no progress at word " + std::to_string(cursor));
    }
    SplitPiece piece;
    piece.doc.id = d.id;
    piece.doc.words.assign(d.words.begin() + cursor, d.words.begin() + boundary);
    while (mention_cursor < d.mentions.size() && d.mentions[mention_cursor].end <= boundary) {
      Mention m = d.mentions[mention_cursor];
      m.start -= cursor;
      m.end -= cursor;
      piece.doc.mentions.push_back(std::move(m));
      piece.source_mention.push_back(static_cast<int>(mention_cursor));
      ++mention_cursor;
    }
    pieces.push_back(std::move(piece));
    cursor = boundary;
    if (n == 0) break;
  }
  if (pieces.size() > 1) {
    for (size_t i = 0; i < pieces.size(); ++i) {
      pieces[i].doc.id = d.id + "#" + std::to_string(i);
    }
  }
  return pieces;
}

CandidateTable CandidateTable::load(const std::string& path, const EntityVocab& entities) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open candidate table: " + path);
  CandidateTable t;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    size_t t1 = line.find('\t');
    size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      parse_fail(path, lineno, "expected mention-text<TAB>entity<TAB>prior");
    }
    std::string text = line.substr(0, t1);
    std::string name = line.substr(t1 + 1, t2 - t1 - 1);
    Candidate c;
    try {
      c.prior = std::stof(line.substr(t2 + 1));
    } catch (const std::exception&) {
      parse_fail(path, lineno, "bad prior value");
    }
    if (!(c.prior >= 0.0f && c.prior <= 1.0f)) {
      parse_fail(path, lineno, "prior outside [0,1]");
    }
    auto id = entities.lookup(name);
    if (!id) parse_fail(path, lineno, "unknown entity '" + name + "'");
    c.entity = *id;
    t.table_[text].push_back(c);
  }
  for (auto& [text, cands] : t.table_) sort_candidates(cands);
  return t;
}

const std::vector<Candidate>* CandidateTable::find(const std::string& mention_text) const {
  auto it = table_.find(mention_text);
  return it == table_.end() ? nullptr : &it->second;
}

void attach_candidates(Document& doc, const CandidateTable& table) {
  for (Mention& m : doc.mentions) {
    if (!m.candidates.empty()) continue;
    std::string text;
    for (int i = m.start; i < m.end; ++i) {
      if (i > m.start) text += ' ';
      text += doc.words[size_t(i)];
    }
    if (const auto* cands = table.find(text)) m.candidates = *cands;
  }
}

std::vector<TrainingInstance> mask_entities(const std::vector<Document>& docs,
                                            double rate, uint64_t seed,
                                            const EntityVocab& entities) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw std::invalid_argument("mask_entities: rate must lie in (0,1]");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int mask_id = entities.mask_id();
  std::vector<TrainingInstance> out;
  out.reserve(docs.size());
  for (size_t di = 0; di < docs.size(); ++di) {
    const Document& doc = docs[di];
    TrainingInstance inst;
    inst.doc_index = static_cast<int>(di);
    std::vector<int> annotated;
    for (size_t mi = 0; mi < doc.mentions.size(); ++mi) {
      const Mention& m = doc.mentions[mi];
      if (!m.has_gold()) {
        inst.assignments.push_back(mask_id);
        continue;
      }
      annotated.push_back(static_cast<int>(mi));
      if (uni(rng) < rate) {
        inst.assignments.push_back(mask_id);
        inst.masked.emplace_back(static_cast<int>(mi), m.gold);
      } else {
        inst.assignments.push_back(m.gold);
      }
    }
    if (inst.masked.empty() && !annotated.empty()) {
      std::uniform_int_distribution<size_t> pick(0, annotated.size() - 1);
      int mi = annotated[pick(rng)];
      inst.assignments[size_t(mi)] = mask_id;
      inst.masked.emplace_back(mi, doc.mentions[size_t(mi)].gold);
    }
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace edkit
