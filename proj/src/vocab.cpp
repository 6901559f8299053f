#include "edkit/vocab.hpp"

#include <fstream>
#include <stdexcept>

namespace edkit {

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocabulary file: " + path);
  for (const std::string& l : lines) out << l << "\n";
}

}  // namespace

uint64_t fnv1a64(const std::vector<std::string>& lines) {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ull;
  };
  for (const std::string& l : lines) {
    for (char c : l) mix(static_cast<unsigned char>(c));
    mix('\n');
  }
  return h;
}

void WordVocab::finish(const std::string& origin) {
  index_.clear();
  for (size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) {
      throw std::runtime_error(origin + ": empty token at line " + std::to_string(i));
    }
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw std::runtime_error(origin + ": duplicate token '" + tokens_[i] + "'");
    }
  }
  auto require = [&](const char* tok) {
    auto it = index_.find(tok);
    if (it == index_.end()) {
      throw std::runtime_error(origin + ": missing reserved token " + std::string(tok));
    }
    return it->second;
  };
  pad_id_ = require(kPad);
  unk_id_ = require(kUnk);
  cls_id_ = require(kCls);
  sep_id_ = require(kSep);
}

WordVocab WordVocab::from_tokens(const std::vector<std::string>& words) {
  WordVocab v;
  v.tokens_ = {kPad, kUnk, kCls, kSep};
  for (const std::string& w : words) v.tokens_.push_back(w);
  v.finish("word vocabulary");
  return v;
}

WordVocab WordVocab::load(const std::string& path) {
  WordVocab v;
  v.tokens_ = read_lines(path);
  v.finish(path);
  return v;
}

void WordVocab::save(const std::string& path) const { write_lines(path, tokens_); }

int WordVocab::id(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? unk_id_ : it->second;
}

std::optional<int> WordVocab::lookup(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& WordVocab::token(int id) const {
  return tokens_.at(static_cast<size_t>(id));
}

uint64_t WordVocab::content_hash() const { return fnv1a64(tokens_); }

void EntityVocab::finish(const std::string& origin) {
  index_.clear();
  for (size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) {
      throw std::runtime_error(origin + ": empty entity name at line " + std::to_string(i));
    }
    if (!index_.emplace(names_[i], static_cast<int>(i)).second) {
      throw std::runtime_error(origin + ": duplicate entity '" + names_[i] + "'");
    }
  }
  auto require = [&](const char* tok) {
    auto it = index_.find(tok);
    if (it == index_.end()) {
      throw std::runtime_error(origin + ": missing reserved entity " + std::string(tok));
    }
    return it->second;
  };
  pad_id_ = require(kPad);
  mask_id_ = require(kMask);
}

EntityVocab EntityVocab::from_names(const std::vector<std::string>& names) {
  EntityVocab v;
  v.names_ = {kPad, kMask};
  for (const std::string& n : names) v.names_.push_back(n);
  v.finish("entity vocabulary");
  return v;
}

EntityVocab EntityVocab::load(const std::string& path) {
  EntityVocab v;
  v.names_ = read_lines(path);
  v.finish(path);
  return v;
}

void EntityVocab::save(const std::string& path) const { write_lines(path, names_); }

std::optional<int> EntityVocab::lookup(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& EntityVocab::name(int id) const {
  return names_.at(static_cast<size_t>(id));
}

uint64_t EntityVocab::content_hash() const { return fnv1a64(names_); }

}  // namespace edkit
