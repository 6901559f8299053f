#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace edkit {

// Word-string <-> id bijection with reserved [PAD]/[UNK]/[CLS]/[SEP] entries.
// Vocabulary files hold one token per line; the line number is the id, and
// the reserved tokens must appear in the file like any other entry.
class WordVocab {
 public:
  static constexpr const char* kPad = "[PAD]";
  static constexpr const char* kUnk = "[UNK]";
  static constexpr const char* kCls = "[CLS]";
  static constexpr const char* kSep = "[SEP]";

  WordVocab() = default;

  // Reserved tokens first, then the given words in order (duplicates rejected).
  static WordVocab from_tokens(const std::vector<std::string>& words);
  static WordVocab load(const std::string& path);
  void save(const std::string& path) const;

  int id(const std::string& word) const;  // unknown words map to [UNK]
  std::optional<int> lookup(const std::string& word) const;
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  int pad_id() const { return pad_id_; }
  int unk_id() const { return unk_id_; }
  int cls_id() const { return cls_id_; }
  int sep_id() const { return sep_id_; }

  uint64_t content_hash() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int pad_id_ = -1, unk_id_ = -1, cls_id_ = -1, sep_id_ = -1;

  void finish(const std::string& origin);
};

// Entity-name <-> id bijection with reserved [PAD] and [MASK] entries.
// [MASK] is the masked-entity input token and never a valid gold label.
class EntityVocab {
 public:
  static constexpr const char* kPad = "[PAD]";
  static constexpr const char* kMask = "[MASK]";

  EntityVocab() = default;

  static EntityVocab from_names(const std::vector<std::string>& names);
  static EntityVocab load(const std::string& path);
  void save(const std::string& path) const;

  std::optional<int> lookup(const std::string& name) const;
  const std::string& name(int id) const;
  int size() const { return static_cast<int>(names_.size()); }

  int pad_id() const { return pad_id_; }
  int mask_id() const { return mask_id_; }

  uint64_t content_hash() const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
  int pad_id_ = -1, mask_id_ = -1;

  void finish(const std::string& origin);
};

uint64_t fnv1a64(const std::vector<std::string>& lines);

}  // namespace edkit
