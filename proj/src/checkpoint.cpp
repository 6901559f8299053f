#include "edkit/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace edkit {

namespace {

constexpr char kMagic[8] = {'E', 'D', 'K', 'C', 'K', 'P', 'T', '1'};

class HashingWriter {
 public:
  explicit HashingWriter(std::ostream& out) : out_(out) {}

  void bytes(const void* p, size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      hash_ ^= c[i];
      hash_ *= 1099511628211ull;
    }
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u32(uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 4);
  }
  void u64(uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }
  void f32(float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  uint64_t hash() const { return hash_; }
  void raw_u64(uint64_t v) {  // written without updating the hash
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out_.write(reinterpret_cast<const char*>(b), 8);
  }

 private:
  std::ostream& out_;
  uint64_t hash_ = 1469598103934665603ull;
};

class HashingReader {
 public:
  HashingReader(std::istream& in, const std::string& path) : in_(in), path_(path) {}

  void bytes(void* p, size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in_.gcount()) != n) {
      throw std::runtime_error(path_ + ": truncated checkpoint");
    }
    const auto* c = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      hash_ ^= c[i];
      hash_ *= 1099511628211ull;
    }
  }
  uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(b[i]) << (8 * i);
    return v;
  }
  uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(b[i]) << (8 * i);
    return v;
  }
  float f32() {
    uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  uint64_t raw_u64() {  // read without updating the hash
    unsigned char b[8];
    in_.read(reinterpret_cast<char*>(b), 8);
    if (in_.gcount() != 8) throw std::runtime_error(path_ + ": truncated checkpoint");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(b[i]) << (8 * i);
    return v;
  }
  uint64_t hash() const { return hash_; }
  bool at_eof() {
    in_.peek();
    return in_.eof();
  }

 private:
  std::istream& in_;
  std::string path_;
  uint64_t hash_ = 1469598103934665603ull;
};

void write_config(HashingWriter& w, const ModelConfig& c) {
  w.u32(uint32_t(c.hidden));
  w.u32(uint32_t(c.layers));
  w.u32(uint32_t(c.heads));
  w.u32(uint32_t(c.head_dim()));
  w.u32(uint32_t(c.max_words));
  w.u32(uint32_t(c.word_vocab));
  w.u32(uint32_t(c.entity_vocab));
  w.u32(uint32_t(c.ffn()));
  w.f32(c.dropout);
}

ModelConfig read_config(HashingReader& r) {
  ModelConfig c;
  c.hidden = int(r.u32());
  c.layers = int(r.u32());
  c.heads = int(r.u32());
  c.head_size = int(r.u32());
  c.max_words = int(r.u32());
  c.word_vocab = int(r.u32());
  c.entity_vocab = int(r.u32());
  c.ffn_inner = int(r.u32());
  c.dropout = r.f32();
  return c;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const WordVocab& words,
                     const EntityVocab& entities, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  HashingWriter w(out);
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kCheckpointVersion);
  write_config(w, params.config);
  w.u64(words.content_hash());
  w.u64(entities.content_hash());
  auto slots = params.named();
  w.u32(uint32_t(slots.size()));
  for (const ParamSlot& s : slots) {
    w.u32(uint32_t(s.name.size()));
    w.bytes(s.name.data(), s.name.size());
    w.u32(uint32_t(s.tensor.rank()));
    for (int d : s.tensor.shape()) w.u32(uint32_t(d));
    for (int64_t i = 0; i < s.tensor.size(); ++i) w.f32(s.tensor.data()[i]);
  }
  w.raw_u64(w.hash());
  if (!out) throw std::runtime_error("write failed: " + path);
}

CheckpointContents read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  HashingReader r(in, path);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error(path + ": not an edkit checkpoint");
  }
  CheckpointContents c;
  c.meta.version = r.u32();
  if (c.meta.version != kCheckpointVersion) {
    throw std::runtime_error(path + ": unsupported checkpoint version " +
                             std::to_string(c.meta.version));
  }
  c.meta.config = read_config(r);
  c.meta.word_vocab_hash = r.u64();
  c.meta.entity_vocab_hash = r.u64();
  uint32_t count = r.u32();
  for (uint32_t t = 0; t < count; ++t) {
    uint32_t name_len = r.u32();
    if (name_len > 4096) throw std::runtime_error(path + ": corrupt tensor name");
    std::string name(name_len, '\0');
    r.bytes(name.data(), name_len);
    uint32_t rank = r.u32();
    if (rank > 8) throw std::runtime_error(path + ": corrupt tensor rank");
    std::vector<int> shape(rank);
    int64_t n = 1;
    for (uint32_t i = 0; i < rank; ++i) {
      shape[i] = int(r.u32());
      n *= shape[i];
    }
    if (n < 0 || n > (int64_t(1) << 31)) {
      throw std::runtime_error(path + ": corrupt tensor shape");
    }
    std::vector<float> data(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) data[size_t(i)] = r.f32();
    c.tensors.emplace_back(std::move(name), Tensor::from_data(std::move(shape), std::move(data)));
  }
  uint64_t computed = r.hash();
  uint64_t stored = r.raw_u64();
  if (computed != stored) {
    throw std::runtime_error(path + ": integrity check failed (corrupted checkpoint)");
  }
  if (!r.at_eof()) {
    throw std::runtime_error(path + ": trailing bytes after checkpoint");
  }
  return c;
}

CheckpointMeta read_checkpoint_meta(const std::string& path) {
  return read_checkpoint(path).meta;
}

ModelParams load_checkpoint(const std::string& path, const WordVocab& words,
                            const EntityVocab& entities) {
  CheckpointContents c = read_checkpoint(path);
  if (c.meta.word_vocab_hash != words.content_hash()) {
    throw std::runtime_error(path + ": word vocabulary hash mismatch");
  }
  if (c.meta.entity_vocab_hash != entities.content_hash()) {
    throw std::runtime_error(path + ": entity vocabulary hash mismatch");
  }
  if (c.meta.config.word_vocab != words.size() || c.meta.config.entity_vocab != entities.size()) {
    throw std::runtime_error(path + ": vocabulary sizes disagree with checkpoint config");
  }
  ModelParams params = ModelParams::init(c.meta.config, 0);
  auto slots = params.named();
  if (slots.size() != c.tensors.size()) {
    throw std::runtime_error(path + ": expected " + std::to_string(slots.size()) +
                             " tensors, found " + std::to_string(c.tensors.size()));
  }
  for (size_t i = 0; i < slots.size(); ++i) {
    auto& [name, tensor] = c.tensors[i];
    if (name != slots[i].name) {
      throw std::runtime_error(path + ": tensor '" + name + "' where '" + slots[i].name +
                               "' was expected");
    }
    if (tensor.shape() != slots[i].tensor.shape()) {
      throw std::runtime_error(path + ": tensor '" + name + "' has shape " +
                               shape_str(tensor.shape()) + ", expected " +
                               shape_str(slots[i].tensor.shape()));
    }
    std::memcpy(slots[i].tensor.data(), tensor.data(), size_t(tensor.size()) * 4);
  }
  return params;
}

}  // namespace edkit
