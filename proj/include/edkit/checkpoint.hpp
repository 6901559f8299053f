#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "edkit/model.hpp"
#include "edkit/vocab.hpp"

namespace edkit {

// Binary checkpoint layout (all integers little-endian):
//   magic "EDKCKPT1", u32 format version,
//   header: model config fields, u64 word/entity vocab content hashes,
//   u32 tensor count, then per tensor {u32 name length, name bytes,
//   u32 rank, u32 dims..., f32 data...},
//   trailing u64 FNV-1a hash of everything before it.
struct CheckpointMeta {
  uint32_t version = 0;
  ModelConfig config;
  uint64_t word_vocab_hash = 0;
  uint64_t entity_vocab_hash = 0;
};

struct CheckpointContents {
  CheckpointMeta meta;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ModelParams& params, const WordVocab& words,
                     const EntityVocab& entities, const std::string& path);

// Low-level read with integrity verification; no vocabulary check.
CheckpointContents read_checkpoint(const std::string& path);
CheckpointMeta read_checkpoint_meta(const std::string& path);

// Full load: verifies integrity, version, vocabulary hashes, and that the
// stored tensors exactly match the model layout.
ModelParams load_checkpoint(const std::string& path, const WordVocab& words,
                            const EntityVocab& entities);

}  // namespace edkit
