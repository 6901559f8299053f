#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "edkit/corpus.hpp"
#include "edkit/model.hpp"
#include "edkit/optim.hpp"
#include "edkit/vocab.hpp"

namespace edkit {

struct TrainConfig {
  double lr = 5e-4;
  int warmup_steps = 0;
  double warmup_proportion = 0.0;  // used when warmup_steps == 0
  LrDecay decay = LrDecay::Linear;
  int batch_size = 8;
  int epochs = 10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-6;
  double weight_decay = 0.01;
  double clip_norm = 1.0;
  double mask_rate = 0.3;  // 0.9 for fine-tuning
  uint64_t seed = 42;

  // Optional first phase with frozen parameter groups and its own schedule.
  int phase1_epochs = 0;
  std::vector<std::string> phase1_freeze;
  double phase1_lr = 0.0;  // 0 -> lr
  int phase1_warmup_steps = 0;
  LrDecay phase1_decay = LrDecay::None;

  AdamConfig adam(double peak_lr, int warmup, LrDecay d, int total_steps) const;
};

// Pretraining defaults at desk-scale batch/epoch counts.
TrainConfig pretrain_defaults();
// Fine-tuning defaults: lr 2e-5, batch 16, 2 epochs, warmup proportion 0.1,
// linear decay, 90% mention masking.
TrainConfig finetune_defaults();

using EpochHook = std::function<void(int epoch, const ModelParams&)>;

struct PretrainResult {
  std::vector<std::pair<int, double>> loss_trace;  // (step, mean masked CE)
  int skipped_batches = 0;
};

// Masked entity prediction over document pieces that already fit max_words.
// Loss is the mean cross-entropy over masked entity positions only.
PretrainResult pretrain_mep(const std::vector<Document>& pieces, const TrainConfig& cfg,
                            ModelParams& params, const WordVocab& words,
                            const EntityVocab& entities, const EpochHook& on_epoch = {});

struct FinetuneResult {
  std::vector<std::pair<int, double>> loss_trace;
  int skipped_batches = 0;
  int64_t masked_decisions = 0;
  int64_t total_decisions = 0;
  int64_t excluded_gold_missing = 0;  // masked mentions whose gold is not a candidate
  std::vector<double> dev_accuracy;   // per epoch; empty when no dev set
};

// Candidate-restricted fine-tuning: masks mask_rate of the mentions, feeds
// gold entities for the rest, and trains the ED cross-entropy at masked
// positions. The entity embeddings and output bias stay frozen throughout.
FinetuneResult finetune_ed(const std::vector<Document>& train_pieces,
                           const std::vector<Document>& dev_docs, const TrainConfig& cfg,
                           ModelParams& params, const WordVocab& words,
                           const EntityVocab& entities, const EpochHook& on_epoch = {});

// Fraction of annotated mentions recovered by the MEP head when masked one
// at a time with every other mention set to its gold entity.
double mep_recovery_accuracy(const std::vector<Document>& pieces, const ModelParams& params,
                             const WordVocab& words, const EntityVocab& entities);

// Gold-annotation counts per entity, for the frequency-bucket analysis.
std::unordered_map<int, int64_t> count_entity_annotations(const std::vector<Document>& docs);

void write_loss_trace(const std::string& path,
                      const std::vector<std::pair<int, double>>& trace);

}  // namespace edkit
