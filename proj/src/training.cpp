#include "edkit/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <stdexcept>

#include "edkit/encoder.hpp"
#include "edkit/heads.hpp"
#include "edkit/inference.hpp"

namespace edkit {

namespace {

int steps_per_epoch(size_t instances, int batch_size) {
  return int((instances + size_t(batch_size) - 1) / size_t(batch_size));
}

void check_pieces_fit(const std::vector<Document>& pieces, const ModelConfig& cfg) {
  for (const Document& d : pieces) {
    if (int(d.words.size()) + 2 > cfg.max_words) {
      throw std::invalid_argument("doc '" + d.id + "' has " + std::to_string(d.words.size()) +
                                  " words and does not fit max_words " +
                                  std::to_string(cfg.max_words) + "; split it first");
    }
  }
}

uint64_t derive_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

AdamConfig TrainConfig::adam(double peak_lr, int warmup, LrDecay d, int total_steps) const {
  AdamConfig a;
  a.lr = peak_lr;
  a.beta1 = beta1;
  a.beta2 = beta2;
  a.eps = eps;
  a.weight_decay = weight_decay;
  a.clip_norm = clip_norm;
  a.warmup_steps = warmup;
  a.decay = d;
  a.total_steps = total_steps;
  return a;
}

TrainConfig pretrain_defaults() {
  TrainConfig c;
  c.lr = 5e-4;
  c.batch_size = 8;
  c.epochs = 10;
  c.mask_rate = 0.3;
  c.decay = LrDecay::Linear;
  return c;
}

TrainConfig finetune_defaults() {
  TrainConfig c;
  c.lr = 2e-5;
  c.batch_size = 16;
  c.epochs = 2;
  c.warmup_proportion = 0.1;
  c.decay = LrDecay::Linear;
  c.mask_rate = 0.9;
  return c;
}

PretrainResult pretrain_mep(const std::vector<Document>& pieces, const TrainConfig& cfg,
                            ModelParams& params, const WordVocab& words,
                            const EntityVocab& entities, const EpochHook& on_epoch) {
  if (pieces.empty()) throw std::invalid_argument("pretrain: empty corpus");
  check_pieces_fit(pieces, params.config);
  PretrainResult result;
  std::mt19937_64 dropout_rng(derive_seed(cfg.seed, 0));
  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 1));

  const int spe = steps_per_epoch(pieces.size(), cfg.batch_size);
  const int phase1_epochs = std::min(cfg.phase1_epochs, cfg.epochs);
  const int phase2_epochs = cfg.epochs - phase1_epochs;

  int step = 0;
  std::unique_ptr<AdamW> opt;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const bool phase1 = epoch < phase1_epochs;
    if (epoch == 0 || epoch == phase1_epochs) {
      if (phase1) {
        params.freeze_groups(cfg.phase1_freeze);
        double lr = cfg.phase1_lr > 0.0 ? cfg.phase1_lr : cfg.lr;
        opt = std::make_unique<AdamW>(
            params.named(),
            cfg.adam(lr, cfg.phase1_warmup_steps, cfg.phase1_decay, phase1_epochs * spe));
      } else {
        params.set_trainable(true);
        int total = phase2_epochs * spe;
        int warmup = cfg.warmup_steps > 0
                         ? cfg.warmup_steps
                         : int(std::lround(cfg.warmup_proportion * total));
        opt = std::make_unique<AdamW>(params.named(),
                                      cfg.adam(cfg.lr, warmup, cfg.decay, total));
      }
    }

    auto instances = mask_entities(pieces, cfg.mask_rate, derive_seed(cfg.seed, 2 + epoch),
                                   entities);
    std::shuffle(instances.begin(), instances.end(), shuffle_rng);

    for (size_t begin = 0; begin < instances.size(); begin += size_t(cfg.batch_size)) {
      size_t end = std::min(begin + size_t(cfg.batch_size), instances.size());
      Tape tape;
      std::vector<Tensor> losses;
      int masked_total = 0;
      for (size_t bi = begin; bi < end; ++bi) {
        const TrainingInstance& inst = instances[bi];
        if (inst.masked.empty()) continue;
        const Document& doc = pieces[size_t(inst.doc_index)];
        TokenSequence seq = build_sequence(doc, inst.assignments, words, params.config);
        Tensor enc = encode(tape, seq, params, &dropout_rng, true);
        std::vector<int> rows;
        std::vector<int> targets;
        for (auto [mention, target] : inst.masked) {
          rows.push_back(seq.entity_token_index(mention));
          targets.push_back(target);
        }
        Tensor h = tape.gather_rows(enc, rows);
        Tensor logits = mep_logits(tape, mep_transform(tape, h, params), params);
        losses.push_back(tape.cross_entropy_sum(logits, targets));
        masked_total += int(targets.size());
      }
      if (masked_total == 0) {
        std::cerr << "pretrain: skipping batch at step " << step
                  << " (no masked entities)\n";
        ++result.skipped_batches;
        continue;
      }
      Tensor loss = losses[0];
      for (size_t i = 1; i < losses.size(); ++i) loss = tape.add(loss, losses[i]);
      loss = tape.scale(loss, 1.0f / float(masked_total));
      opt->zero_grad();
      tape.backward(loss);
      opt->step();
      result.loss_trace.emplace_back(step, double(loss.data()[0]));
      ++step;
    }
    if (on_epoch) on_epoch(epoch, params);
  }
  params.set_trainable(true);
  return result;
}

FinetuneResult finetune_ed(const std::vector<Document>& train_pieces,
                           const std::vector<Document>& dev_docs, const TrainConfig& cfg,
                           ModelParams& params, const WordVocab& words,
                           const EntityVocab& entities, const EpochHook& on_epoch) {
  if (train_pieces.empty()) throw std::invalid_argument("finetune: empty training corpus");
  check_pieces_fit(train_pieces, params.config);
  FinetuneResult result;
  std::mt19937_64 dropout_rng(derive_seed(cfg.seed, 0));
  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 1));
  std::mt19937_64 mask_rng(derive_seed(cfg.seed, 2));
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  // the candidate head reuses the entity embeddings and output bias; both stay fixed
  params.freeze_names({"entity_emb", "out_bias"});

  const int mask_id = entities.mask_id();
  const int spe = steps_per_epoch(train_pieces.size(), cfg.batch_size);
  const int total_steps = spe * cfg.epochs;
  const int warmup = cfg.warmup_steps > 0 ? cfg.warmup_steps
                                          : int(std::lround(cfg.warmup_proportion * total_steps));
  AdamW opt(params.named(), cfg.adam(cfg.lr, warmup, cfg.decay, total_steps));

  std::vector<size_t> order(train_pieces.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (size_t begin = 0; begin < order.size(); begin += size_t(cfg.batch_size)) {
      size_t end = std::min(begin + size_t(cfg.batch_size), order.size());
      Tape tape;
      std::vector<Tensor> losses;
      int loss_terms = 0;
      for (size_t oi = begin; oi < end; ++oi) {
        const Document& doc = train_pieces[order[oi]];
        std::vector<int> assignments(doc.mentions.size(), mask_id);
        std::vector<int> masked;
        for (size_t mi = 0; mi < doc.mentions.size(); ++mi) {
          const Mention& m = doc.mentions[mi];
          ++result.total_decisions;
          if (uni(mask_rng) < cfg.mask_rate) {
            ++result.masked_decisions;
            masked.push_back(int(mi));
          } else if (m.has_gold()) {
            assignments[mi] = m.gold;
          }
        }
        if (masked.empty()) continue;
        TokenSequence seq = build_sequence(doc, assignments, words, params.config);
        Tensor enc = encode(tape, seq, params, &dropout_rng, true);
        for (int mi : masked) {
          const Mention& m = doc.mentions[size_t(mi)];
          if (!m.has_gold()) continue;
          int target = -1;
          std::vector<int> cand_ids;
          for (size_t ci = 0; ci < m.candidates.size(); ++ci) {
            cand_ids.push_back(m.candidates[ci].entity);
            if (m.candidates[ci].entity == m.gold) target = int(ci);
          }
          if (target < 0) {
            ++result.excluded_gold_missing;
            continue;
          }
          Tensor h = tape.gather_rows(enc, {seq.entity_token_index(mi)});
          Tensor m_row = mep_transform(tape, h, params);
          Tensor logits = ed_logits(tape, m_row, cand_ids, params);
          losses.push_back(tape.cross_entropy_sum(logits, {target}));
          ++loss_terms;
        }
      }
      if (loss_terms == 0) {
        ++result.skipped_batches;
        continue;
      }
      Tensor loss = losses[0];
      for (size_t i = 1; i < losses.size(); ++i) loss = tape.add(loss, losses[i]);
      loss = tape.scale(loss, 1.0f / float(loss_terms));
      opt.zero_grad();
      tape.backward(loss);
      opt.step();
      result.loss_trace.emplace_back(step, double(loss.data()[0]));
      ++step;
    }
    if (!dev_docs.empty()) {
      std::vector<int> preds, golds;
      for (const Document& d : dev_docs) {
        DocAssignments a = decode_document(d, params, words, entities, DecodeOrder::Local,
                                           params.config.max_words - 2);
        for (size_t mi = 0; mi < d.mentions.size(); ++mi) {
          if (!d.mentions[mi].has_gold()) continue;
          preds.push_back(a.entities[mi]);
          golds.push_back(d.mentions[mi].gold);
        }
      }
      int correct = 0;
      for (size_t i = 0; i < preds.size(); ++i) correct += preds[i] == golds[i];
      result.dev_accuracy.push_back(preds.empty() ? 0.0 : double(correct) / preds.size());
    }
    if (on_epoch) on_epoch(epoch, params);
  }
  params.set_trainable(true);
  return result;
}

double mep_recovery_accuracy(const std::vector<Document>& pieces, const ModelParams& params,
                             const WordVocab& words, const EntityVocab& entities) {
  const int mask_id = entities.mask_id();
  int64_t total = 0, correct = 0;
  for (const Document& doc : pieces) {
    std::vector<int> gold_assign(doc.mentions.size(), mask_id);
    for (size_t mi = 0; mi < doc.mentions.size(); ++mi) {
      if (doc.mentions[mi].has_gold()) gold_assign[mi] = doc.mentions[mi].gold;
    }
    for (size_t mi = 0; mi < doc.mentions.size(); ++mi) {
      if (!doc.mentions[mi].has_gold()) continue;
      std::vector<int> assignments = gold_assign;
      assignments[mi] = mask_id;
      TokenSequence seq = build_sequence(doc, assignments, words, params.config);
      Tape tape(false);
      Tensor enc = encode(tape, seq, params);
      Tensor h = tape.gather_rows(enc, {seq.entity_token_index(int(mi))});
      Tensor m = mep_transform(tape, h, params);
      PredictionDistribution dist = mep_predict(m, params);
      ++total;
      correct += dist.argmax_entity == doc.mentions[mi].gold;
    }
  }
  return total == 0 ? 0.0 : double(correct) / double(total);
}

std::unordered_map<int, int64_t> count_entity_annotations(const std::vector<Document>& docs) {
  std::unordered_map<int, int64_t> counts;
  for (const Document& d : docs)
    for (const Mention& m : d.mentions)
      if (m.has_gold()) ++counts[m.gold];
  return counts;
}

void write_loss_trace(const std::string& path,
                      const std::vector<std::pair<int, double>>& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write loss trace: " + path);
  out << "step,loss\n";
  for (auto [step, loss] : trace) out << step << "," << loss << "\n";
}

}  // namespace edkit
