#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "edkit/checkpoint.hpp"
#include "edkit/corpus.hpp"
#include "edkit/evaluation.hpp"
#include "edkit/inference.hpp"
#include "edkit/training.hpp"
#include "edkit/vocab.hpp"

using json = nlohmann::json;
using namespace edkit;

namespace {

struct ModelFlags {
  int hidden = 64;
  int layers = 2;
  int heads = 4;
  int head_size = 0;
  int max_words = 128;
  int ffn_inner = 0;
  float dropout = 0.1f;

  void attach(CLI::App* cmd) {
    cmd->add_option("--hidden", hidden, "Hidden size H");
    cmd->add_option("--layers", layers, "Transformer layers");
    cmd->add_option("--heads", heads, "Attention heads");
    cmd->add_option("--head-size", head_size, "Attention head size (0: hidden/heads)");
    cmd->add_option("--max-words", max_words, "Maximum word tokens incl. [CLS]/[SEP]");
    cmd->add_option("--ffn-inner", ffn_inner, "Feed-forward inner size (0: 4*hidden)");
    cmd->add_option("--dropout", dropout, "Dropout rate");
  }
  ModelConfig config(int v_w, int v_e) const {
    ModelConfig c;
    c.hidden = hidden;
    c.layers = layers;
    c.heads = heads;
    c.head_size = head_size;
    c.max_words = max_words;
    c.ffn_inner = ffn_inner;
    c.dropout = dropout;
    c.word_vocab = v_w;
    c.entity_vocab = v_e;
    return c;
  }
  json to_json() const {
    return {{"hidden", hidden},       {"layers", layers},       {"heads", heads},
            {"head_size", head_size}, {"max_words", max_words}, {"ffn_inner", ffn_inner},
            {"dropout", dropout}};
  }
};

struct TrainFlags {
  TrainConfig cfg;
  std::string decay = "linear";
  std::string phase1_decay = "none";
  std::string phase1_freeze;

  void attach(CLI::App* cmd, double default_lr, int default_epochs, int default_batch,
              double default_mask, double default_warmup_prop) {
    cfg.lr = default_lr;
    cfg.epochs = default_epochs;
    cfg.batch_size = default_batch;
    cfg.mask_rate = default_mask;
    cfg.warmup_proportion = default_warmup_prop;
    cmd->add_option("--lr", cfg.lr, "Peak learning rate");
    cmd->add_option("--epochs", cfg.epochs, "Training epochs");
    cmd->add_option("--batch", cfg.batch_size, "Batch size");
    cmd->add_option("--mask-rate", cfg.mask_rate, "Masking probability");
    cmd->add_option("--warmup-steps", cfg.warmup_steps, "Warmup steps (overrides proportion)");
    cmd->add_option("--warmup-prop", cfg.warmup_proportion, "Warmup proportion of total steps");
    cmd->add_option("--decay", decay, "Learning-rate decay: linear|none");
    cmd->add_option("--weight-decay", cfg.weight_decay, "Decoupled weight decay");
    cmd->add_option("--clip", cfg.clip_norm, "Global gradient-norm clip (<=0 disables)");
    cmd->add_option("--beta1", cfg.beta1, "Adam beta1");
    cmd->add_option("--beta2", cfg.beta2, "Adam beta2");
    cmd->add_option("--adam-eps", cfg.eps, "Adam epsilon");
    cmd->add_option("--seed", cfg.seed, "Random seed")->envname("EDKIT_SEED");
  }
  void attach_phases(CLI::App* cmd) {
    cmd->add_option("--phase1-epochs", cfg.phase1_epochs,
                    "Epochs trained with the phase-1 freeze plan");
    cmd->add_option("--phase1-freeze", phase1_freeze,
                    "Comma-separated groups frozen in phase 1 "
                    "(word_embeddings,entity_embeddings,encoder,mep_head)");
    cmd->add_option("--phase1-lr", cfg.phase1_lr, "Phase-1 learning rate (0: --lr)");
    cmd->add_option("--phase1-warmup-steps", cfg.phase1_warmup_steps, "Phase-1 warmup steps");
    cmd->add_option("--phase1-decay", phase1_decay, "Phase-1 decay: linear|none");
  }
  TrainConfig resolve() {
    TrainConfig out = cfg;
    out.decay = decay == "none" ? LrDecay::None : LrDecay::Linear;
    out.phase1_decay = phase1_decay == "none" ? LrDecay::None : LrDecay::Linear;
    out.phase1_freeze.clear();
    std::stringstream ss(phase1_freeze);
    std::string group;
    while (std::getline(ss, group, ',')) {
      if (!group.empty()) out.phase1_freeze.push_back(group);
    }
    return out;
  }
  json to_json(const TrainConfig& r) const {
    json j = {{"lr", r.lr},
              {"epochs", r.epochs},
              {"batch", r.batch_size},
              {"mask_rate", r.mask_rate},
              {"warmup_steps", r.warmup_steps},
              {"warmup_prop", r.warmup_proportion},
              {"decay", decay},
              {"weight_decay", r.weight_decay},
              {"clip", r.clip_norm},
              {"beta1", r.beta1},
              {"beta2", r.beta2},
              {"adam_eps", r.eps},
              {"seed", r.seed}};
    if (r.phase1_epochs > 0) {
      j["phase1_epochs"] = r.phase1_epochs;
      j["phase1_freeze"] = r.phase1_freeze;
      j["phase1_lr"] = r.phase1_lr;
      j["phase1_warmup_steps"] = r.phase1_warmup_steps;
      j["phase1_decay"] = phase1_decay;
    }
    return j;
  }
};

void echo_config(const std::string& command, const json& j) {
  json wrapper = j;
  wrapper["command"] = command;
  std::cout << "config " << wrapper.dump() << "\n";
}

std::vector<Document> load_pieces(const std::string& corpus_path, const EntityVocab& entities,
                                  int max_words, int top_k,
                                  const std::string& candidate_table_path) {
  auto docs = load_corpus(corpus_path, entities);
  if (!candidate_table_path.empty()) {
    CandidateTable table = CandidateTable::load(candidate_table_path, entities);
    for (Document& d : docs) attach_candidates(d, table);
  }
  if (top_k > 0) truncate_corpus_candidates(docs, top_k);
  std::vector<Document> pieces;
  for (const Document& d : docs) {
    for (SplitPiece& p : split_document(d, max_words - 2)) {
      pieces.push_back(std::move(p.doc));
    }
  }
  return pieces;
}

uint64_t tensor_checksum(const Tensor& t) {
  return fnv1a64({std::string(reinterpret_cast<const char*>(t.data()),
                              size_t(t.size()) * sizeof(float))});
}

int cmd_pretrain(const std::string& corpus_path, const std::string& word_vocab_path,
                 const std::string& entity_vocab_path, const std::string& out_path,
                 const std::string& trace_path, const std::string& counts_path,
                 const ModelFlags& model_flags, TrainFlags& train_flags) {
  WordVocab words = WordVocab::load(word_vocab_path);
  EntityVocab entities = EntityVocab::load(entity_vocab_path);
  ModelConfig cfg = model_flags.config(words.size(), entities.size());
  cfg.validate();
  TrainConfig tc = train_flags.resolve();

  json echo = {{"corpus", corpus_path},           {"word_vocab", word_vocab_path},
               {"entity_vocab", entity_vocab_path}, {"out", out_path},
               {"model", model_flags.to_json()},  {"train", train_flags.to_json(tc)}};
  echo_config("pretrain", echo);

  auto pieces = load_pieces(corpus_path, entities, cfg.max_words, 0, "");
  ModelParams params = ModelParams::init(cfg, tc.seed);
  auto result = pretrain_mep(pieces, tc, params, words, entities,
                             [&](int epoch, const ModelParams& p) {
                               save_checkpoint(p, words, entities, out_path);
                               std::cout << "epoch " << epoch << " checkpoint written\n";
                             });
  if (!trace_path.empty()) write_loss_trace(trace_path, result.loss_trace);
  if (!counts_path.empty()) {
    auto counts = count_entity_annotations(pieces);
    std::vector<std::pair<int, int64_t>> rows(counts.begin(), counts.end());
    std::sort(rows.begin(), rows.end());
    std::ofstream cout_file(counts_path);
    if (!cout_file) throw std::runtime_error("cannot write " + counts_path);
    for (auto [entity, n] : rows) cout_file << entities.name(entity) << "\t" << n << "\n";
  }
  if (!result.loss_trace.empty()) {
    std::cout << "final loss " << result.loss_trace.back().second << " after "
              << result.loss_trace.size() << " steps";
    if (result.skipped_batches) std::cout << " (" << result.skipped_batches << " skipped)";
    std::cout << "\n";
  }
  return 0;
}

int cmd_finetune(const std::string& corpus_path, const std::string& dev_path,
                 const std::string& ckpt_path, const std::string& word_vocab_path,
                 const std::string& entity_vocab_path, const std::string& out_path,
                 const std::string& trace_path, const std::string& table_path, int top_k,
                 TrainFlags& train_flags) {
  WordVocab words = WordVocab::load(word_vocab_path);
  EntityVocab entities = EntityVocab::load(entity_vocab_path);
  ModelParams params = load_checkpoint(ckpt_path, words, entities);
  TrainConfig tc = train_flags.resolve();

  json echo = {{"corpus", corpus_path},   {"dev", dev_path},
               {"checkpoint", ckpt_path}, {"out", out_path},
               {"top_k", top_k},          {"train", train_flags.to_json(tc)}};
  echo_config("finetune", echo);

  auto pieces = load_pieces(corpus_path, entities, params.config.max_words, top_k, table_path);
  std::vector<Document> dev_docs;
  if (!dev_path.empty()) {
    dev_docs = load_corpus(dev_path, entities);
    if (top_k > 0) truncate_corpus_candidates(dev_docs, top_k);
  }

  const uint64_t emb_before = tensor_checksum(params.entity_emb);
  const uint64_t bias_before = tensor_checksum(params.out_bias);
  auto result = finetune_ed(pieces, dev_docs, tc, params, words, entities);
  if (tensor_checksum(params.entity_emb) != emb_before ||
      tensor_checksum(params.out_bias) != bias_before) {
    throw std::runtime_error("freeze contract violated: entity embeddings or output bias moved");
  }
  std::cout << "entity embeddings and output bias verified frozen (checksums " << std::hex
            << emb_before << ", " << bias_before << std::dec << ")\n";
  std::cout << "masked " << result.masked_decisions << "/" << result.total_decisions
            << " mentions; " << result.excluded_gold_missing
            << " excluded (gold not in candidates)\n";
  for (size_t e = 0; e < result.dev_accuracy.size(); ++e) {
    std::cout << "dev accuracy after epoch " << e << ": " << result.dev_accuracy[e] << "\n";
  }
  save_checkpoint(params, words, entities, out_path);
  if (!trace_path.empty()) write_loss_trace(trace_path, result.loss_trace);
  return 0;
}

int cmd_disambiguate(const std::string& corpus_path, const std::string& ckpt_path,
                     const std::string& word_vocab_path, const std::string& entity_vocab_path,
                     const std::string& order_name, const std::string& out_path,
                     const std::string& step_log_path, const std::string& table_path,
                     int top_k, int max_words) {
  WordVocab words = WordVocab::load(word_vocab_path);
  EntityVocab entities = EntityVocab::load(entity_vocab_path);
  ModelParams params = load_checkpoint(ckpt_path, words, entities);
  DecodeOrder order = parse_decode_order(order_name);

  json echo = {{"corpus", corpus_path}, {"checkpoint", ckpt_path}, {"order", order_name},
               {"out", out_path},       {"top_k", top_k},
               {"max_words", max_words > 0 ? max_words : params.config.max_words}};
  echo_config("disambiguate", echo);

  auto docs = load_corpus(corpus_path, entities);
  if (!table_path.empty()) {
    CandidateTable table = CandidateTable::load(table_path, entities);
    for (Document& d : docs) attach_candidates(d, table);
  }
  if (top_k > 0) truncate_corpus_candidates(docs, top_k);
  const int budget = (max_words > 0 ? max_words : params.config.max_words) - 2;

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  std::ofstream steps;
  if (!step_log_path.empty()) {
    steps.open(step_log_path);
    if (!steps) throw std::runtime_error("cannot write " + step_log_path);
  }
  for (const Document& d : docs) {
    DocAssignments a = decode_document(d, params, words, entities, order, budget);
    for (size_t mi = 0; mi < a.entities.size(); ++mi) {
      json line = {{"doc_id", d.id}, {"mention", mi}};
      if (a.entities[mi] == kUnresolved) {
        line["entity"] = nullptr;
      } else {
        line["entity"] = entities.name(a.entities[mi]);
      }
      line["confidence"] = a.confidences[mi];
      out << line.dump() << "\n";
    }
    if (steps.is_open()) {
      for (const PieceStep& ps : a.steps) {
        json line = {{"doc_id", d.id},
                     {"piece", ps.piece},
                     {"step", ps.record.step},
                     {"mention", ps.record.mention},
                     {"confidence", ps.record.confidence}};
        if (ps.record.entity == kUnresolved) {
          line["entity"] = nullptr;
        } else {
          line["entity"] = entities.name(ps.record.entity);
        }
        steps << line.dump() << "\n";
      }
    }
  }
  return 0;
}

std::vector<MentionEval> align_predictions(const std::string& pred_path,
                                           const std::vector<Document>& docs,
                                           const EntityVocab& entities) {
  // one prediction line per mention, keyed by (doc id, mention index)
  std::map<std::pair<std::string, int>, std::pair<int, double>> preds;
  std::ifstream in(pred_path);
  if (!in) throw std::runtime_error("cannot open " + pred_path);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error(pred_path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    std::string doc_id = j.at("doc_id").get<std::string>();
    int mention = j.at("mention").get<int>();
    int entity = kUnresolved;
    if (!j.at("entity").is_null()) {
      auto id = entities.lookup(j.at("entity").get<std::string>());
      if (!id) {
        throw std::runtime_error(pred_path + ":" + std::to_string(lineno) +
                                 ": unknown entity '" + j.at("entity").get<std::string>() +
                                 "'");
      }
      entity = *id;
    }
    double confidence = j.value("confidence", 0.0);
    if (!preds.emplace(std::make_pair(doc_id, mention), std::make_pair(entity, confidence))
             .second) {
      throw std::runtime_error(pred_path + ":" + std::to_string(lineno) +
                               ": duplicate prediction for " + doc_id + "#" +
                               std::to_string(mention));
    }
  }

  std::vector<MentionEval> records;
  size_t used = 0;
  for (const Document& d : docs) {
    for (size_t mi = 0; mi < d.mentions.size(); ++mi) {
      auto it = preds.find({d.id, int(mi)});
      if (it == preds.end()) {
        throw std::runtime_error("alignment error: no prediction for " + d.id + "#" +
                                 std::to_string(mi));
      }
      ++used;
      MentionEval rec;
      rec.doc_id = d.id;
      rec.mention = int(mi);
      rec.pred = it->second.first;
      rec.confidence = it->second.second;
      rec.gold = d.mentions[mi].gold;
      rec.has_candidates = !d.mentions[mi].candidates.empty();
      rec.gold_in_candidates = d.mentions[mi].gold_in_candidates();
      records.push_back(std::move(rec));
    }
  }
  if (used != preds.size()) {
    throw std::runtime_error("alignment error: " + std::to_string(preds.size() - used) +
                             " prediction(s) without a gold mention");
  }
  return records;
}

int cmd_evaluate(const std::vector<std::string>& pred_paths, const std::string& gold_path,
                 const std::string& entity_vocab_path, const std::string& counts_path,
                 const std::string& records_path, int top_k, bool machine_lines) {
  EntityVocab entities = EntityVocab::load(entity_vocab_path);

  json echo = {{"pred", pred_paths},  {"gold", gold_path},       {"top_k", top_k},
               {"buckets", counts_path}, {"records", records_path}, {"machine", machine_lines}};
  echo_config("evaluate", echo);

  auto docs = load_corpus(gold_path, entities);
  if (top_k > 0) truncate_corpus_candidates(docs, top_k);

  std::optional<std::unordered_map<int, int64_t>> counts;
  if (!counts_path.empty()) {
    counts.emplace();
    std::ifstream cf(counts_path);
    if (!cf) throw std::runtime_error("cannot open " + counts_path);
    std::string line;
    size_t cline = 0;
    while (std::getline(cf, line)) {
      ++cline;
      if (line.empty()) continue;
      size_t tab = line.find('\t');
      if (tab == std::string::npos) {
        throw std::runtime_error(counts_path + ":" + std::to_string(cline) +
                                 ": expected entity<TAB>count");
      }
      auto id = entities.lookup(line.substr(0, tab));
      if (!id) continue;  // counts may cover entities outside this vocabulary
      (*counts)[*id] = std::stoll(line.substr(tab + 1));
    }
  }

  std::vector<double> accuracies, f1s;
  for (const std::string& pred_path : pred_paths) {
    auto records = align_predictions(pred_path, docs, entities);
    EvalReport report = build_report(records, counts ? &*counts : nullptr);
    if (pred_paths.size() > 1) std::cout << "== " << pred_path << " ==\n";
    std::cout << format_report(report);
    if (machine_lines) std::cout << report_lines(report);
    if (report.accuracy) accuracies.push_back(*report.accuracy);
    f1s.push_back(report.f1.f1);

    if (!records_path.empty()) {
      std::ofstream rec_out(records_path);
      if (!rec_out) throw std::runtime_error("cannot write " + records_path);
      for (const MentionEval& r : records) {
        json j = {{"doc_id", r.doc_id},
                  {"mention", r.mention},
                  {"pred", r.pred == kUnresolved ? json(nullptr) : json(entities.name(r.pred))},
                  {"gold", r.gold < 0 ? json(nullptr) : json(entities.name(r.gold))},
                  {"confidence", r.confidence},
                  {"has_candidates", r.has_candidates},
                  {"gold_in_candidates", r.gold_in_candidates}};
        rec_out << j.dump() << "\n";
      }
    }
  }

  if (pred_paths.size() > 1 && accuracies.size() == pred_paths.size()) {
    SeedAggregate acc = aggregate_runs(accuracies);
    SeedAggregate f1 = aggregate_runs(f1s);
    std::cout << "over " << acc.runs << " runs: accuracy mean " << 100.0 * acc.mean << " +/- "
              << 100.0 * acc.half_width_95 << ", micro-F1 mean " << 100.0 * f1.mean << " +/- "
              << 100.0 * f1.half_width_95 << " (95% interval)\n";
  }
  return 0;
}

int cmd_inspect(const std::string& ckpt_path) {
  CheckpointContents c = read_checkpoint(ckpt_path);
  json echo = {{"checkpoint", ckpt_path}};
  echo_config("inspect-checkpoint", echo);
  std::cout << "format version: " << c.meta.version << "\n";
  const ModelConfig& m = c.meta.config;
  std::cout << "model: hidden " << m.hidden << ", layers " << m.layers << ", heads " << m.heads
            << " x " << m.head_dim() << ", max_words " << m.max_words << ", ffn " << m.ffn()
            << ", dropout " << m.dropout << "\n";
  std::cout << "vocabularies: " << m.word_vocab << " words (hash " << std::hex
            << c.meta.word_vocab_hash << "), " << std::dec << m.entity_vocab
            << " entities (hash " << std::hex << c.meta.entity_vocab_hash << std::dec << ")\n";
  int64_t total = 0;
  for (const auto& [name, tensor] : c.tensors) {
    std::cout << "  " << name << " " << shape_str(tensor.shape()) << "\n";
    total += tensor.size();
  }
  std::cout << c.tensors.size() << " tensors, " << total << " parameters\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contextual entity disambiguation toolkit"};
  app.require_subcommand(1);

  auto* pre = app.add_subcommand("pretrain", "Masked-entity pretraining from scratch");
  std::string corpus, word_vocab, entity_vocab, out, trace, counts_out;
  pre->add_option("--corpus", corpus, "Training corpus (JSON Lines)")
      ->required()
      ->check(CLI::ExistingFile);
  pre->add_option("--word-vocab", word_vocab, "Word vocabulary file")
      ->required()
      ->check(CLI::ExistingFile);
  pre->add_option("--entity-vocab", entity_vocab, "Entity vocabulary file")
      ->required()
      ->check(CLI::ExistingFile);
  pre->add_option("--out", out, "Checkpoint output path")->required();
  pre->add_option("--loss-trace", trace, "CSV loss trace output");
  pre->add_option("--counts-out", counts_out, "Entity annotation counts (TSV) output");
  ModelFlags pre_model;
  pre_model.attach(pre);
  TrainFlags pre_train;
  pre_train.attach(pre, 5e-4, 10, 8, 0.3, 0.0);
  pre_train.attach_phases(pre);

  auto* fin = app.add_subcommand("finetune", "Candidate-restricted fine-tuning");
  std::string fin_corpus, fin_dev, fin_ckpt, fin_out, fin_trace, fin_table;
  std::string fin_words, fin_entities;
  int fin_k = 30;
  fin->add_option("--corpus", fin_corpus, "Training corpus with golds and candidates")
      ->required()
      ->check(CLI::ExistingFile);
  fin->add_option("--dev", fin_dev, "Development corpus")->check(CLI::ExistingFile);
  fin->add_option("--checkpoint", fin_ckpt, "Base checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  fin->add_option("--word-vocab", fin_words, "Word vocabulary file")
      ->required()
      ->check(CLI::ExistingFile);
  fin->add_option("--entity-vocab", fin_entities, "Entity vocabulary file")
      ->required()
      ->check(CLI::ExistingFile);
  fin->add_option("--out", fin_out, "Fine-tuned checkpoint output")->required();
  fin->add_option("--loss-trace", fin_trace, "CSV loss trace output");
  fin->add_option("--candidate-table", fin_table, "TSV candidate table for bare mentions")
      ->check(CLI::ExistingFile);
  fin->add_option("-k,--top-k", fin_k, "Keep the top-k candidates per mention");
  TrainFlags fin_train;
  fin_train.attach(fin, 2e-5, 2, 16, 0.9, 0.1);

  auto* dis = app.add_subcommand("disambiguate", "Resolve mentions with a trained model");
  std::string dis_corpus, dis_ckpt, dis_words, dis_entities, dis_out, dis_steps, dis_table;
  std::string dis_order = "confidence";
  int dis_k = 30, dis_max_words = 0;
  dis->add_option("--corpus", dis_corpus, "Input corpus")->required()->check(CLI::ExistingFile);
  dis->add_option("--checkpoint", dis_ckpt, "Model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  dis->add_option("--word-vocab", dis_words, "Word vocabulary file")
      ->required()
      ->check(CLI::ExistingFile);
  dis->add_option("--entity-vocab", dis_entities, "Entity vocabulary file")
      ->required()
      ->check(CLI::ExistingFile);
  dis->add_option("--order", dis_order, "Decoding order: local|natural|confidence");
  dis->add_option("--out", dis_out, "Predictions output (JSON Lines)")->required();
  dis->add_option("--step-log", dis_steps, "Step log output (global orders only)");
  dis->add_option("--candidate-table", dis_table, "TSV candidate table for bare mentions")
      ->check(CLI::ExistingFile);
  dis->add_option("-k,--top-k", dis_k, "Keep the top-k candidates per mention");
  dis->add_option("--max-words", dis_max_words, "Split budget (0: model max_words)");

  auto* eva = app.add_subcommand("evaluate", "Score predictions against a gold corpus");
  std::vector<std::string> eva_pred;
  std::string eva_gold, eva_entities, eva_counts, eva_records;
  int eva_k = 0;
  bool eva_machine = false;
  eva->add_option("--pred", eva_pred,
                  "Predictions (JSON Lines); repeat to compare runs side by side")
      ->required()
      ->check(CLI::ExistingFile);
  eva->add_option("--gold", eva_gold, "Gold corpus (JSON Lines)")
      ->required()
      ->check(CLI::ExistingFile);
  eva->add_option("--entity-vocab", eva_entities, "Entity vocabulary file")
      ->required()
      ->check(CLI::ExistingFile);
  eva->add_option("--buckets", eva_counts, "Annotation counts TSV for the frequency table")
      ->check(CLI::ExistingFile);
  eva->add_option("-k,--top-k", eva_k, "Truncate gold candidates to top-k first");
  eva->add_option("--records", eva_records, "Per-mention record export (JSON Lines)");
  eva->add_flag("--machine", eva_machine, "Also print key=value metric lines");

  auto* ins = app.add_subcommand("inspect-checkpoint", "Print checkpoint metadata and tensors");
  std::string ins_ckpt;
  ins->add_option("--checkpoint", ins_ckpt, "Checkpoint path")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (pre->parsed()) {
      return cmd_pretrain(corpus, word_vocab, entity_vocab, out, trace, counts_out, pre_model,
                          pre_train);
    }
    if (fin->parsed()) {
      return cmd_finetune(fin_corpus, fin_dev, fin_ckpt, fin_words, fin_entities, fin_out,
                          fin_trace, fin_table, fin_k, fin_train);
    }
    if (dis->parsed()) {
      if (dis_order == "local" && !dis_steps.empty()) {
        std::cerr << "error: --step-log requires a global order (natural|confidence)\n";
        return 2;
      }
      return cmd_disambiguate(dis_corpus, dis_ckpt, dis_words, dis_entities, dis_order, dis_out,
                              dis_steps, dis_table, dis_k, dis_max_words);
    }
    if (eva->parsed()) {
      if (!eva_records.empty() && eva_pred.size() != 1) {
        std::cerr << "error: --records needs exactly one --pred file\n";
        return 2;
      }
      return cmd_evaluate(eva_pred, eva_gold, eva_entities, eva_counts, eva_records, eva_k,
                          eva_machine);
    }
    if (ins->parsed()) {
      return cmd_inspect(ins_ckpt);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
