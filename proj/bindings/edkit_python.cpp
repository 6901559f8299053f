#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "edkit/checkpoint.hpp"
#include "edkit/corpus.hpp"
#include "edkit/evaluation.hpp"
#include "edkit/inference.hpp"
#include "edkit/training.hpp"
#include "edkit/vocab.hpp"

namespace py = pybind11;
using namespace edkit;

namespace {

std::vector<Document> split_corpus(const std::vector<Document>& docs, int max_words) {
  std::vector<Document> pieces;
  for (const Document& d : docs) {
    for (SplitPiece& p : split_document(d, max_words)) pieces.push_back(std::move(p.doc));
  }
  return pieces;
}

py::dict decode_to_dict(const Document& doc, const DocAssignments& a,
                        const EntityVocab& entities) {
  py::list names, confidences;
  for (size_t i = 0; i < a.entities.size(); ++i) {
    if (a.entities[i] == kUnresolved) {
      names.append(py::none());
    } else {
      names.append(entities.name(a.entities[i]));
    }
    confidences.append(a.confidences[i]);
  }
  py::list steps;
  for (const PieceStep& ps : a.steps) {
    py::dict step;
    step["piece"] = ps.piece;
    step["step"] = ps.record.step;
    step["mention"] = ps.record.mention;
    step["entity"] = ps.record.entity == kUnresolved
                         ? py::object(py::none())
                         : py::object(py::str(entities.name(ps.record.entity)));
    step["confidence"] = ps.record.confidence;
    steps.append(step);
  }
  py::dict out;
  out["doc_id"] = doc.id;
  out["entities"] = names;
  out["confidences"] = confidences;
  out["steps"] = steps;
  return out;
}

}  // namespace

PYBIND11_MODULE(_edkit, m) {
  m.doc() = "Contextual entity disambiguation: word+entity transformer encoder, "
            "masked-entity pretraining, and sequential decoding";

  py::class_<WordVocab>(m, "WordVocab")
      .def_static("from_tokens", &WordVocab::from_tokens, py::arg("words"))
      .def_static("load", &WordVocab::load, py::arg("path"))
      .def("save", &WordVocab::save, py::arg("path"))
      .def("id", &WordVocab::id)
      .def("token", &WordVocab::token)
      .def("__len__", &WordVocab::size)
      .def_property_readonly("content_hash", &WordVocab::content_hash);

  py::class_<EntityVocab>(m, "EntityVocab")
      .def_static("from_names", &EntityVocab::from_names, py::arg("names"))
      .def_static("load", &EntityVocab::load, py::arg("path"))
      .def("save", &EntityVocab::save, py::arg("path"))
      .def("lookup",
           [](const EntityVocab& v, const std::string& name) -> py::object {
             auto id = v.lookup(name);
             if (!id) return py::none();
             return py::int_(*id);
           })
      .def("name", &EntityVocab::name)
      .def("__len__", &EntityVocab::size)
      .def_property_readonly("mask_id", &EntityVocab::mask_id)
      .def_property_readonly("content_hash", &EntityVocab::content_hash);

  py::class_<Candidate>(m, "Candidate")
      .def(py::init<>())
      .def_readwrite("entity", &Candidate::entity)
      .def_readwrite("prior", &Candidate::prior);

  py::class_<Mention>(m, "Mention")
      .def(py::init<>())
      .def_readwrite("start", &Mention::start)
      .def_readwrite("end", &Mention::end)
      .def_readwrite("candidates", &Mention::candidates)
      .def_readwrite("gold", &Mention::gold);

  py::class_<Document>(m, "Document")
      .def(py::init<>())
      .def_readwrite("id", &Document::id)
      .def_readwrite("words", &Document::words)
      .def_readwrite("mentions", &Document::mentions);

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("hidden", &ModelConfig::hidden)
      .def_readwrite("layers", &ModelConfig::layers)
      .def_readwrite("heads", &ModelConfig::heads)
      .def_readwrite("head_size", &ModelConfig::head_size)
      .def_readwrite("max_words", &ModelConfig::max_words)
      .def_readwrite("word_vocab", &ModelConfig::word_vocab)
      .def_readwrite("entity_vocab", &ModelConfig::entity_vocab)
      .def_readwrite("dropout", &ModelConfig::dropout)
      .def_readwrite("ffn_inner", &ModelConfig::ffn_inner);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("lr", &TrainConfig::lr)
      .def_readwrite("warmup_steps", &TrainConfig::warmup_steps)
      .def_readwrite("warmup_proportion", &TrainConfig::warmup_proportion)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("weight_decay", &TrainConfig::weight_decay)
      .def_readwrite("clip_norm", &TrainConfig::clip_norm)
      .def_readwrite("mask_rate", &TrainConfig::mask_rate)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_property(
          "decay",
          [](const TrainConfig& c) { return c.decay == LrDecay::Linear ? "linear" : "none"; },
          [](TrainConfig& c, const std::string& v) {
            c.decay = v == "none" ? LrDecay::None : LrDecay::Linear;
          });

  m.def("pretrain_defaults", &pretrain_defaults);
  m.def("finetune_defaults", &finetune_defaults);

  py::class_<ModelParams>(m, "ModelParams")
      .def_static("init", &ModelParams::init, py::arg("config"), py::arg("seed"))
      .def_readonly("config", &ModelParams::config);

  m.def("load_corpus", &load_corpus, py::arg("path"), py::arg("entities"));
  m.def("save_corpus", &save_corpus, py::arg("docs"), py::arg("entities"), py::arg("path"));
  m.def("split_corpus", &split_corpus, py::arg("docs"), py::arg("max_words"));
  m.def("truncate_candidates", &truncate_candidates, py::arg("mention"), py::arg("k"));

  m.def(
      "pretrain",
      [](std::vector<Document> pieces, const TrainConfig& cfg, ModelParams& params,
         const WordVocab& words, const EntityVocab& entities) {
        PretrainResult r;
        {
          py::gil_scoped_release release;
          r = pretrain_mep(pieces, cfg, params, words, entities);
        }
        py::dict out;
        out["loss_trace"] = r.loss_trace;
        out["skipped_batches"] = r.skipped_batches;
        return out;
      },
      py::arg("pieces"), py::arg("config"), py::arg("params"), py::arg("words"),
      py::arg("entities"));

  m.def(
      "finetune",
      [](std::vector<Document> pieces, std::vector<Document> dev, const TrainConfig& cfg,
         ModelParams& params, const WordVocab& words, const EntityVocab& entities) {
        FinetuneResult r;
        {
          py::gil_scoped_release release;
          r = finetune_ed(pieces, dev, cfg, params, words, entities);
        }
        py::dict out;
        out["loss_trace"] = r.loss_trace;
        out["skipped_batches"] = r.skipped_batches;
        out["masked_decisions"] = r.masked_decisions;
        out["total_decisions"] = r.total_decisions;
        out["excluded_gold_missing"] = r.excluded_gold_missing;
        out["dev_accuracy"] = r.dev_accuracy;
        return out;
      },
      py::arg("pieces"), py::arg("dev"), py::arg("config"), py::arg("params"), py::arg("words"),
      py::arg("entities"));

  m.def(
      "decode_document",
      [](const Document& doc, const ModelParams& params, const WordVocab& words,
         const EntityVocab& entities, const std::string& order, int max_words) {
        DecodeOrder parsed = parse_decode_order(order);
        DocAssignments a;
        {
          py::gil_scoped_release release;
          a = decode_document(doc, params, words, entities, parsed,
                              max_words > 0 ? max_words : params.config.max_words - 2);
        }
        return decode_to_dict(doc, a, entities);
      },
      py::arg("doc"), py::arg("params"), py::arg("words"), py::arg("entities"),
      py::arg("order") = "confidence", py::arg("max_words") = 0);

  m.def("recovery_accuracy", &mep_recovery_accuracy, py::arg("pieces"), py::arg("params"),
        py::arg("words"), py::arg("entities"));

  m.def("save_checkpoint", &save_checkpoint, py::arg("params"), py::arg("words"),
        py::arg("entities"), py::arg("path"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"), py::arg("words"),
        py::arg("entities"));

  m.def(
      "in_kb_accuracy",
      [](const std::vector<int>& preds, const std::vector<int>& golds) -> py::object {
        auto acc = in_kb_accuracy(preds, golds);
        if (!acc) return py::none();
        return py::float_(*acc);
      },
      py::arg("preds"), py::arg("golds"));
  m.def(
      "micro_f1",
      [](const std::vector<int>& preds, const std::vector<int>& golds) {
        F1Result r = micro_f1(preds, golds);
        py::dict out;
        out["precision"] = r.precision;
        out["recall"] = r.recall;
        out["f1"] = r.f1;
        out["predicted"] = r.predicted;
        out["correct"] = r.correct;
        out["gold_total"] = r.gold_total;
        return out;
      },
      py::arg("preds"), py::arg("golds"));
  m.def("count_entity_annotations", &count_entity_annotations, py::arg("docs"));
}
