#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "support/test_util.hpp"

namespace fs = std::filesystem;
using edkit::test::TempDir;

namespace {

std::string bin() {
  const char* env = std::getenv("EDKIT_BIN");
  REQUIRE_MESSAGE(env != nullptr, "EDKIT_BIN must point at the edkit binary");
  return env;
}

struct RunResult {
  int exit_code;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

RunResult run(const TempDir& tmp, const std::string& args) {
  std::string out_path = tmp.file("stdout.txt");
  std::string err_path = tmp.file("stderr.txt");
  std::string cmd = bin() + " " + args + " > " + out_path + " 2> " + err_path;
  int status = std::system(cmd.c_str());
  int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code, slurp(out_path), slurp(err_path)};
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

void write_fixture(const TempDir& tmp) {
  write_file(tmp.file("words.txt"), "[PAD]\n[UNK]\n[CLS]\n[SEP]\nred\nblue\nrock\nband\ncity\n");
  write_file(tmp.file("ents.txt"), "[PAD]\n[MASK]\nA\nB\nC\nD\n");
  std::ostringstream corpus;
  corpus << R"({"doc_id":"d0","words":["red","rock","band","city"],"mentions":[)"
         << R"({"start":0,"end":1,"gold":"A","candidates":[{"entity":"A","prior":0.6},{"entity":"B","prior":0.4}]},)"
         << R"({"start":2,"end":3,"gold":"C","candidates":[{"entity":"C","prior":0.8},{"entity":"D","prior":0.2}]}]})"
         << "\n"
         << R"({"doc_id":"d1","words":["blue","city","rock"],"mentions":[)"
         << R"({"start":1,"end":2,"gold":"B","candidates":[{"entity":"A","prior":0.5},{"entity":"B","prior":0.5}]}]})"
         << "\n";
  write_file(tmp.file("corpus.jsonl"), corpus.str());
}

std::string model_flags() {
  return " --hidden 16 --layers 1 --heads 2 --max-words 16 --dropout 0.1";
}

std::string pretrain_cmd(const TempDir& tmp, const std::string& out,
                         const std::string& extra = "") {
  return "pretrain --corpus " + tmp.file("corpus.jsonl") + " --word-vocab " +
         tmp.file("words.txt") + " --entity-vocab " + tmp.file("ents.txt") + " --out " +
         tmp.file(out) + model_flags() + " --epochs 2 --batch 2 --lr 1e-3 --seed 7" + extra;
}

}  // namespace

TEST_CASE("pretrain runs with the documented masking default and echoes its config") {
  TempDir tmp("edkit-cli");
  write_fixture(tmp);
  RunResult r = run(tmp, pretrain_cmd(tmp, "model.ckpt", " --loss-trace " + tmp.file("t.csv")));
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("\"mask_rate\":0.3") != std::string::npos);
  CHECK(r.out.find("\"command\":\"pretrain\"") != std::string::npos);
  CHECK(fs::exists(tmp.file("model.ckpt")));
  std::string trace = slurp(tmp.file("t.csv"));
  CHECK(trace.rfind("step,loss", 0) == 0);
}

TEST_CASE("a missing corpus is a usage error with exit code 2") {
  TempDir tmp("edkit-cli");
  write_fixture(tmp);
  RunResult r = run(tmp, "pretrain --corpus " + tmp.file("nope.jsonl") + " --word-vocab " +
                             tmp.file("words.txt") + " --entity-vocab " + tmp.file("ents.txt") +
                             " --out " + tmp.file("x.ckpt"));
  CHECK(r.exit_code == 2);
}

TEST_CASE("identical seeds produce byte-identical checkpoints") {
  TempDir tmp("edkit-cli");
  write_fixture(tmp);
  REQUIRE(run(tmp, pretrain_cmd(tmp, "m1.ckpt")).exit_code == 0);
  REQUIRE(run(tmp, pretrain_cmd(tmp, "m2.ckpt")).exit_code == 0);
  CHECK(slurp(tmp.file("m1.ckpt")) == slurp(tmp.file("m2.ckpt")));
}

TEST_CASE("disambiguate writes predictions, and a step log only for global orders") {
  TempDir tmp("edkit-cli");
  write_fixture(tmp);
  REQUIRE(run(tmp, pretrain_cmd(tmp, "model.ckpt")).exit_code == 0);
  std::string common = "disambiguate --corpus " + tmp.file("corpus.jsonl") + " --checkpoint " +
                       tmp.file("model.ckpt") + " --word-vocab " + tmp.file("words.txt") +
                       " --entity-vocab " + tmp.file("ents.txt");

  RunResult conf = run(tmp, common + " --order confidence --out " + tmp.file("p.jsonl") +
                                " --step-log " + tmp.file("s.jsonl"));
  CHECK(conf.exit_code == 0);
  std::string preds = slurp(tmp.file("p.jsonl"));
  CHECK(std::count(preds.begin(), preds.end(), '\n') == 3);  // one line per mention
  std::string steps = slurp(tmp.file("s.jsonl"));
  CHECK(std::count(steps.begin(), steps.end(), '\n') == 3);

  RunResult local = run(tmp, common + " --order local --out " + tmp.file("pl.jsonl"));
  CHECK(local.exit_code == 0);
  RunResult bad = run(tmp, common + " --order local --out " + tmp.file("px.jsonl") +
                               " --step-log " + tmp.file("sx.jsonl"));
  CHECK(bad.exit_code == 2);

  // deterministic re-run
  RunResult again = run(tmp, common + " --order confidence --out " + tmp.file("p2.jsonl") +
                                 " --step-log " + tmp.file("s2.jsonl"));
  CHECK(again.exit_code == 0);
  CHECK(slurp(tmp.file("p2.jsonl")) == preds);
}

TEST_CASE("disambiguating an empty corpus yields an empty output and exit 0") {
  TempDir tmp("edkit-cli");
  write_fixture(tmp);
  REQUIRE(run(tmp, pretrain_cmd(tmp, "model.ckpt")).exit_code == 0);
  write_file(tmp.file("empty.jsonl"), "");
  RunResult r = run(tmp, "disambiguate --corpus " + tmp.file("empty.jsonl") + " --checkpoint " +
                             tmp.file("model.ckpt") + " --word-vocab " + tmp.file("words.txt") +
                             " --entity-vocab " + tmp.file("ents.txt") + " --order confidence" +
                             " --out " + tmp.file("pe.jsonl"));
  CHECK(r.exit_code == 0);
  CHECK(slurp(tmp.file("pe.jsonl")).empty());
}

TEST_CASE("evaluate prints 75.00 for three of four correct and F1 equals accuracy") {
  TempDir tmp("edkit-cli");
  write_file(tmp.file("ents.txt"), "[PAD]\n[MASK]\nA\nB\nC\nD\n");
  std::ostringstream gold;
  gold << R"({"doc_id":"g","words":["a","b","c","d"],"mentions":[)"
       << R"({"start":0,"end":1,"gold":"A","candidates":[{"entity":"A","prior":1.0}]},)"
       << R"({"start":1,"end":2,"gold":"B","candidates":[{"entity":"B","prior":1.0}]},)"
       << R"({"start":2,"end":3,"gold":"C","candidates":[{"entity":"C","prior":1.0}]},)"
       << R"({"start":3,"end":4,"gold":"D","candidates":[{"entity":"D","prior":1.0}]}]})"
       << "\n";
  write_file(tmp.file("gold.jsonl"), gold.str());
  std::ostringstream preds;
  preds << R"({"doc_id":"g","mention":0,"entity":"A","confidence":0.9})" << "\n"
        << R"({"doc_id":"g","mention":1,"entity":"B","confidence":0.9})" << "\n"
        << R"({"doc_id":"g","mention":2,"entity":"C","confidence":0.9})" << "\n"
        << R"({"doc_id":"g","mention":3,"entity":"A","confidence":0.9})" << "\n";
  write_file(tmp.file("preds.jsonl"), preds.str());
  RunResult r = run(tmp, "evaluate --pred " + tmp.file("preds.jsonl") + " --gold " +
                             tmp.file("gold.jsonl") + " --entity-vocab " + tmp.file("ents.txt") +
                             " --machine");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("in-KB accuracy: 75.00") != std::string::npos);
  CHECK(r.out.find("micro-F1: 75.00") != std::string::npos);
  CHECK(r.out.find("accuracy=0.75") != std::string::npos);
  CHECK(r.out.find("micro_f1=0.75") != std::string::npos);

  // a missing prediction line is an alignment error
  write_file(tmp.file("short.jsonl"),
             R"({"doc_id":"g","mention":0,"entity":"A","confidence":0.9})" "\n");
  RunResult bad = run(tmp, "evaluate --pred " + tmp.file("short.jsonl") + " --gold " +
                               tmp.file("gold.jsonl") + " --entity-vocab " +
                               tmp.file("ents.txt"));
  CHECK(bad.exit_code == 1);
  CHECK(bad.err.find("alignment") != std::string::npos);

  // two runs side by side aggregate into a mean and interval
  RunResult multi = run(tmp, "evaluate --pred " + tmp.file("preds.jsonl") + " --pred " +
                                 tmp.file("preds.jsonl") + " --gold " + tmp.file("gold.jsonl") +
                                 " --entity-vocab " + tmp.file("ents.txt"));
  CHECK(multi.exit_code == 0);
  CHECK(multi.out.find("over 2 runs") != std::string::npos);

  // per-mention record export
  RunResult rec = run(tmp, "evaluate --pred " + tmp.file("preds.jsonl") + " --gold " +
                               tmp.file("gold.jsonl") + " --entity-vocab " +
                               tmp.file("ents.txt") + " --records " + tmp.file("recs.jsonl"));
  CHECK(rec.exit_code == 0);
  std::string recs = slurp(tmp.file("recs.jsonl"));
  CHECK(std::count(recs.begin(), recs.end(), '\n') == 4);
  CHECK(recs.find("gold_in_candidates") != std::string::npos);
}

TEST_CASE("finetune defaults follow the fine-tuning recipe and verify the freeze") {
  TempDir tmp("edkit-cli");
  write_fixture(tmp);
  REQUIRE(run(tmp, pretrain_cmd(tmp, "model.ckpt")).exit_code == 0);
  RunResult r = run(tmp, "finetune --corpus " + tmp.file("corpus.jsonl") + " --checkpoint " +
                             tmp.file("model.ckpt") + " --word-vocab " + tmp.file("words.txt") +
                             " --entity-vocab " + tmp.file("ents.txt") + " --out " +
                             tmp.file("ft.ckpt") + " --seed 3");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("\"lr\":2e-05") != std::string::npos);
  CHECK(r.out.find("\"epochs\":2") != std::string::npos);
  CHECK(r.out.find("\"batch\":16") != std::string::npos);
  CHECK(r.out.find("\"mask_rate\":0.9") != std::string::npos);
  CHECK(r.out.find("verified frozen") != std::string::npos);
  CHECK(fs::exists(tmp.file("ft.ckpt")));
}

TEST_CASE("a checkpoint from different vocabularies is refused") {
  TempDir tmp("edkit-cli");
  write_fixture(tmp);
  REQUIRE(run(tmp, pretrain_cmd(tmp, "model.ckpt")).exit_code == 0);
  write_file(tmp.file("other_ents.txt"), "[PAD]\n[MASK]\nA\nB\nC\nZ\n");
  RunResult r = run(tmp, "finetune --corpus " + tmp.file("corpus.jsonl") + " --checkpoint " +
                             tmp.file("model.ckpt") + " --word-vocab " + tmp.file("words.txt") +
                             " --entity-vocab " + tmp.file("other_ents.txt") + " --out " +
                             tmp.file("ft.ckpt"));
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("mismatch") != std::string::npos);
}

TEST_CASE("inspect-checkpoint lists the stored tensors") {
  TempDir tmp("edkit-cli");
  write_fixture(tmp);
  REQUIRE(run(tmp, pretrain_cmd(tmp, "model.ckpt")).exit_code == 0);
  RunResult r = run(tmp, "inspect-checkpoint --checkpoint " + tmp.file("model.ckpt"));
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("word_emb") != std::string::npos);
  CHECK(r.out.find("out_bias") != std::string::npos);
  CHECK(r.out.find("parameters") != std::string::npos);
}
