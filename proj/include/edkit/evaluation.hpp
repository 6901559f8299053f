#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace edkit {

// Accuracy over mentions with valid KB golds; an unresolved prediction (-1)
// counts as incorrect. Empty input is reported as not-applicable.
std::optional<double> in_kb_accuracy(const std::vector<int>& preds,
                                     const std::vector<int>& golds);

struct F1Result {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int predicted = 0;
  int correct = 0;
  int gold_total = 0;
  bool no_predictions = false;
};

// Micro-averaged per-mention F1; predictions of -1 abstain. With zero
// abstentions this equals accuracy.
F1Result micro_f1(const std::vector<int>& preds, const std::vector<int>& golds);

struct MentionEval {
  std::string doc_id;
  int mention = 0;
  int pred = -1;
  int gold = -1;
  double confidence = 0.0;
  bool has_candidates = false;
  bool gold_in_candidates = false;
};

struct BucketRow {
  std::string label;
  int64_t lo = 0;
  int64_t hi = 0;  // inclusive; -1 for unbounded
  int total = 0;
  int correct = 0;
  double accuracy() const { return total == 0 ? 0.0 : double(correct) / total; }
};

// Accuracy split by how often the gold entity was annotated in the
// pretraining corpus; buckets 0, 1-10, 11-50, >=51. Only mentions whose
// candidate set contains the gold entity participate.
std::vector<BucketRow> frequency_buckets(const std::vector<MentionEval>& records,
                                         const std::unordered_map<int, int64_t>& counts);

// Tallies partition the mentions: counted + excluded_no_candidates +
// excluded_gold_missing + unannotated = total_mentions. The excluded classes
// still enter the headline metrics and score as errors there; they are only
// excluded from the frequency-bucket analysis.
struct EvalReport {
  int total_mentions = 0;
  int evaluated = 0;               // gold-bearing mentions in the metric denominators
  int counted = 0;                 // fully scoreable: gold present among candidates
  int excluded_no_candidates = 0;
  int excluded_gold_missing = 0;   // gold outside a nonempty candidate set
  int unannotated = 0;             // no gold label; not evaluable
  std::optional<double> accuracy;
  F1Result f1;
  std::vector<BucketRow> buckets;  // filled when annotation counts are given
};

EvalReport build_report(const std::vector<MentionEval>& records,
                        const std::unordered_map<int, int64_t>* annotation_counts);

std::string format_report(const EvalReport& report);
// One "key=value" line per metric, for machine consumption.
std::string report_lines(const EvalReport& report);

// Mean with a 95% confidence half-width over per-seed metric values
// (Student t for small run counts).
struct SeedAggregate {
  int runs = 0;
  double mean = 0.0;
  double half_width_95 = 0.0;  // 0 for a single run
};

SeedAggregate aggregate_runs(const std::vector<double>& values);

}  // namespace edkit
