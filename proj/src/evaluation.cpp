#include "edkit/evaluation.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace edkit {

std::optional<double> in_kb_accuracy(const std::vector<int>& preds,
                                     const std::vector<int>& golds) {
  if (preds.size() != golds.size()) {
    throw std::invalid_argument("in_kb_accuracy: " + std::to_string(preds.size()) +
                                " predictions vs " + std::to_string(golds.size()) + " golds");
  }
  if (preds.empty()) return std::nullopt;
  int correct = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    correct += preds[i] >= 0 && preds[i] == golds[i];
  }
  return double(correct) / double(preds.size());
}

F1Result micro_f1(const std::vector<int>& preds, const std::vector<int>& golds) {
  if (preds.size() != golds.size()) {
    throw std::invalid_argument("micro_f1: " + std::to_string(preds.size()) +
                                " predictions vs " + std::to_string(golds.size()) + " golds");
  }
  F1Result r;
  r.gold_total = static_cast<int>(golds.size());
  for (size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] < 0) continue;  // abstention
    ++r.predicted;
    r.correct += preds[i] == golds[i];
  }
  if (r.predicted == 0) {
    r.no_predictions = true;
    return r;
  }
  r.precision = double(r.correct) / double(r.predicted);
  r.recall = r.gold_total == 0 ? 0.0 : double(r.correct) / double(r.gold_total);
  if (r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  }
  return r;
}

std::vector<BucketRow> frequency_buckets(const std::vector<MentionEval>& records,
                                         const std::unordered_map<int, int64_t>& counts) {
  std::vector<BucketRow> rows = {
      {"0", 0, 0, 0, 0},
      {"1-10", 1, 10, 0, 0},
      {"11-50", 11, 50, 0, 0},
      {">=51", 51, -1, 0, 0},
  };
  for (const MentionEval& rec : records) {
    if (rec.gold < 0 || !rec.gold_in_candidates) continue;
    auto it = counts.find(rec.gold);
    int64_t seen = it == counts.end() ? 0 : it->second;
    for (BucketRow& row : rows) {
      if (seen >= row.lo && (row.hi < 0 || seen <= row.hi)) {
        ++row.total;
        row.correct += rec.pred == rec.gold;
        break;
      }
    }
  }
  return rows;
}

EvalReport build_report(const std::vector<MentionEval>& records,
                        const std::unordered_map<int, int64_t>* annotation_counts) {
  EvalReport report;
  report.total_mentions = static_cast<int>(records.size());
  std::vector<int> preds, golds;
  for (const MentionEval& rec : records) {
    if (rec.gold < 0) {
      ++report.unannotated;
      continue;
    }
    preds.push_back(rec.pred);
    golds.push_back(rec.gold);
    if (!rec.has_candidates) {
      ++report.excluded_no_candidates;
    } else if (!rec.gold_in_candidates) {
      ++report.excluded_gold_missing;
    } else {
      ++report.counted;
    }
  }
  report.evaluated = static_cast<int>(preds.size());
  report.accuracy = in_kb_accuracy(preds, golds);
  report.f1 = micro_f1(preds, golds);
  if (annotation_counts) report.buckets = frequency_buckets(records, *annotation_counts);
  return report;
}

std::string format_report(const EvalReport& report) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "mentions: " << report.total_mentions << " (evaluated " << report.evaluated
     << ", no-candidate " << report.excluded_no_candidates << ", gold-not-in-candidates "
     << report.excluded_gold_missing;
  if (report.unannotated > 0) os << ", unannotated " << report.unannotated;
  os << ")\n";
  if (report.accuracy) {
    os << "in-KB accuracy: " << 100.0 * *report.accuracy << "\n";
  } else {
    os << "in-KB accuracy: n/a (empty evaluation set)\n";
  }
  os << "micro-F1: " << 100.0 * report.f1.f1 << " (P " << 100.0 * report.f1.precision << ", R "
     << 100.0 * report.f1.recall << ")";
  if (report.f1.no_predictions) os << "  [warning: no predictions]";
  os << "\n";
  if (!report.buckets.empty()) {
    os << "annotation-frequency buckets:\n";
    for (const BucketRow& row : report.buckets) {
      os << "  " << std::setw(5) << row.label << ": ";
      if (row.total == 0) {
        os << "n/a (0 mentions)\n";
      } else {
        os << 100.0 * row.accuracy() << " (" << row.correct << "/" << row.total << ")\n";
      }
    }
  }
  return os.str();
}

SeedAggregate aggregate_runs(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("aggregate_runs: no values");
  SeedAggregate out;
  out.runs = static_cast<int>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / double(out.runs);
  if (out.runs < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  double sd = std::sqrt(ss / double(out.runs - 1));
  // two-sided 97.5% Student t quantiles; large samples fall back to normal
  static const double t975[] = {12.7062, 4.3027, 3.1824, 2.7764, 2.5706, 2.4469, 2.3646,
                                2.3060,  2.2622, 2.2281, 2.2010, 2.1788, 2.1604, 2.1448,
                                2.1314,  2.1199, 2.1098, 2.1009, 2.0930, 2.0860, 2.0796,
                                2.0739,  2.0687, 2.0639, 2.0595, 2.0555, 2.0518, 2.0484,
                                2.0452,  2.0423};
  int df = out.runs - 1;
  double t = df <= 30 ? t975[df - 1] : 1.96;
  out.half_width_95 = t * sd / std::sqrt(double(out.runs));
  return out;
}

std::string report_lines(const EvalReport& report) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "total_mentions=" << report.total_mentions << "\n";
  os << "evaluated=" << report.evaluated << "\n";
  os << "counted=" << report.counted << "\n";
  os << "excluded_no_candidates=" << report.excluded_no_candidates << "\n";
  os << "excluded_gold_missing=" << report.excluded_gold_missing << "\n";
  os << "unannotated=" << report.unannotated << "\n";
  if (report.accuracy) os << "accuracy=" << *report.accuracy << "\n";
  os << "micro_f1=" << report.f1.f1 << "\n";
  os << "precision=" << report.f1.precision << "\n";
  os << "recall=" << report.f1.recall << "\n";
  for (const BucketRow& row : report.buckets) {
    os << "bucket." << row.label << ".total=" << row.total << "\n";
    os << "bucket." << row.label << ".correct=" << row.correct << "\n";
  }
  return os.str();
}

}  // namespace edkit
