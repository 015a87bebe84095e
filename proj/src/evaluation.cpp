#include "gapseg/evaluation.hpp"

#include <cstdio>
#include <iomanip>

#include "gapseg/error.hpp"

namespace gapseg {

void EvalReport::finalize() {
  precision = predicted_words ? static_cast<double>(correct_words) / predicted_words : 0.0;
  recall = gold_words ? static_cast<double>(correct_words) / gold_words : 0.0;
  f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

std::string LengthBucket::name() const {
  return std::to_string(min_length) + "-" +
         (max_length == kUnbounded ? std::string("inf") : std::to_string(max_length));
}

std::vector<LengthBucket> default_length_buckets() {
  return {{0, 30}, {31, 60}, {61, 90}, {91, 120}, {121, LengthBucket::kUnbounded}};
}

std::size_t matching_words(const SegmentedSentence& gold, const SegmentedSentence& pred) {
  if (gold.chars != pred.chars) throw AlignmentError(0, "character sequences differ");
  // Both boundary lists are sorted; a word matches when its start and end
  // are boundaries of both.
  std::size_t correct = 0, i = 0, j = 0, gold_start = 0, pred_start = 0;
  while (i < gold.boundaries.size() && j < pred.boundaries.size()) {
    const std::size_t ge = gold.boundaries[i], pe = pred.boundaries[j];
    if (ge == pe) {
      if (gold_start == pred_start) ++correct;
      gold_start = ge, pred_start = pe;
      ++i, ++j;
    } else if (ge < pe) {
      gold_start = ge;
      ++i;
    } else {
      pred_start = pe;
      ++j;
    }
  }
  return correct;
}

namespace {

void check_aligned(const std::vector<SegmentedSentence>& gold,
                   const std::vector<SegmentedSentence>& pred) {
  if (gold.size() != pred.size()) {
    throw AlignmentError(std::min(gold.size(), pred.size()),
                         "corpora have " + std::to_string(gold.size()) + " and " +
                             std::to_string(pred.size()) + " sentences");
  }
}

void accumulate(EvalReport& r, const SegmentedSentence& gold, const SegmentedSentence& pred,
                std::size_t k) {
  if (gold.chars != pred.chars) throw AlignmentError(k, "character sequences differ");
  r.sentences += 1;
  r.gold_words += gold.boundaries.size();
  r.predicted_words += pred.boundaries.size();
  r.correct_words += matching_words(gold, pred);
}

}  // namespace

EvalReport f1(const std::vector<SegmentedSentence>& gold,
              const std::vector<SegmentedSentence>& pred) {
  check_aligned(gold, pred);
  EvalReport r;
  for (std::size_t k = 0; k < gold.size(); ++k) accumulate(r, gold[k], pred[k], k);
  r.finalize();
  return r;
}

std::vector<BucketReport> bucketed_f1(const std::vector<SegmentedSentence>& gold,
                                      const std::vector<SegmentedSentence>& pred,
                                      const std::vector<LengthBucket>& buckets) {
  check_aligned(gold, pred);
  std::vector<BucketReport> out;
  for (const auto& b : buckets) out.push_back({b, {}});
  for (std::size_t k = 0; k < gold.size(); ++k) {
    for (auto& br : out) {
      if (br.bucket.contains(gold[k].size())) {
        accumulate(br.report, gold[k], pred[k], k);
        break;
      }
    }
  }
  for (auto& br : out) br.report.finalize();
  return out;
}

std::vector<SegmentedSentence> hybrid_combine(const std::vector<SegmentedSentence>& base,
                                              const std::vector<SegmentedSentence>& ours,
                                              std::size_t threshold) {
  check_aligned(base, ours);
  std::vector<SegmentedSentence> out;
  out.reserve(base.size());
  for (std::size_t k = 0; k < base.size(); ++k) {
    if (base[k].chars != ours[k].chars) throw AlignmentError(k, "character sequences differ");
    out.push_back(base[k].size() > threshold ? ours[k] : base[k]);
  }
  return out;
}

namespace {

void table_row(std::ostream& out, const std::string& name, const EvalReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %9zu %9zu %9zu %9zu %9.4f %9.4f %9.4f\n", name.c_str(),
                r.sentences, r.gold_words, r.predicted_words, r.correct_words, r.precision,
                r.recall, r.f1);
  out << buf;
}

void kv_rows(std::ostream& out, const std::string& bucket, const EvalReport& r) {
  char buf[64];
  auto real = [&](const char* metric, double v) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    out << "metric=" << metric << " bucket=" << bucket << " value=" << buf << '\n';
  };
  auto count = [&](const char* metric, std::size_t v) {
    out << "metric=" << metric << " bucket=" << bucket << " value=" << v << '\n';
  };
  real("precision", r.precision);
  real("recall", r.recall);
  real("f1", r.f1);
  count("sentences", r.sentences);
  count("gold_words", r.gold_words);
  count("predicted_words", r.predicted_words);
  count("correct_words", r.correct_words);
}

}  // namespace

void write_report_table(std::ostream& out, const EvalReport& overall,
                        const std::vector<BucketReport>& buckets) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %9s %9s %9s %9s %9s %9s %9s\n", "bucket", "sentences",
                "gold", "predicted", "correct", "P", "R", "F1");
  out << buf;
  table_row(out, "all", overall);
  for (const auto& b : buckets) table_row(out, b.bucket.name(), b.report);
}

void write_report_kv(std::ostream& out, const EvalReport& overall,
                     const std::vector<BucketReport>& buckets) {
  kv_rows(out, "all", overall);
  for (const auto& b : buckets) kv_rows(out, b.bucket.name(), b.report);
}

}  // namespace gapseg
