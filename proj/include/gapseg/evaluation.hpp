#pragma once

#include <cstddef>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "gapseg/corpus.hpp"

namespace gapseg {

struct EvalReport {
  std::size_t sentences = 0;
  std::size_t gold_words = 0;
  std::size_t predicted_words = 0;
  std::size_t correct_words = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  // Recomputes precision, recall and F1 from the counts.
  void finalize();
};

// Inclusive character-count range; max_length == npos means unbounded.
struct LengthBucket {
  static constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

  std::size_t min_length;
  std::size_t max_length;

  bool contains(std::size_t n) const { return n >= min_length && n <= max_length; }
  std::string name() const;  // "0-30", "121-inf"
};

// 0-30, 31-60, 61-90, 91-120, 121-inf.
std::vector<LengthBucket> default_length_buckets();

struct BucketReport {
  LengthBucket bucket;
  EvalReport report;
};

// Words whose (start, end) span appears in both segmentations. Throws
// AlignmentError (index 0) when the characters differ.
std::size_t matching_words(const SegmentedSentence& gold, const SegmentedSentence& pred);

// Micro-averaged word precision/recall/F1 over aligned sentence pairs.
EvalReport f1(const std::vector<SegmentedSentence>& gold,
              const std::vector<SegmentedSentence>& pred);

std::vector<BucketReport> bucketed_f1(const std::vector<SegmentedSentence>& gold,
                                      const std::vector<SegmentedSentence>& pred,
                                      const std::vector<LengthBucket>& buckets);

inline constexpr std::size_t kDefaultHybridThreshold = 90;

// Picks ours[k] for sentences longer than `threshold` characters, base[k]
// otherwise.
std::vector<SegmentedSentence> hybrid_combine(const std::vector<SegmentedSentence>& base,
                                              const std::vector<SegmentedSentence>& ours,
                                              std::size_t threshold = kDefaultHybridThreshold);

// Human-readable table.
void write_report_table(std::ostream& out, const EvalReport& overall,
                        const std::vector<BucketReport>& buckets = {});
// One "metric=<name> bucket=<bucket> value=<v>" line per metric and bucket.
void write_report_kv(std::ostream& out, const EvalReport& overall,
                     const std::vector<BucketReport>& buckets = {});

}  // namespace gapseg
