#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "gapseg/corpus.hpp"
#include "gapseg/tagset.hpp"

namespace gapseg {

// n−1 rows of per-label scores, one row per gap. Zero rows is legal (a
// one-character sentence).
class GapScores {
 public:
  GapScores() = default;
  GapScores(std::size_t rows, std::size_t labels, std::vector<double> data);
  GapScores(std::size_t rows, std::size_t labels) : GapScores(rows, labels, std::vector<double>(rows * labels)) {}

  std::size_t rows() const { return rows_; }
  std::size_t labels() const { return labels_; }
  double& at(std::size_t r, std::size_t l) { return data_[r * labels_ + l]; }
  double at(std::size_t r, std::size_t l) const { return data_[r * labels_ + l]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * labels_, labels_);
  }
  std::span<const double> data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t labels_ = 0;
  std::vector<double> data_;
};

enum class DecoderKind { kGreedy, kBeam, kViterbi };

DecoderKind parse_decoder_kind(std::string_view name);
std::string_view decoder_name(DecoderKind kind);

inline constexpr std::size_t kDefaultBeamWidth = 10;

// Per-row argmax; ties go to the lowest label index.
GapLabels greedy_labels(const GapScores& scores);

// Sum of the chosen label scores.
double total_score(const GapScores& scores, const GapLabels& labels);

// Exact best valid sequence under the tag set's constraints. Among equally
// scored sequences the lexicographically smallest label-index sequence wins.
GapLabels viterbi_decode(const GapScores& scores, const TagSetSpec& spec);

// Beam search over transition-legal extensions. Hypotheses that end in the same
// label are recombined (only the better one survives), so a width of at least
// the label count is exact and matches viterbi_decode. Same tie rule.
GapLabels beam_decode(const GapScores& scores, const TagSetSpec& spec,
                      std::size_t width = kDefaultBeamWidth);

GapLabels decode(const GapScores& scores, const TagSetSpec& spec, DecoderKind decoder,
                 std::size_t width = kDefaultBeamWidth);

// Decodes and converts to a segmentation. The {0,1} scheme always takes the
// greedy path since every label sequence is valid.
SegmentedSentence segment(std::u32string chars, const GapScores& scores, const TagSetSpec& spec,
                          DecoderKind decoder, std::size_t width = kDefaultBeamWidth);

// Debug dump: header "gap<TAB>label...", then one line per gap.
void write_scores_tsv(std::ostream& out, const GapScores& scores, const TagSetSpec& spec);

}  // namespace gapseg
