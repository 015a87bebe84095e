#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gapseg/tagset.hpp"
#include "gapseg/tensor.hpp"

namespace gapseg {

// A character sequence with word-end positions. boundaries are strictly
// increasing, each in 1..n, and the last one equals n.
struct SegmentedSentence {
  std::u32string chars;
  std::vector<std::size_t> boundaries;

  std::size_t size() const { return chars.size(); }
  std::vector<std::u32string> words() const;
  // Throws ContractError describing the first broken invariant.
  void check() const;

  static SegmentedSentence from_words(const std::vector<std::u32string>& words);
  // The whole sequence as a single word.
  static SegmentedSentence unsegmented(std::u32string chars);

  friend bool operator==(const SegmentedSentence&, const SegmentedSentence&) = default;
};

struct CorpusLine {
  std::size_t line_number;  // 1-based
  SegmentedSentence sentence;
};

// Parses one line of segmented text; nullopt for a blank line. line_number is
// only used in error messages.
std::optional<SegmentedSentence> parse_line(std::string_view line, std::size_t line_number = 1);

// One sentence per non-blank line. Throws IngestionError on malformed UTF-8.
std::vector<SegmentedSentence> parse_corpus(std::istream& in);
std::vector<CorpusLine> parse_corpus_lines(std::istream& in);

// Unsegmented text: every whitespace character is dropped.
std::u32string parse_raw_line(std::string_view line, std::size_t line_number = 1);

// Words joined with single ASCII spaces.
std::string render(const SegmentedSentence& s);
void write_corpus(std::ostream& out, const std::vector<SegmentedSentence>& corpus);

GapLabels to_gap_labels(const SegmentedSentence& s, const TagSetSpec& spec);
// Inverse of to_gap_labels. Throws ContractError on a length mismatch and
// DecodeError when the labels violate the tag set's constraints.
SegmentedSentence from_gap_labels(std::u32string chars, const GapLabels& labels,
                                  const TagSetSpec& spec);

// Character index map; index 0 is reserved for unknown characters.
class Vocabulary {
 public:
  static constexpr std::size_t kUnknown = 0;

  Vocabulary() = default;
  // Characters in order of first appearance.
  static Vocabulary build(const std::vector<SegmentedSentence>& corpus);
  static Vocabulary from_chars(const std::vector<char32_t>& chars);

  std::size_t size() const { return chars_.size() + 1; }
  std::size_t index(char32_t c) const;
  bool contains(char32_t c) const { return ids_.count(c) != 0; }
  std::vector<std::size_t> encode(std::u32string_view text) const;
  // Known characters; chars()[k] has index k + 1.
  const std::vector<char32_t>& chars() const { return chars_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.chars_ == b.chars_; }

 private:
  void add(char32_t c);

  std::vector<char32_t> chars_;
  std::unordered_map<char32_t, std::size_t> ids_;
};

struct EmbeddingTable {
  nn::Tensor rows;  // vocabulary size × dim
  bool trainable = true;
};

struct EmbeddingLoad {
  EmbeddingTable table;
  std::size_t copied = 0;
  std::size_t ignored = 0;
};

// Uniform(-0.05, 0.05) rows.
EmbeddingTable random_embeddings(const Vocabulary& vocab, std::size_t dim, std::mt19937_64& rng);

// word2vec text format: "count dim" header, then "token v1 ... v_dim" lines.
// Rows of in-vocabulary characters are copied; the rest stay random. Tokens
// that are not a single known character are counted as ignored.
EmbeddingLoad load_embeddings(std::istream& in, const Vocabulary& vocab, std::size_t dim,
                              std::mt19937_64& rng);
// Writes the rows of every known character in the same text format, with
// values printed so they parse back bit-exactly.
void dump_embeddings(std::ostream& out, const EmbeddingTable& table, const Vocabulary& vocab);

struct DevSplit {
  std::vector<SegmentedSentence> train;
  std::vector<SegmentedSentence> dev;
  std::optional<std::string> warning;
};

// The last floor(N/10) sentences (at least one when N >= 2) become dev data.
DevSplit dev_split(const std::vector<SegmentedSentence>& corpus);

}  // namespace gapseg
