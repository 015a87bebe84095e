#include "gapseg/corpus.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "gapseg/error.hpp"
#include "gapseg/utf8.hpp"

namespace gapseg {

std::vector<std::u32string> SegmentedSentence::words() const {
  std::vector<std::u32string> out;
  std::size_t start = 0;
  for (std::size_t end : boundaries) {
    out.push_back(chars.substr(start, end - start));
    start = end;
  }
  return out;
}

void SegmentedSentence::check() const {
  if (chars.empty()) throw ContractError("sentence has no characters");
  if (boundaries.empty()) throw ContractError("sentence has no word boundaries");
  std::size_t prev = 0;
  for (std::size_t b : boundaries) {
    if (b <= prev || b > chars.size()) {
      throw ContractError("word boundary " + std::to_string(b) + " invalid for a sentence of " +
                          std::to_string(chars.size()) + " characters");
    }
    prev = b;
  }
  if (boundaries.back() != chars.size()) {
    throw ContractError("last word boundary " + std::to_string(boundaries.back()) +
                        " does not close the sentence of length " + std::to_string(chars.size()));
  }
}

SegmentedSentence SegmentedSentence::from_words(const std::vector<std::u32string>& words) {
  SegmentedSentence s;
  for (const auto& w : words) {
    if (w.empty()) continue;
    s.chars += w;
    s.boundaries.push_back(s.chars.size());
  }
  return s;
}

SegmentedSentence SegmentedSentence::unsegmented(std::u32string chars) {
  SegmentedSentence s;
  s.boundaries.push_back(chars.size());
  s.chars = std::move(chars);
  return s;
}

namespace {

std::u32string decode_line(std::string_view line, std::size_t line_number) {
  std::size_t offset = 0;
  auto decoded = utf8::decode(line, &offset);
  if (!decoded) {
    throw IngestionError(line_number, "malformed UTF-8 at byte " + std::to_string(offset));
  }
  return std::move(*decoded);
}

std::string_view chomp(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

std::optional<SegmentedSentence> parse_line(std::string_view line, std::size_t line_number) {
  const std::u32string text = decode_line(chomp(line), line_number);
  std::vector<std::u32string> words(1);
  for (char32_t c : text) {
    if (utf8::is_separator(c)) {
      if (!words.back().empty()) words.emplace_back();
    } else if (!utf8::is_other_space(c)) {
      words.back().push_back(c);
    }
  }
  SegmentedSentence s = SegmentedSentence::from_words(words);
  if (s.chars.empty()) return std::nullopt;
  return s;
}

std::vector<CorpusLine> parse_corpus_lines(std::istream& in) {
  std::vector<CorpusLine> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto s = parse_line(line, number)) out.push_back({number, std::move(*s)});
  }
  return out;
}

std::vector<SegmentedSentence> parse_corpus(std::istream& in) {
  std::vector<SegmentedSentence> out;
  for (auto& l : parse_corpus_lines(in)) out.push_back(std::move(l.sentence));
  return out;
}

std::u32string parse_raw_line(std::string_view line, std::size_t line_number) {
  std::u32string out;
  for (char32_t c : decode_line(chomp(line), line_number)) {
    if (!utf8::is_separator(c) && !utf8::is_other_space(c)) out.push_back(c);
  }
  return out;
}

std::string render(const SegmentedSentence& s) {
  std::string out;
  std::size_t start = 0;
  for (std::size_t end : s.boundaries) {
    if (start) out.push_back(' ');
    out += utf8::encode(std::u32string_view(s.chars).substr(start, end - start));
    start = end;
  }
  return out;
}

void write_corpus(std::ostream& out, const std::vector<SegmentedSentence>& corpus) {
  for (const auto& s : corpus) out << render(s) << '\n';
}

namespace {

// Per-character tags of the paired schemes.
std::string character_tags(const SegmentedSentence& s, TagSetKind kind) {
  std::string tags(s.size(), '?');
  std::size_t start = 0;
  for (std::size_t end : s.boundaries) {
    const std::size_t len = end - start;
    for (std::size_t i = start; i < end; ++i) {
      if (kind == TagSetKind::kBE) {
        tags[i] = i == start ? 'B' : 'E';
      } else if (len == 1) {
        tags[i] = 'S';
      } else {
        tags[i] = i == start ? 'B' : (i + 1 == end ? 'E' : 'M');
      }
    }
    start = end;
  }
  return tags;
}

}  // namespace

GapLabels to_gap_labels(const SegmentedSentence& s, const TagSetSpec& spec) {
  s.check();
  const std::size_t n = s.size();
  GapLabels labels;
  labels.reserve(n - 1);
  if (spec.kind == TagSetKind::kGap01) {
    std::vector<bool> is_end(n + 1, false);
    for (std::size_t b : s.boundaries) is_end[b] = true;
    for (std::size_t i = 1; i < n; ++i) labels.push_back(is_end[i] ? 1 : 0);
    return labels;
  }
  const std::string tags = character_tags(s, spec.kind);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    auto label = spec.find_pair(tags[i], tags[i + 1]);
    if (!label) {
      throw ContractError(std::string("no ") + spec.name + " label for tag pair " + tags[i] +
                          tags[i + 1]);
    }
    labels.push_back(*label);
  }
  return labels;
}

SegmentedSentence from_gap_labels(std::u32string chars, const GapLabels& labels,
                                  const TagSetSpec& spec) {
  if (chars.empty()) throw ContractError("from_gap_labels: empty character sequence");
  if (labels.size() + 1 != chars.size()) {
    throw ContractError("from_gap_labels: " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(chars.size()) + " characters");
  }
  if (auto v = validate(labels, spec)) {
    throw DecodeError("inconsistent " + spec.name + " labels at position " +
                      std::to_string(v->position) + ": " + v->message);
  }
  SegmentedSentence s;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (spec.boundary[labels[i]]) s.boundaries.push_back(i + 1);
  }
  s.boundaries.push_back(chars.size());
  s.chars = std::move(chars);
  return s;
}

// Vocabulary -----------------------------------------------------------------

void Vocabulary::add(char32_t c) {
  if (ids_.count(c)) return;
  chars_.push_back(c);
  ids_.emplace(c, chars_.size());
}

Vocabulary Vocabulary::build(const std::vector<SegmentedSentence>& corpus) {
  Vocabulary v;
  for (const auto& s : corpus)
    for (char32_t c : s.chars) v.add(c);
  return v;
}

Vocabulary Vocabulary::from_chars(const std::vector<char32_t>& chars) {
  Vocabulary v;
  for (char32_t c : chars) {
    if (v.contains(c)) throw ContractError("duplicate character in vocabulary");
    v.add(c);
  }
  return v;
}

std::size_t Vocabulary::index(char32_t c) const {
  auto it = ids_.find(c);
  return it == ids_.end() ? kUnknown : it->second;
}

std::vector<std::size_t> Vocabulary::encode(std::u32string_view text) const {
  std::vector<std::size_t> out;
  out.reserve(text.size());
  for (char32_t c : text) out.push_back(index(c));
  return out;
}

// Embeddings -----------------------------------------------------------------

EmbeddingTable random_embeddings(const Vocabulary& vocab, std::size_t dim, std::mt19937_64& rng) {
  EmbeddingTable table{nn::Tensor({vocab.size(), dim}), true};
  nn::fill_uniform(table.rows, rng, -0.05, 0.05);
  return table;
}

EmbeddingLoad load_embeddings(std::istream& in, const Vocabulary& vocab, std::size_t dim,
                              std::mt19937_64& rng) {
  EmbeddingLoad result;
  result.table = random_embeddings(vocab, dim, rng);

  std::string line;
  if (!std::getline(in, line)) throw IngestionError(1, "missing embedding header");
  std::size_t count = 0, file_dim = 0;
  {
    std::istringstream header(line);
    std::string extra;
    if (!(header >> count >> file_dim) || (header >> extra)) {
      throw IngestionError(1, "expected header 'count dim'");
    }
  }
  if (file_dim != dim) {
    throw ConfigError("embedding file has dimension " + std::to_string(file_dim) +
                      " but the model expects " + std::to_string(dim));
  }

  std::size_t number = 1, entries = 0;
  std::vector<double> values(dim);
  while (std::getline(in, line)) {
    ++number;
    std::string_view rest = chomp(line);
    if (rest.find_first_not_of(" \t") == std::string_view::npos) continue;
    const auto token_end = rest.find(' ');
    if (token_end == std::string_view::npos || token_end == 0) {
      throw IngestionError(number, "expected a token followed by " + std::to_string(dim) + " values");
    }
    const std::u32string token = decode_line(rest.substr(0, token_end), number);
    std::string numbers(rest.substr(token_end));
    const char* p = numbers.c_str();
    for (std::size_t k = 0; k < dim; ++k) {
      char* end = nullptr;
      values[k] = std::strtod(p, &end);
      if (end == p || !std::isfinite(values[k])) {
        throw IngestionError(number, "expected " + std::to_string(dim) + " numeric values");
      }
      p = end;
    }
    while (*p == ' ' || *p == '\t') ++p;
    if (*p != '\0') throw IngestionError(number, "more than " + std::to_string(dim) + " values");
    ++entries;

    if (token.size() != 1 || !vocab.contains(token[0])) {
      ++result.ignored;
      continue;
    }
    auto row = result.table.rows.row(vocab.index(token[0]));
    std::copy(values.begin(), values.end(), row.begin());
    ++result.copied;
  }
  if (entries != count) {
    throw IngestionError(number, "header announces " + std::to_string(count) + " entries but " +
                                     std::to_string(entries) + " were found");
  }
  return result;
}

void dump_embeddings(std::ostream& out, const EmbeddingTable& table, const Vocabulary& vocab) {
  const std::size_t dim = table.rows.cols();
  out << vocab.chars().size() << ' ' << dim << '\n';
  char buf[32];
  for (std::size_t k = 0; k < vocab.chars().size(); ++k) {
    std::string line;
    utf8::append(line, vocab.chars()[k]);
    for (double v : table.rows.row(k + 1)) {
      std::snprintf(buf, sizeof buf, " %.17g", v);
      line += buf;
    }
    out << line << '\n';
  }
}

// Dev split ------------------------------------------------------------------

DevSplit dev_split(const std::vector<SegmentedSentence>& corpus) {
  DevSplit split;
  const std::size_t n = corpus.size();
  std::size_t dev = n / 10;
  if (n >= 2 && dev == 0) dev = 1;
  if (n < 2) split.warning = "corpus has fewer than 2 sentences; development set is empty";
  split.train.assign(corpus.begin(), corpus.end() - static_cast<std::ptrdiff_t>(dev));
  split.dev.assign(corpus.end() - static_cast<std::ptrdiff_t>(dev), corpus.end());
  return split;
}

}  // namespace gapseg
