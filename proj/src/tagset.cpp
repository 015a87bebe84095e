#include "gapseg/tagset.hpp"

#include <algorithm>
#include <cctype>
#include <utility>

#include "gapseg/error.hpp"

namespace gapseg {

namespace {

using TransitionRow = std::pair<const char*, std::vector<const char*>>;

// Builds a paired scheme from its transition table. Start, end and boundary
// sets follow from the flanking character tags:
//   start:    left tag opens a word (B, or S in the 4-tag scheme)
//   end:      right tag may close a sentence
//   boundary: right tag opens a word
TagSetSpec paired(TagSetKind kind, std::string name, const std::vector<TransitionRow>& table,
                  std::string_view word_openers, std::string_view word_closers) {
  TagSetSpec spec;
  spec.kind = kind;
  spec.name = std::move(name);
  for (const auto& [label, succ] : table) spec.labels.emplace_back(label);
  for (const auto& label : spec.labels) {
    spec.left_tag.push_back(label[0]);
    spec.right_tag.push_back(label[1]);
    spec.start_allowed.push_back(word_openers.find(label[0]) != std::string_view::npos);
    spec.end_allowed.push_back(word_closers.find(label[1]) != std::string_view::npos);
    spec.boundary.push_back(word_openers.find(label[1]) != std::string_view::npos);
  }
  for (const auto& [label, succ] : table) {
    std::vector<Label> ids;
    for (const char* s : succ) ids.push_back(*spec.find(s));
    std::sort(ids.begin(), ids.end());
    spec.successors.push_back(std::move(ids));
  }
  return spec;
}

std::array<TagSetSpec, 3> make_builtin() {
  TagSetSpec gap01;
  gap01.kind = TagSetKind::kGap01;
  gap01.name = "01";
  gap01.labels = {"0", "1"};
  gap01.successors = {{0, 1}, {0, 1}};
  gap01.start_allowed = {true, true};
  gap01.end_allowed = {true, true};
  gap01.boundary = {false, true};
  gap01.left_tag = {'\0', '\0'};
  gap01.right_tag = {'\0', '\0'};

  // 2-tag words: B, BE, BEE, ... so any tag may end a sentence.
  TagSetSpec be = paired(TagSetKind::kBE, "be",
                         {
                             {"BB", {"BB", "BE"}},
                             {"BE", {"EB", "EE"}},
                             {"EB", {"BB", "BE"}},
                             {"EE", {"EB", "EE"}},
                         },
                         "B", "BE");

  // 4-tag words: S, BE, BME, BMME, ...
  TagSetSpec bems = paired(TagSetKind::kBEMS, "bems",
                           {
                               {"BE", {"EB", "ES"}},
                               {"BM", {"ME", "MM"}},
                               {"EB", {"BE", "BM"}},
                               {"ES", {"SB", "SS"}},
                               {"SS", {"SS", "SB"}},
                               {"SB", {"BE", "BM"}},
                               {"ME", {"EB", "ES"}},
                               {"MM", {"MM", "ME"}},
                           },
                           "BS", "ES");
  return {std::move(gap01), std::move(be), std::move(bems)};
}

}  // namespace

bool TagSetSpec::allows(Label from, Label to) const {
  const auto& succ = successors.at(from);
  return std::find(succ.begin(), succ.end(), to) != succ.end();
}

std::optional<Label> TagSetSpec::find(std::string_view label) const {
  for (Label i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return i;
  }
  return std::nullopt;
}

std::optional<Label> TagSetSpec::find_pair(char left, char right) const {
  for (Label i = 0; i < labels.size(); ++i) {
    if (left_tag[i] == left && right_tag[i] == right) return i;
  }
  return std::nullopt;
}

const std::array<TagSetSpec, 3>& builtin_tagsets() {
  static const std::array<TagSetSpec, 3> sets = make_builtin();
  return sets;
}

const TagSetSpec& tagset(TagSetKind kind) {
  return builtin_tagsets()[static_cast<std::size_t>(kind)];
}

TagSetKind parse_tagset_kind(std::string_view name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "01") return TagSetKind::kGap01;
  if (lower == "be") return TagSetKind::kBE;
  if (lower == "bems" || lower == "bmes") return TagSetKind::kBEMS;
  throw ConfigError("unknown tag set '" + std::string(name) + "' (expected 01, be or bems)");
}

std::string_view tagset_name(TagSetKind kind) { return tagset(kind).name; }

std::optional<Violation> validate(const GapLabels& labels, const TagSetSpec& spec) {
  if (labels.empty()) return std::nullopt;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= spec.size()) {
      return Violation{i + 1, "label index " + std::to_string(labels[i]) + " is not in tag set " +
                                  spec.name};
    }
  }
  if (!spec.start_allowed[labels.front()]) {
    return Violation{1, spec.labels[labels.front()] + " cannot start a sentence"};
  }
  for (std::size_t i = 1; i < labels.size(); ++i) {
    if (!spec.allows(labels[i - 1], labels[i])) {
      return Violation{i + 1, spec.labels[labels[i - 1]] + " cannot precede " + spec.labels[labels[i]]};
    }
  }
  if (!spec.end_allowed[labels.back()]) {
    return Violation{labels.size(), spec.labels[labels.back()] + " cannot end a sentence"};
  }
  return std::nullopt;
}

}  // namespace gapseg
