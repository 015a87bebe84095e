#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gapseg {

using Label = std::size_t;
using GapLabels = std::vector<Label>;

enum class TagSetKind { kGap01, kBE, kBEMS };

// Label inventory and first-order constraints of one gap-labeling scheme.
//
// For the paired schemes each gap label names the character tags on its two
// sides ("ES": the left character ends a word, the right one is a single
// character word); the successors of a label are exactly the labels whose
// left tag equals its right tag.
struct TagSetSpec {
  TagSetKind kind;
  std::string name;
  std::vector<std::string> labels;
  std::vector<std::vector<Label>> successors;
  std::vector<bool> start_allowed;
  std::vector<bool> end_allowed;
  // true when the gap carrying this label is a word boundary.
  std::vector<bool> boundary;
  // Character tags flanking each label; '\0' for the {0,1} scheme.
  std::vector<char> left_tag;
  std::vector<char> right_tag;

  std::size_t size() const { return labels.size(); }
  bool allows(Label from, Label to) const;
  std::optional<Label> find(std::string_view label) const;
  // Label whose flanking tags are (left, right), if any.
  std::optional<Label> find_pair(char left, char right) const;
};

const TagSetSpec& tagset(TagSetKind kind);
const std::array<TagSetSpec, 3>& builtin_tagsets();

// Accepts "01", "be", "bems" (case-insensitive). Throws ConfigError.
TagSetKind parse_tagset_kind(std::string_view name);
std::string_view tagset_name(TagSetKind kind);

struct Violation {
  // 1-based index of the offending label.
  std::size_t position;
  std::string message;
};

// nullopt when the sequence satisfies the start, transition and end
// constraints. An empty sequence is valid.
std::optional<Violation> validate(const GapLabels& labels, const TagSetSpec& spec);

}  // namespace gapseg
