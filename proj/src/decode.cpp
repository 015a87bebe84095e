#include "gapseg/decode.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

#include "gapseg/error.hpp"

namespace gapseg {

GapScores::GapScores(std::size_t rows, std::size_t labels, std::vector<double> data)
    : rows_(rows), labels_(labels), data_(std::move(data)) {
  if (data_.size() != rows_ * labels_) {
    throw ShapeError("score matrix data length " + std::to_string(data_.size()) + " does not match " +
                     std::to_string(rows_) + "x" + std::to_string(labels_));
  }
}

DecoderKind parse_decoder_kind(std::string_view name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "greedy") return DecoderKind::kGreedy;
  if (lower == "beam") return DecoderKind::kBeam;
  if (lower == "viterbi") return DecoderKind::kViterbi;
  throw ConfigError("unknown decoder '" + std::string(name) + "' (expected greedy, beam or viterbi)");
}

std::string_view decoder_name(DecoderKind kind) {
  switch (kind) {
    case DecoderKind::kGreedy:
      return "greedy";
    case DecoderKind::kBeam:
      return "beam";
    case DecoderKind::kViterbi:
      return "viterbi";
  }
  return "?";
}

GapLabels greedy_labels(const GapScores& scores) {
  GapLabels out(scores.rows());
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    auto row = scores.row(r);
    out[r] = static_cast<Label>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double total_score(const GapScores& scores, const GapLabels& labels) {
  if (labels.size() != scores.rows()) throw ContractError("total_score: length mismatch");
  double s = 0.0;
  for (std::size_t r = 0; r < labels.size(); ++r) s += scores.at(r, labels[r]);
  return s;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_labels(const GapScores& scores, const TagSetSpec& spec) {
  if (scores.rows() > 0 && scores.labels() != spec.size()) {
    throw ConfigError("score matrix has " + std::to_string(scores.labels()) + " labels but tag set " +
                      spec.name + " has " + std::to_string(spec.size()));
  }
}

// reach[r][l]: some end-allowed label is reachable from l in exactly r steps.
std::vector<std::vector<bool>> reachability(const TagSetSpec& spec, std::size_t max_steps) {
  std::vector<std::vector<bool>> reach(max_steps + 1, std::vector<bool>(spec.size(), false));
  reach[0] = spec.end_allowed;
  for (std::size_t r = 1; r <= max_steps; ++r)
    for (Label l = 0; l < spec.size(); ++l)
      for (Label s : spec.successors[l])
        if (reach[r - 1][s]) reach[r][l] = true;
  return reach;
}

std::vector<std::vector<Label>> predecessors(const TagSetSpec& spec) {
  std::vector<std::vector<Label>> pred(spec.size());
  for (Label p = 0; p < spec.size(); ++p)
    for (Label s : spec.successors[p]) pred[s].push_back(p);
  return pred;
}

// Partial hypotheses stored as a back-pointer lattice, one layer per gap.
struct Cell {
  double score;
  Label label;
  std::size_t parent;  // index into the previous layer
};

using Lattice = std::vector<std::vector<Cell>>;

GapLabels path(const Lattice& lattice, std::size_t step, std::size_t index) {
  GapLabels out(step + 1);
  for (std::size_t i = step + 1; i-- > 0;) {
    const Cell& c = lattice[i][index];
    out[i] = c.label;
    index = c.parent;
  }
  return out;
}

// Strict "a ranks before b": higher score, then lexicographically smaller path.
bool ranks_before(const Lattice& lattice, std::size_t step, std::size_t a, std::size_t b) {
  const Cell& ca = lattice[step][a];
  const Cell& cb = lattice[step][b];
  if (ca.score != cb.score) return ca.score > cb.score;
  return path(lattice, step, a) < path(lattice, step, b);
}

std::size_t best_final(const Lattice& lattice, const TagSetSpec& spec) {
  const std::size_t last = lattice.size() - 1;
  std::size_t best = static_cast<std::size_t>(-1);
  for (std::size_t k = 0; k < lattice[last].size(); ++k) {
    const Cell& c = lattice[last][k];
    if (!spec.end_allowed[c.label] || c.score == kNegInf) continue;
    if (best == static_cast<std::size_t>(-1) || ranks_before(lattice, last, k, best)) best = k;
  }
  if (best == static_cast<std::size_t>(-1)) {
    throw DecodeError("no valid " + spec.name + " label sequence of length " +
                      std::to_string(lattice.size()));
  }
  return best;
}

}  // namespace

GapLabels viterbi_decode(const GapScores& scores, const TagSetSpec& spec) {
  check_labels(scores, spec);
  const std::size_t n = scores.rows();
  if (n == 0) return {};
  const std::size_t L = spec.size();
  const auto pred = predecessors(spec);

  // Layer i holds one cell per label, indexed by label.
  Lattice lattice(n, std::vector<Cell>(L, Cell{kNegInf, 0, 0}));
  for (Label l = 0; l < L; ++l) {
    lattice[0][l] = Cell{spec.start_allowed[l] ? scores.at(0, l) : kNegInf, l, 0};
  }
  for (std::size_t i = 1; i < n; ++i) {
    for (Label l = 0; l < L; ++l) {
      Cell& cell = lattice[i][l];
      cell.label = l;
      std::size_t best = static_cast<std::size_t>(-1);
      for (Label p : pred[l]) {
        if (lattice[i - 1][p].score == kNegInf) continue;
        if (best == static_cast<std::size_t>(-1) || ranks_before(lattice, i - 1, p, best)) best = p;
      }
      if (best == static_cast<std::size_t>(-1)) continue;
      cell.score = lattice[i - 1][best].score + scores.at(i, l);
      cell.parent = best;
    }
  }
  return path(lattice, n - 1, best_final(lattice, spec));
}

GapLabels beam_decode(const GapScores& scores, const TagSetSpec& spec, std::size_t width) {
  if (width == 0) throw ContractError("beam width must be at least 1");
  check_labels(scores, spec);
  const std::size_t n = scores.rows();
  if (n == 0) return {};
  const std::size_t L = spec.size();
  const auto reach = reachability(spec, n - 1);

  Lattice lattice;
  lattice.reserve(n);
  std::vector<std::size_t> slot(L);  // label -> index of its candidate in the layer
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  auto prune = [&](std::size_t step) {
    auto& layer = lattice[step];
    std::vector<std::size_t> order(layer.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return ranks_before(lattice, step, a, b); });
    if (order.size() > width) order.resize(width);
    std::vector<Cell> kept;
    kept.reserve(order.size());
    for (std::size_t k : order) kept.push_back(layer[k]);
    layer = std::move(kept);
  };

  lattice.emplace_back();
  for (Label l = 0; l < L; ++l) {
    if (spec.start_allowed[l] && reach[n - 1][l]) lattice[0].push_back(Cell{scores.at(0, l), l, 0});
  }
  prune(0);

  for (std::size_t i = 1; i < n; ++i) {
    lattice.emplace_back();
    std::fill(slot.begin(), slot.end(), kNone);
    const auto& prev = lattice[i - 1];
    for (std::size_t h = 0; h < prev.size(); ++h) {
      for (Label l : spec.successors[prev[h].label]) {
        if (!reach[n - 1 - i][l]) continue;
        Cell cand{prev[h].score + scores.at(i, l), l, h};
        auto& layer = lattice[i];
        if (slot[l] == kNone) {
          slot[l] = layer.size();
          layer.push_back(cand);
          continue;
        }
        // Recombine with the existing hypothesis ending in l. Both extend by
        // the same score, so compare the parents.
        Cell& held = layer[slot[l]];
        if (ranks_before(lattice, i - 1, h, held.parent)) held = cand;
      }
    }
    if (lattice[i].empty()) {
      throw DecodeError("beam emptied at gap " + std::to_string(i + 1));
    }
    prune(i);
  }
  return path(lattice, n - 1, best_final(lattice, spec));
}

GapLabels decode(const GapScores& scores, const TagSetSpec& spec, DecoderKind decoder,
                 std::size_t width) {
  switch (decoder) {
    case DecoderKind::kGreedy:
      check_labels(scores, spec);
      return greedy_labels(scores);
    case DecoderKind::kBeam:
      return beam_decode(scores, spec, width);
    case DecoderKind::kViterbi:
      return viterbi_decode(scores, spec);
  }
  throw ContractError("unknown decoder");
}

SegmentedSentence segment(std::u32string chars, const GapScores& scores, const TagSetSpec& spec,
                          DecoderKind decoder, std::size_t width) {
  if (chars.empty()) throw ContractError("segment: empty sentence");
  if (scores.rows() + 1 != chars.size()) {
    throw ContractError("segment: " + std::to_string(scores.rows()) + " score rows for " +
                        std::to_string(chars.size()) + " characters");
  }
  if (spec.kind == TagSetKind::kGap01) {
    decoder = DecoderKind::kGreedy;
  } else if (decoder == DecoderKind::kGreedy) {
    throw ConfigError("the greedy decoder is only valid with tag set 01");
  }
  return from_gap_labels(std::move(chars), decode(scores, spec, decoder, width), spec);
}

void write_scores_tsv(std::ostream& out, const GapScores& scores, const TagSetSpec& spec) {
  out << "gap";
  for (const auto& l : spec.labels) out << '\t' << l;
  out << '\n';
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    out << r + 1;
    for (double v : scores.row(r)) out << '\t' << v;
    out << '\n';
  }
}

}  // namespace gapseg
