#include <doctest.h>

#include <set>
#include <sstream>

#include "gapseg/decode.hpp"
#include "gapseg/error.hpp"
#include "support/oracles.hpp"

using namespace gapseg;
using gapseg::testing::brute_force_decode;
using gapseg::testing::random_scores;
using gapseg::testing::random_sentence;

namespace {

const TagSetSpec& tbe() { return tagset(TagSetKind::kBE); }
const TagSetSpec& tbems() { return tagset(TagSetKind::kBEMS); }

std::set<std::string> successor_names(const TagSetSpec& spec, const char* label) {
  std::set<std::string> out;
  for (Label l : spec.successors[*spec.find(label)]) out.insert(spec.labels[l]);
  return out;
}

GapLabels by_name(const TagSetSpec& spec, std::initializer_list<const char*> names) {
  GapLabels out;
  for (const char* n : names) out.push_back(*spec.find(n));
  return out;
}

}  // namespace

TEST_SUITE("tagset-decode") {
  TEST_CASE("builtin transition tables") {
    const auto& be = tbe();
    CHECK(be.labels == std::vector<std::string>{"BB", "BE", "EB", "EE"});
    CHECK(successor_names(be, "BE") == std::set<std::string>{"EB", "EE"});
    CHECK(successor_names(be, "BB") == std::set<std::string>{"BB", "BE"});
    CHECK(successor_names(be, "EB") == std::set<std::string>{"BB", "BE"});
    CHECK(successor_names(be, "EE") == std::set<std::string>{"EB", "EE"});

    const auto& bems = tbems();
    CHECK(bems.size() == 8);
    const std::pair<const char*, std::set<std::string>> table[] = {
        {"BE", {"EB", "ES"}}, {"BM", {"ME", "MM"}}, {"EB", {"BE", "BM"}}, {"ES", {"SB", "SS"}},
        {"SS", {"SS", "SB"}}, {"SB", {"BE", "BM"}}, {"ME", {"EB", "ES"}}, {"MM", {"MM", "ME"}}};
    for (const auto& [label, succ] : table) CHECK(successor_names(bems, label) == succ);
  }

  TEST_CASE("paired tag sets have exactly two successors that chain by tag") {
    for (const auto* spec : {&tbe(), &tbems()}) {
      for (Label a = 0; a < spec->size(); ++a) {
        CHECK(spec->successors[a].size() == 2);
        for (Label b : spec->successors[a]) CHECK(spec->left_tag[b] == spec->right_tag[a]);
      }
    }
    const auto& t01 = tagset(TagSetKind::kGap01);
    for (Label a = 0; a < 2; ++a) CHECK(t01.successors[a].size() == 2);
  }

  TEST_CASE("start, end and boundary sets") {
    const auto& bems = tbems();
    for (Label l = 0; l < bems.size(); ++l) {
      const char left = bems.left_tag[l], right = bems.right_tag[l];
      CHECK(bems.start_allowed[l] == (left == 'B' || left == 'S'));
      CHECK(bems.end_allowed[l] == (right == 'E' || right == 'S'));
      CHECK(bems.boundary[l] == (right == 'B' || right == 'S'));
    }
    const auto& be = tbe();
    for (Label l = 0; l < be.size(); ++l) {
      CHECK(be.start_allowed[l] == (be.left_tag[l] == 'B'));
      CHECK(be.end_allowed[l]);
      CHECK(be.boundary[l] == (be.right_tag[l] == 'B'));
    }
  }

  TEST_CASE("no dead ends: every start label completes at every length from 2") {
    for (const auto& spec : builtin_tagsets()) {
      for (std::size_t n = 2; n <= 6; ++n) {
        for (Label s = 0; s < spec.size(); ++s) {
          if (!spec.start_allowed[s]) continue;
          bool found = false;
          for (const auto& seq : gapseg::testing::enumerate_valid(spec, n)) found |= seq[0] == s;
          CHECK(found);
        }
      }
    }
  }

  TEST_CASE("parse names") {
    CHECK(parse_tagset_kind("01") == TagSetKind::kGap01);
    CHECK(parse_tagset_kind("BE") == TagSetKind::kBE);
    CHECK(parse_tagset_kind("bems") == TagSetKind::kBEMS);
    CHECK_THROWS_AS(parse_tagset_kind("bio"), ConfigError);
    CHECK(parse_decoder_kind("viterbi") == DecoderKind::kViterbi);
    CHECK_THROWS_AS(parse_decoder_kind("sampling"), ConfigError);
  }

  TEST_CASE("validate examples") {
    CHECK_FALSE(validate(by_name(tbe(), {"BE", "EB"}), tbe()));
    auto v = validate(by_name(tbe(), {"BE", "BB"}), tbe());
    REQUIRE(v);
    CHECK(v->position == 2);
    CHECK_FALSE(validate({}, tbe()));
    auto start = validate(by_name(tbems(), {"ES"}), tbems());
    REQUIRE(start);
    CHECK(start->position == 1);
    auto end = validate(by_name(tbems(), {"SB"}), tbems());
    REQUIRE(end);
    CHECK(end->position == 1);
  }

  TEST_CASE("greedy argmax and ties") {
    GapScores s(2, 2, {0.2, 0.9, 0.5, 0.5});
    CHECK(greedy_labels(s) == GapLabels{1, 0});
    std::mt19937_64 rng(4);
    for (int k = 0; k < 100; ++k) {
      const auto m = random_scores(7, 8, rng);
      const auto g = greedy_labels(m);
      for (std::size_t r = 0; r < m.rows(); ++r) {
        Label best = 0;
        for (Label l = 1; l < m.labels(); ++l)
          if (m.at(r, l) > m.at(r, best)) best = l;
        CHECK(g[r] == best);
      }
    }
  }

  TEST_CASE("viterbi equals greedy for the unconstrained 01 set") {
    std::mt19937_64 rng(8);
    for (int k = 0; k < 100; ++k) {
      const auto m = random_scores(1 + k % 20, 2, rng);
      CHECK(viterbi_decode(m, tagset(TagSetKind::kGap01)) == greedy_labels(m));
    }
  }

  TEST_CASE("viterbi equals exhaustive enumeration for n <= 8") {
    std::mt19937_64 rng(12);
    for (const auto& spec : builtin_tagsets()) {
      for (int k = 0; k < 100; ++k) {
        const auto m = random_scores(1 + k % 8, spec.size(), rng);
        double best = 0;
        const auto oracle = brute_force_decode(m, spec, &best);
        const auto got = viterbi_decode(m, spec);
        CHECK(got == oracle);
        CHECK(total_score(m, got) == doctest::Approx(best).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("depth-first oracle agrees with the full product enumeration") {
    std::mt19937_64 rng(13);
    for (const auto& spec : builtin_tagsets()) {
      for (std::size_t n = 1; n <= 5; ++n) {
        for (int k = 0; k < 20; ++k) {
          GapScores m(n, spec.size());
          for (std::size_t r = 0; r < n; ++r)
            for (Label l = 0; l < spec.size(); ++l) m.at(r, l) = static_cast<double>(nn::uniform_index(rng, 3));
          GapLabels product_best;
          double product_total = -1e300;
          for (const auto& seq : gapseg::testing::enumerate_valid(spec, n)) {
            const double t = total_score(m, seq);
            if (t > product_total) {
              product_total = t;
              product_best = seq;
            }
          }
          CHECK(brute_force_decode(m, spec) == product_best);
        }
      }
    }
  }

  TEST_CASE("exact ties resolve to the lexicographically smallest sequence") {
    for (const auto& spec : builtin_tagsets()) {
      GapScores zeros(5, spec.size());
      const auto oracle = brute_force_decode(zeros, spec);
      CHECK(viterbi_decode(zeros, spec) == oracle);
      CHECK(beam_decode(zeros, spec, spec.size()) == oracle);
      std::mt19937_64 rng(2);
      GapScores coarse(6, spec.size());
      for (std::size_t r = 0; r < 6; ++r)
        for (Label l = 0; l < spec.size(); ++l) coarse.at(r, l) = static_cast<double>(nn::uniform_index(rng, 2));
      CHECK(viterbi_decode(coarse, spec) == brute_force_decode(coarse, spec));
      CHECK(beam_decode(coarse, spec, spec.size()) == brute_force_decode(coarse, spec));
    }
  }

  TEST_CASE("beam with width >= label count equals viterbi") {
    std::mt19937_64 rng(21);
    for (const auto& spec : builtin_tagsets()) {
      for (int k = 0; k < 200; ++k) {
        const auto m = random_scores(1 + k % 30, spec.size(), rng);
        const auto v = viterbi_decode(m, spec);
        CHECK(beam_decode(m, spec, spec.size()) == v);
        CHECK(beam_decode(m, spec, kDefaultBeamWidth) == v);
      }
    }
  }

  TEST_CASE("narrow beams never beat viterbi and always stay valid") {
    std::mt19937_64 rng(31);
    for (const auto& spec : builtin_tagsets()) {
      for (int k = 0; k < 100; ++k) {
        const auto m = random_scores(2 + k % 25, spec.size(), rng);
        const double best = total_score(m, viterbi_decode(m, spec));
        for (std::size_t w : {1u, 2u, 3u}) {
          const auto b = beam_decode(m, spec, w);
          CHECK_FALSE(validate(b, spec));
          CHECK(total_score(m, b) <= best + 1e-12);
        }
      }
    }
    CHECK_THROWS_AS(beam_decode(GapScores(2, 4), tbe(), 0), ContractError);
  }

  TEST_CASE("invalid greedy path [BE, BB] is repaired by beam") {
    const auto& be = tbe();
    GapScores m(2, 4);
    m.at(0, *be.find("BE")) = 5.0;
    m.at(0, *be.find("BB")) = 1.0;
    m.at(1, *be.find("BB")) = 5.0;
    m.at(1, *be.find("EE")) = 3.5;
    m.at(1, *be.find("EB")) = 0.5;
    CHECK(greedy_labels(m) == by_name(be, {"BE", "BB"}));
    CHECK(validate(greedy_labels(m), be));
    const auto oracle = brute_force_decode(m, be);
    CHECK(oracle == by_name(be, {"BE", "EE"}));
    CHECK(beam_decode(m, be) == oracle);
    CHECK(viterbi_decode(m, be) == oracle);
  }

  TEST_CASE("single gap picks the best label that can both start and end") {
    for (const auto& spec : builtin_tagsets()) {
      std::mt19937_64 rng(6);
      for (int k = 0; k < 20; ++k) {
        const auto m = random_scores(1, spec.size(), rng);
        Label best = spec.size();
        for (Label l = 0; l < spec.size(); ++l)
          if (spec.start_allowed[l] && spec.end_allowed[l] && (best == spec.size() || m.at(0, l) > m.at(0, best))) best = l;
        CHECK(beam_decode(m, spec) == GapLabels{best});
      }
    }
  }

  TEST_CASE("row shift changes the total but not the decoded sequence") {
    std::mt19937_64 rng(13);
    for (const auto& spec : builtin_tagsets()) {
      const auto m = random_scores(9, spec.size(), rng);
      std::vector<double> shifted(m.data().begin(), m.data().end());
      for (Label l = 0; l < spec.size(); ++l) shifted[3 * spec.size() + l] += 2.5;
      const GapScores s(9, spec.size(), shifted);
      const auto a = viterbi_decode(m, spec);
      CHECK(viterbi_decode(s, spec) == a);
      CHECK(total_score(s, a) == doctest::Approx(total_score(m, a) + 2.5));
      CHECK(greedy_labels(s) == greedy_labels(m));
    }
  }

  TEST_CASE("segment examples") {
    const auto& t01 = tagset(TagSetKind::kGap01);
    CHECK(render(segment(U"X", GapScores(0, 2), t01, DecoderKind::kGreedy)) == "X");
    CHECK(render(segment(U"X", GapScores(0, 8), tbems(), DecoderKind::kBeam)) == "X");
    CHECK(render(segment(U"ABC", GapScores(2, 2, {0, 1, 1, 0}), t01, DecoderKind::kGreedy)) == "A BC");
    CHECK(render(segment(U"ABC", GapScores(2, 2, {0, 1, 1, 0}), t01, DecoderKind::kBeam)) == "A BC");
    CHECK_THROWS_AS(segment(U"ABC", GapScores(2, 4), tbe(), DecoderKind::kGreedy), ConfigError);
    CHECK_THROWS_AS(segment(U"ABC", GapScores(3, 4), tbe(), DecoderKind::kBeam), ContractError);
  }

  TEST_CASE("segment output always maps back to valid labels") {
    std::mt19937_64 rng(19);
    for (const auto& spec : builtin_tagsets()) {
      for (int k = 0; k < 200; ++k) {
        const std::size_t n = 1 + k % 40;
        std::u32string chars(n, U'字');
        const auto m = random_scores(n - 1, spec.size(), rng);
        for (auto d : {DecoderKind::kBeam, DecoderKind::kViterbi}) {
          const auto seg = segment(chars, m, spec, d);
          CHECK_NOTHROW(seg.check());
          CHECK_FALSE(validate(to_gap_labels(seg, spec), spec));
        }
      }
    }
  }

  TEST_CASE("one-hot gold scores reproduce the gold segmentation") {
    std::mt19937_64 rng(29);
    for (const auto& spec : builtin_tagsets()) {
      for (int k = 0; k < 200; ++k) {
        const auto gold = random_sentence(rng);
        const auto labels = to_gap_labels(gold, spec);
        GapScores m(labels.size(), spec.size());
        for (std::size_t r = 0; r < labels.size(); ++r) m.at(r, labels[r]) = 1.0;
        CHECK(segment(gold.chars, m, spec, DecoderKind::kBeam) == gold);
        CHECK(segment(gold.chars, m, spec, DecoderKind::kViterbi) == gold);
      }
    }
  }

  TEST_CASE("score dump format") {
    std::ostringstream out;
    write_scores_tsv(out, GapScores(2, 2, {0.5, -1, 2, 0}), tagset(TagSetKind::kGap01));
    std::istringstream lines(out.str());
    std::string header, first;
    std::getline(lines, header);
    std::getline(lines, first);
    CHECK(header == "gap\t0\t1");
    CHECK(first.rfind("1\t0.5\t-1", 0) == 0);
  }
}
