#include "gapseg/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <thread>

#include "gapseg/error.hpp"

namespace gapseg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start, Clock::time_point end) {
  return std::chrono::duration<double>(end - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

PhaseTimes run_one(const Model& model, const std::u32string& chars, DecoderKind decoder,
                   std::size_t width) {
  PhaseTimes t;
  const auto t0 = Clock::now();
  nn::Tape tape(false);
  nn::ParamBinder bind(tape, model.params());
  const auto indices = model.vocabulary().encode(chars);
  const auto encoded = model.encode(bind, indices, nullptr);
  const auto t1 = Clock::now();
  const auto scores = model.score(bind, encoded.combined, nullptr);
  const GapScores gaps =
      scores ? to_gap_scores(tape.value(*scores)) : GapScores(0, model.tagset().size());
  const auto t2 = Clock::now();
  const SegmentedSentence seg = segment(chars, gaps, model.tagset(), decoder, width);
  const auto t3 = Clock::now();
  if (seg.boundaries.empty()) throw ContractError("bench: empty segmentation");
  t.encode = seconds_since(t0, t1);
  t.score = seconds_since(t1, t2);
  t.decode = seconds_since(t2, t3);
  return t;
}

}  // namespace

BenchReport bench(const Model& model, const std::vector<std::u32string>& sentences,
                  const BenchOptions& options) {
  if (options.repeat == 0) throw ContractError("bench: repeat must be at least 1");
  const DecoderKind decoder =
      model.tagset().kind == TagSetKind::kGap01 ? DecoderKind::kGreedy : options.decoder;
  if (decoder == DecoderKind::kGreedy && model.tagset().kind != TagSetKind::kGap01) {
    throw ConfigError("the greedy decoder is only valid with tag set 01");
  }

  BenchReport report;
  report.tagset = model.tagset().name;
  report.decoder = std::string(decoder_name(decoder));
  report.repeat = options.repeat;
  report.threads = std::max<std::size_t>(1, options.threads);

  for (const auto& s : sentences) {
    if (s.empty()) continue;
    SplitTiming& split = s.size() > kLongSentenceChars ? report.long_sentences : report.short_sentences;
    split.sentences += 1;
    split.characters += s.size();
  }
  report.all.sentences = report.short_sentences.sentences + report.long_sentences.sentences;
  report.all.characters = report.short_sentences.characters + report.long_sentences.characters;

  // [split][phase] samples, one per repeat.
  std::vector<double> samples[3][3];
  std::vector<double> walls;
  for (std::size_t r = 0; r < options.repeat; ++r) {
    const auto start = Clock::now();
    if (report.threads > 1) {
      std::vector<std::thread> workers;
      for (std::size_t w = 0; w < report.threads; ++w) {
        workers.emplace_back([&, w] {
          for (std::size_t k = w; k < sentences.size(); k += report.threads) {
            if (!sentences[k].empty()) run_one(model, sentences[k], decoder, options.beam_width);
          }
        });
      }
      for (auto& t : workers) t.join();
      walls.push_back(seconds_since(start, Clock::now()));
      continue;
    }
    PhaseTimes sums[2];
    for (const auto& s : sentences) {
      if (s.empty()) continue;
      const PhaseTimes t = run_one(model, s, decoder, options.beam_width);
      PhaseTimes& acc = sums[s.size() > kLongSentenceChars ? 1 : 0];
      acc.encode += t.encode;
      acc.score += t.score;
      acc.decode += t.decode;
    }
    walls.push_back(seconds_since(start, Clock::now()));
    for (int split = 0; split < 2; ++split) {
      samples[split][0].push_back(sums[split].encode);
      samples[split][1].push_back(sums[split].score);
      samples[split][2].push_back(sums[split].decode);
    }
    samples[2][0].push_back(sums[0].encode + sums[1].encode);
    samples[2][1].push_back(sums[0].score + sums[1].score);
    samples[2][2].push_back(sums[0].decode + sums[1].decode);
  }

  report.wall_seconds = median(walls);
  if (report.threads > 1) {
    // Throughput mode: attribute the whole wall time to "all".
    report.all.time.encode = report.wall_seconds;
    return report;
  }
  SplitTiming* splits[3] = {&report.short_sentences, &report.long_sentences, &report.all};
  for (int split = 0; split < 3; ++split) {
    splits[split]->time.encode = median(samples[split][0]);
    splits[split]->time.score = median(samples[split][1]);
    splits[split]->time.decode = median(samples[split][2]);
  }
  return report;
}

void write_bench_table(std::ostream& out, const BenchReport& r) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "tag set %s, decoder %s, %zu repeat(s), %zu thread(s)\n",
                r.tagset.c_str(), r.decoder.c_str(), r.repeat, r.threads);
  out << buf;
  std::snprintf(buf, sizeof buf, "%-6s %9s %9s %11s %11s %11s %13s %13s\n", "split", "sentences",
                "chars", "encode(s)", "score(s)", "decode(s)", "us/sentence", "us/char");
  out << buf;
  auto row = [&](const char* name, const SplitTiming& s) {
    std::snprintf(buf, sizeof buf, "%-6s %9zu %9zu %11.6f %11.6f %11.6f %13.3f %13.3f\n", name,
                  s.sentences, s.characters, s.time.encode, s.time.score, s.time.decode,
                  1e6 * s.per_sentence(), 1e6 * s.per_character());
    out << buf;
  };
  if (r.threads == 1) {
    row("short", r.short_sentences);
    row("long", r.long_sentences);
  }
  row("all", r.all);
  std::snprintf(buf, sizeof buf, "wall %.6f s\n", r.wall_seconds);
  out << buf;
}

void write_bench_kv(std::ostream& out, const BenchReport& r) {
  auto line = [&](const char* metric, const char* split, double v) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "metric=%s split=%s value=%.9g\n", metric, split, v);
    out << buf;
  };
  auto split_lines = [&](const char* name, const SplitTiming& s) {
    line("sentences", name, static_cast<double>(s.sentences));
    line("characters", name, static_cast<double>(s.characters));
    line("encode_seconds", name, s.time.encode);
    line("score_seconds", name, s.time.score);
    line("decode_seconds", name, s.time.decode);
    line("seconds_per_sentence", name, s.per_sentence());
    line("seconds_per_character", name, s.per_character());
    line("sentences_per_second", name, s.sentences_per_second());
    line("characters_per_second", name, s.characters_per_second());
  };
  if (r.threads == 1) {
    split_lines("short", r.short_sentences);
    split_lines("long", r.long_sentences);
  }
  split_lines("all", r.all);
  line("wall_seconds", "all", r.wall_seconds);
}

}  // namespace gapseg
