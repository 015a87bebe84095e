#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "gapseg/model.hpp"

namespace gapseg {

// Sentences with more characters than this count as long.
inline constexpr std::size_t kLongSentenceChars = 30;

struct PhaseTimes {
  double encode = 0.0;  // seconds
  double score = 0.0;
  double decode = 0.0;

  double total() const { return encode + score + decode; }
};

struct SplitTiming {
  std::size_t sentences = 0;
  std::size_t characters = 0;
  PhaseTimes time;  // median over repeats of the summed per-sentence times

  double per_sentence() const { return sentences ? time.total() / sentences : 0.0; }
  double per_character() const { return characters ? time.total() / characters : 0.0; }
  double sentences_per_second() const { return time.total() > 0 ? sentences / time.total() : 0.0; }
  double characters_per_second() const { return time.total() > 0 ? characters / time.total() : 0.0; }
};

struct BenchOptions {
  DecoderKind decoder = DecoderKind::kBeam;
  std::size_t beam_width = kDefaultBeamWidth;
  std::size_t repeat = 3;
  // >1 switches to throughput mode: sentences are spread over worker
  // threads and only the wall-clock total is reported.
  std::size_t threads = 1;
};

struct BenchReport {
  std::string tagset;
  std::string decoder;  // decoder actually used
  std::size_t repeat = 0;
  std::size_t threads = 1;
  SplitTiming short_sentences;
  SplitTiming long_sentences;
  SplitTiming all;
  double wall_seconds = 0.0;  // median wall-clock time of one pass
};

// Times encode, score and decode for every sentence. Parsing and model
// loading are not included.
BenchReport bench(const Model& model, const std::vector<std::u32string>& sentences,
                  const BenchOptions& options = {});

void write_bench_table(std::ostream& out, const BenchReport& report);
// "metric=<name> split=<short|long|all> value=<v>" lines.
void write_bench_kv(std::ostream& out, const BenchReport& report);

}  // namespace gapseg
