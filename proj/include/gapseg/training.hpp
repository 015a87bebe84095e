#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "gapseg/config.hpp"
#include "gapseg/corpus.hpp"
#include "gapseg/evaluation.hpp"
#include "gapseg/model.hpp"

namespace gapseg {

// Mean over gaps of softmax cross-entropy against the gold labels.
double gap_loss(const GapScores& scores, const GapLabels& gold);
nn::Var gap_loss(nn::Tape& tape, nn::Var scores, const GapLabels& gold);

// Segments the characters of every sentence with the model.
std::vector<SegmentedSentence> predict(const Model& model,
                                       const std::vector<SegmentedSentence>& sentences,
                                       DecoderKind decoder,
                                       std::size_t beam_width = kDefaultBeamWidth);

EvalReport evaluate(const Model& model, const std::vector<SegmentedSentence>& gold,
                    DecoderKind decoder, std::size_t beam_width = kDefaultBeamWidth);

// Beam search for the paired schemes, greedy for {0,1}.
DecoderKind default_decoder(TagSetKind kind);

struct TrainingMeta {
  std::size_t epoch = 0;  // epoch of the kept parameters
  double dev_f1 = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const TrainingMeta&, const TrainingMeta&) = default;
};

struct EpochLog {
  std::size_t epoch;
  double train_loss;
  double dev_f1;
  bool improved;
};

struct TrainOptions {
  // Replaces the random embedding initialisation once the vocabulary is
  // known (typically load_embeddings).
  std::function<EmbeddingTable(const Vocabulary&, std::mt19937_64&)> embeddings;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  Model model;  // best-dev parameters
  TrainingMeta meta;
  std::vector<EpochLog> log;
};

// Trains on train_set and keeps the parameters with the best dev F1. With an
// empty dev set, selection falls back to training-set F1.
TrainResult train(const std::vector<SegmentedSentence>& train_set,
                  const std::vector<SegmentedSentence>& dev_set, const TrainConfig& config,
                  const TrainOptions& options = {});

// dev_split() then train(). Requires at least two sentences.
TrainResult train(const std::vector<SegmentedSentence>& corpus, const TrainConfig& config,
                  const TrainOptions& options = {});

}  // namespace gapseg
