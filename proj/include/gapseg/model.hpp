#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>

#include "gapseg/config.hpp"
#include "gapseg/corpus.hpp"
#include "gapseg/decode.hpp"
#include "gapseg/encoder.hpp"
#include "gapseg/scorer.hpp"

namespace gapseg {

// BiLSTM encoder plus biaffine gap scorer for one tag set, together with the
// vocabulary it was built for.
class Model {
 public:
  // Randomly initialised from `seed`; the embedding rows come from
  // `pretrained` when given.
  Model(ModelConfig config, Vocabulary vocab, std::uint64_t seed,
        const EmbeddingTable* pretrained = nullptr);

  const ModelConfig& config() const { return config_; }
  const TagSetSpec& tagset() const { return gapseg::tagset(config_.tagset); }
  const Vocabulary& vocabulary() const { return vocab_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }

  bool embedding_trainable() const { return embedding_trainable_; }
  void set_embedding_trainable(bool v) { embedding_trainable_ = v; }

  EncoderConfig encoder_config() const;

  // Binder for a training tape; frozen embeddings are bound as constants.
  nn::ParamBinder training_binder(nn::Tape& tape);

  EncoderOutput encode(nn::ParamBinder& bind, std::span<const std::size_t> indices,
                       std::mt19937_64* dropout_rng) const;
  std::optional<nn::Var> score(nn::ParamBinder& bind, nn::Var encoded,
                               std::mt19937_64* dropout_rng) const;
  // Encoder then scorer; nullopt for one-character sentences.
  std::optional<nn::Var> forward(nn::ParamBinder& bind, std::span<const std::size_t> indices,
                                 std::mt19937_64* dropout_rng) const;

  // Inference-mode gap scores (no dropout, nothing recorded for gradients).
  GapScores gap_scores(std::u32string_view chars) const;
  SegmentedSentence segment(std::u32string chars, DecoderKind decoder,
                            std::size_t beam_width = kDefaultBeamWidth) const;

 private:
  ModelConfig config_;
  Vocabulary vocab_;
  nn::ParameterStore params_;
  EncoderParams encoder_;
  ScorerParams scorer_;
  bool embedding_trainable_ = true;
};

}  // namespace gapseg
