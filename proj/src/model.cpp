#include "gapseg/model.hpp"

#include "gapseg/error.hpp"

namespace gapseg {

Model::Model(ModelConfig config, Vocabulary vocab, std::uint64_t seed,
             const EmbeddingTable* pretrained)
    : config_(config), vocab_(std::move(vocab)) {
  config_.check();
  std::mt19937_64 rng(seed);
  encoder_ = add_encoder_params(params_, encoder_config(), vocab_.size(), rng, pretrained);
  scorer_ = add_scorer_params(params_, config_.encoder_output_dim(), config_.biaffine_size,
                              tagset().size(), rng);
  if (pretrained) embedding_trainable_ = pretrained->trainable;
}

EncoderConfig Model::encoder_config() const {
  return {config_.embedding_dim, config_.hidden_size, config_.num_layers, config_.dropout};
}

nn::ParamBinder Model::training_binder(nn::Tape& tape) {
  nn::ParamBinder bind(tape, params_);
  if (!embedding_trainable_) bind.freeze(encoder_.embedding);
  return bind;
}

EncoderOutput Model::encode(nn::ParamBinder& bind, std::span<const std::size_t> indices,
                            std::mt19937_64* dropout_rng) const {
  return gapseg::encode(bind, encoder_, encoder_config(), indices, dropout_rng);
}

std::optional<nn::Var> Model::score(nn::ParamBinder& bind, nn::Var encoded,
                                    std::mt19937_64* dropout_rng) const {
  return score_sentence(bind, scorer_, encoded, config_.dropout, dropout_rng);
}

std::optional<nn::Var> Model::forward(nn::ParamBinder& bind, std::span<const std::size_t> indices,
                                      std::mt19937_64* dropout_rng) const {
  return score(bind, encode(bind, indices, dropout_rng).combined, dropout_rng);
}

GapScores Model::gap_scores(std::u32string_view chars) const {
  if (chars.empty()) throw ContractError("gap_scores: empty sentence");
  if (chars.size() == 1) return GapScores(0, tagset().size());
  nn::Tape tape(false);
  nn::ParamBinder bind(tape, params_);
  const auto indices = vocab_.encode(chars);
  auto scores = forward(bind, indices, nullptr);
  return to_gap_scores(tape.value(*scores));
}

SegmentedSentence Model::segment(std::u32string chars, DecoderKind decoder,
                                 std::size_t beam_width) const {
  GapScores scores = gap_scores(chars);
  return gapseg::segment(std::move(chars), scores, tagset(), decoder, beam_width);
}

}  // namespace gapseg
