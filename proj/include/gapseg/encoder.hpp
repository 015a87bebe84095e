#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "gapseg/params.hpp"

namespace gapseg {

struct EmbeddingTable;

struct EncoderConfig {
  std::size_t embedding_dim = 300;
  std::size_t hidden_size = 300;
  std::size_t num_layers = 3;
  double dropout = 0.0;

  std::size_t output_dim() const { return 2 * hidden_size; }
};

// Weights of one LSTM direction. Gate blocks of the 4H rows are ordered
// input, forget, output, candidate.
struct LstmParams {
  nn::ParamId w_input;   // 4H × in
  nn::ParamId w_hidden;  // 4H × H
  nn::ParamId bias;      // 4H
};

struct EncoderParams {
  nn::ParamId embedding;
  // layers[k][0] reads left to right, layers[k][1] right to left.
  std::vector<std::array<LstmParams, 2>> layers;
};

// Registers the embedding table and every LSTM weight. Weights are drawn from
// uniform(-1/sqrt(H), 1/sqrt(H)); the embedding is copied from `pretrained`
// when given, else drawn from uniform(-0.05, 0.05).
EncoderParams add_encoder_params(nn::ParameterStore& store, const EncoderConfig& config,
                                 std::size_t vocab_size, std::mt19937_64& rng,
                                 const EmbeddingTable* pretrained = nullptr);

struct LstmState {
  nn::Var h;  // 1 × H
  nn::Var c;  // 1 × H
};

nn::Var embed(nn::Tape& tape, nn::Var table, std::span<const std::size_t> indices);

// One recurrence step from an already projected input row (x·W_inputᵀ + b).
// A missing previous state stands for zero vectors.
LstmState lstm_step(nn::Tape& tape, nn::Var projected, const std::optional<LstmState>& prev,
                    nn::Var w_hidden);

// One full LSTM cell step on a 1 × in input row.
LstmState lstm_cell(nn::Tape& tape, nn::Var x, const std::optional<LstmState>& prev,
                    nn::Var w_input, nn::Var w_hidden, nn::Var bias);

// Runs one direction over n × in inputs and returns the n × H hidden states in
// sentence order.
nn::Var run_lstm(nn::Tape& tape, nn::Var inputs, nn::Var w_input, nn::Var w_hidden, nn::Var bias,
                 bool reverse);

struct EncoderOutput {
  nn::Var forward;   // n × H, top layer
  nn::Var backward;  // n × H, top layer
  nn::Var combined;  // n × 2H
};

// Embedding lookup followed by the stacked BiLSTM. Each layer after the first
// reads the concatenated outputs of the layer below. Dropout is applied to
// every layer input when dropout_rng is non-null (training mode).
EncoderOutput encode(nn::ParamBinder& bind, const EncoderParams& params,
                     const EncoderConfig& config, std::span<const std::size_t> indices,
                     std::mt19937_64* dropout_rng);

}  // namespace gapseg
