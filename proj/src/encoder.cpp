#include "gapseg/encoder.hpp"

#include <cmath>
#include <string>

#include "gapseg/corpus.hpp"
#include "gapseg/error.hpp"

namespace gapseg {

using nn::Tape;
using nn::Tensor;
using nn::Var;

EncoderParams add_encoder_params(nn::ParameterStore& store, const EncoderConfig& config,
                                 std::size_t vocab_size, std::mt19937_64& rng,
                                 const EmbeddingTable* pretrained) {
  EncoderParams params;
  Tensor table({vocab_size, config.embedding_dim});
  if (pretrained) {
    if (pretrained->rows.shape() != table.shape()) {
      throw ConfigError("pretrained embedding table has shape " +
                        nn::shape_string(pretrained->rows.shape()) + ", expected " +
                        nn::shape_string(table.shape()));
    }
    table = pretrained->rows;
  } else {
    nn::fill_uniform(table, rng, -0.05, 0.05);
  }
  params.embedding = store.add("embedding", std::move(table));

  const std::size_t H = config.hidden_size;
  const double r = 1.0 / std::sqrt(static_cast<double>(H));
  for (std::size_t layer = 0; layer < config.num_layers; ++layer) {
    const std::size_t in = layer == 0 ? config.embedding_dim : 2 * H;
    std::array<LstmParams, 2> dirs{};
    for (int d = 0; d < 2; ++d) {
      const std::string prefix =
          "encoder.l" + std::to_string(layer) + (d == 0 ? ".forward." : ".backward.");
      Tensor w_in({4 * H, in}), w_h({4 * H, H}), b({4 * H});
      nn::fill_uniform(w_in, rng, -r, r);
      nn::fill_uniform(w_h, rng, -r, r);
      nn::fill_uniform(b, rng, -r, r);
      dirs[d].w_input = store.add(prefix + "w_input", std::move(w_in));
      dirs[d].w_hidden = store.add(prefix + "w_hidden", std::move(w_h));
      dirs[d].bias = store.add(prefix + "bias", std::move(b));
    }
    params.layers.push_back(dirs);
  }
  return params;
}

Var embed(Tape& tape, Var table, std::span<const std::size_t> indices) {
  return tape.gather_rows(table, indices);
}

LstmState lstm_step(Tape& tape, Var projected, const std::optional<LstmState>& prev, Var w_hidden) {
  const std::size_t H = tape.value(w_hidden).dim(1);
  if (tape.value(projected).size() != 4 * H || tape.value(projected).rank() != 2) {
    throw ShapeError("lstm_step: projected input " + nn::shape_string(tape.value(projected).shape()) +
                     " does not match hidden size " + std::to_string(H));
  }
  Var z = prev ? tape.add(projected, tape.linear(prev->h, w_hidden)) : projected;
  Var in_gate = tape.sigmoid(tape.slice(z, 1, 0, H));
  Var forget_gate = tape.sigmoid(tape.slice(z, 1, H, 2 * H));
  Var out_gate = tape.sigmoid(tape.slice(z, 1, 2 * H, 3 * H));
  Var candidate = tape.tanh(tape.slice(z, 1, 3 * H, 4 * H));
  Var c = tape.mul(in_gate, candidate);
  if (prev) c = tape.add(tape.mul(forget_gate, prev->c), c);
  Var h = tape.mul(out_gate, tape.tanh(c));
  return {h, c};
}

LstmState lstm_cell(Tape& tape, Var x, const std::optional<LstmState>& prev, Var w_input,
                    Var w_hidden, Var bias) {
  return lstm_step(tape, tape.linear(x, w_input, bias), prev, w_hidden);
}

Var run_lstm(Tape& tape, Var inputs, Var w_input, Var w_hidden, Var bias, bool reverse) {
  Var projected = tape.linear(inputs, w_input, bias);
  const std::size_t n = tape.value(inputs).dim(0);
  std::vector<Var> hidden(n);
  std::optional<LstmState> state;
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t t = reverse ? n - 1 - step : step;
    state = lstm_step(tape, tape.slice(projected, 0, t, t + 1), state, w_hidden);
    hidden[t] = state->h;
  }
  return tape.stack_rows(hidden);
}

EncoderOutput encode(nn::ParamBinder& bind, const EncoderParams& params,
                     const EncoderConfig& config, std::span<const std::size_t> indices,
                     std::mt19937_64* dropout_rng) {
  if (indices.empty()) throw ContractError("encode: empty sentence");
  Tape& tape = bind.tape();
  Var x = embed(tape, bind(params.embedding), indices);
  EncoderOutput out{};
  for (const auto& layer : params.layers) {
    if (dropout_rng) x = tape.dropout(x, config.dropout, *dropout_rng);
    const auto& f = layer[0];
    const auto& b = layer[1];
    out.forward = run_lstm(tape, x, bind(f.w_input), bind(f.w_hidden), bind(f.bias), false);
    out.backward = run_lstm(tape, x, bind(b.w_input), bind(b.w_hidden), bind(b.bias), true);
    out.combined = tape.concat(out.forward, out.backward, 1);
    x = out.combined;
  }
  return out;
}

}  // namespace gapseg
