#include "gapseg/scorer.hpp"

#include <cmath>

#include "gapseg/error.hpp"

namespace gapseg {

using nn::Tape;
using nn::Tensor;
using nn::Var;

ScorerParams add_scorer_params(nn::ParameterStore& store, std::size_t input_dim,
                               std::size_t biaffine_size, std::size_t labels,
                               std::mt19937_64& rng) {
  ScorerParams p{};
  const double r = 1.0 / std::sqrt(static_cast<double>(input_dim));
  auto head = [&](const char* name, nn::ParamId& weight, nn::ParamId& bias) {
    Tensor w({biaffine_size, input_dim}), b({biaffine_size});
    nn::fill_uniform(w, rng, -r, r);
    nn::fill_uniform(b, rng, -r, r);
    weight = store.add(std::string("scorer.") + name + ".weight", std::move(w));
    bias = store.add(std::string("scorer.") + name + ".bias", std::move(b));
  };
  head("front", p.front_weight, p.front_bias);
  head("rear", p.rear_weight, p.rear_bias);

  Tensor w({labels, biaffine_size, biaffine_size});
  nn::fill_uniform(w, rng, -0.01, 0.01);
  p.gap_weight = store.add("scorer.gap.weight", std::move(w));
  Tensor u({labels, 2 * biaffine_size});
  const double ru = 1.0 / std::sqrt(static_cast<double>(2 * biaffine_size));
  nn::fill_uniform(u, rng, -ru, ru);
  p.gap_linear = store.add("scorer.gap.linear", std::move(u));
  p.gap_bias = store.add("scorer.gap.bias", Tensor({labels}));
  return p;
}

AffineHeads affine_heads(nn::ParamBinder& bind, const ScorerParams& params, Var encoded,
                         double dropout, std::mt19937_64* dropout_rng) {
  Tape& tape = bind.tape();
  Var front_in = dropout_rng ? tape.dropout(encoded, dropout, *dropout_rng) : encoded;
  Var rear_in = dropout_rng ? tape.dropout(encoded, dropout, *dropout_rng) : encoded;
  return {tape.linear(front_in, bind(params.front_weight), bind(params.front_bias)),
          tape.linear(rear_in, bind(params.rear_weight), bind(params.rear_bias))};
}

std::optional<Var> score_gaps(nn::ParamBinder& bind, const ScorerParams& params,
                              const AffineHeads& heads) {
  Tape& tape = bind.tape();
  const std::size_t n = tape.value(heads.front).dim(0);
  if (n < 2) return std::nullopt;
  Var left = tape.slice(heads.front, 0, 0, n - 1);
  Var right = tape.slice(heads.rear, 0, 1, n);
  Var bilinear = tape.bilinear_rows(left, bind(params.gap_weight), right);
  Var affine = tape.linear(tape.concat(left, right, 1), bind(params.gap_linear), bind(params.gap_bias));
  return tape.add(bilinear, affine);
}

std::optional<Var> score_sentence(nn::ParamBinder& bind, const ScorerParams& params, Var encoded,
                                  double dropout, std::mt19937_64* dropout_rng) {
  return score_gaps(bind, params, affine_heads(bind, params, encoded, dropout, dropout_rng));
}

double bilinear_score(const Tensor& target, const Tensor& source, const Tensor& weight) {
  if (weight.rank() != 2 || weight.dim(0) != target.size() || weight.dim(1) != source.size()) {
    throw ShapeError("bilinear_score: weight " + nn::shape_string(weight.shape()) +
                     " does not match vectors of length " + std::to_string(target.size()) + " and " +
                     std::to_string(source.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i)
    for (std::size_t j = 0; j < source.size(); ++j) s += target[i] * weight.at(i, j) * source[j];
  return s;
}

std::vector<double> biaffine_score(const Tensor& front, const Tensor& rear, const Tensor& gap_weight,
                                   const Tensor& gap_linear, const Tensor& gap_bias) {
  const std::size_t d = front.size();
  if (rear.size() != d || gap_weight.rank() != 3 || gap_weight.dim(1) != d ||
      gap_weight.dim(2) != d) {
    throw ShapeError("biaffine_score: weight " + nn::shape_string(gap_weight.shape()) +
                     " does not match head size " + std::to_string(d));
  }
  const std::size_t labels = gap_weight.dim(0);
  if (gap_linear.rank() != 2 || gap_linear.dim(0) != labels || gap_linear.dim(1) != 2 * d ||
      gap_bias.size() != labels) {
    throw ConfigError("biaffine_score: linear term or bias does not match " +
                      std::to_string(labels) + " labels");
  }
  std::vector<double> s(labels);
  for (std::size_t l = 0; l < labels; ++l) {
    double v = gap_bias[l];
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) v += front[i] * gap_weight[(l * d + i) * d + j] * rear[j];
      v += gap_linear.at(l, i) * front[i] + gap_linear.at(l, d + i) * rear[i];
    }
    s[l] = v;
  }
  return s;
}

GapScores to_gap_scores(const Tensor& scores) {
  return GapScores(scores.rows(), scores.cols(),
                   std::vector<double>(scores.data().begin(), scores.data().end()));
}

}  // namespace gapseg
