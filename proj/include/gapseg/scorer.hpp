#pragma once

#include <cstddef>
#include <optional>
#include <random>

#include "gapseg/decode.hpp"
#include "gapseg/params.hpp"

namespace gapseg {

// Front and rear affine heads plus the biaffine gap classifier.
struct ScorerParams {
  nn::ParamId front_weight;  // d_b × input
  nn::ParamId front_bias;    // d_b
  nn::ParamId rear_weight;   // d_b × input
  nn::ParamId rear_bias;     // d_b
  nn::ParamId gap_weight;    // L × d_b × d_b
  nn::ParamId gap_linear;    // L × 2d_b
  nn::ParamId gap_bias;      // L
};

ScorerParams add_scorer_params(nn::ParameterStore& store, std::size_t input_dim,
                               std::size_t biaffine_size, std::size_t labels,
                               std::mt19937_64& rng);

struct AffineHeads {
  nn::Var front;  // n × d_b
  nn::Var rear;   // n × d_b
};

// h_front = W_front·g + b_front and h_rear = W_rear·g + b_rear for every row
// of g, each head reading its own dropout of g in training mode.
AffineHeads affine_heads(nn::ParamBinder& bind, const ScorerParams& params, nn::Var encoded,
                         double dropout, std::mt19937_64* dropout_rng);

// Row i scores the gap between characters i and i+1 from (front_i, rear_{i+1}).
// nullopt when the sentence has fewer than two characters.
std::optional<nn::Var> score_gaps(nn::ParamBinder& bind, const ScorerParams& params,
                                  const AffineHeads& heads);

std::optional<nn::Var> score_sentence(nn::ParamBinder& bind, const ScorerParams& params,
                                      nn::Var encoded, double dropout,
                                      std::mt19937_64* dropout_rng);

// Reference evaluations on plain tensors.

// h_tᵀ · W · h_s.
double bilinear_score(const nn::Tensor& target, const nn::Tensor& source, const nn::Tensor& weight);

// s[l] = frontᵀ·W[l]·rear + U[l]·(front ⊕ rear) + b[l].
std::vector<double> biaffine_score(const nn::Tensor& front, const nn::Tensor& rear,
                                   const nn::Tensor& gap_weight, const nn::Tensor& gap_linear,
                                   const nn::Tensor& gap_bias);

GapScores to_gap_scores(const nn::Tensor& scores);

}  // namespace gapseg
