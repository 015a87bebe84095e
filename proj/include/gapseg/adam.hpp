#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gapseg/tape.hpp"

namespace gapseg::nn {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  explicit AdamState(AdamConfig config = {}) : config(config) {}

  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

// One bias-corrected Adam update of every parameter from its .grad.
// Throws TrainingError naming the first parameter with a non-finite gradient;
// in that case nothing is updated.
void adam_step(std::span<Parameter> params, AdamState& state);

// Scales all gradients so their joint L2 norm is at most max_norm. Returns the
// norm before clipping.
double clip_global_norm(std::span<Parameter> params, double max_norm);

}  // namespace gapseg::nn
