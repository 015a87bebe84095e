#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "gapseg/tagset.hpp"

namespace gapseg {

// Per-scheme learning rate and dropout probability.
struct TagSetDefaults {
  double learning_rate;
  double dropout;
};

TagSetDefaults tagset_defaults(TagSetKind kind);

struct ModelConfig {
  TagSetKind tagset = TagSetKind::kBEMS;
  std::size_t embedding_dim = 300;
  std::size_t hidden_size = 300;  // per direction
  std::size_t num_layers = 3;
  std::size_t biaffine_size = 300;
  double dropout = 0.45;

  static ModelConfig defaults(TagSetKind kind);
  std::size_t encoder_output_dim() const { return 2 * hidden_size; }
  // Throws ConfigError.
  void check() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct TrainConfig {
  ModelConfig model;
  double learning_rate = 0.002;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 30;
  std::size_t patience = 10;
  std::uint64_t seed = 1;
  double clip_norm = 5.0;
  // Beam width used when scoring the dev set.
  std::size_t beam_width = 10;
  // Stop as soon as dev F1 reaches this value.
  std::optional<double> target_dev_f1;

  static TrainConfig defaults(TagSetKind kind);
  void check() const;
};

}  // namespace gapseg
