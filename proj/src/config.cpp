#include "gapseg/config.hpp"

#include "gapseg/error.hpp"

namespace gapseg {

TagSetDefaults tagset_defaults(TagSetKind kind) {
  switch (kind) {
    case TagSetKind::kGap01:
      return {0.001, 0.6};
    case TagSetKind::kBE:
      return {0.0012, 0.39};
    case TagSetKind::kBEMS:
      return {0.002, 0.45};
  }
  throw ConfigError("unknown tag set");
}

ModelConfig ModelConfig::defaults(TagSetKind kind) {
  ModelConfig c;
  c.tagset = kind;
  c.dropout = tagset_defaults(kind).dropout;
  return c;
}

void ModelConfig::check() const {
  if (embedding_dim == 0 || hidden_size == 0 || num_layers == 0 || biaffine_size == 0) {
    throw ConfigError("model dimensions and layer count must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

TrainConfig TrainConfig::defaults(TagSetKind kind) {
  TrainConfig c;
  c.model = ModelConfig::defaults(kind);
  c.learning_rate = tagset_defaults(kind).learning_rate;
  return c;
}

void TrainConfig::check() const {
  model.check();
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (max_epochs == 0) throw ConfigError("max epochs must be positive");
  if (!(clip_norm > 0.0)) throw ConfigError("gradient clipping norm must be positive");
  if (beam_width == 0) throw ConfigError("beam width must be at least 1");
}

}  // namespace gapseg
