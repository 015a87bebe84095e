#pragma once

#include "gapseg/model.hpp"
#include "gapseg/training.hpp"
#include "support/oracles.hpp"

namespace gapseg::testing {

inline ModelConfig tiny_config(TagSetKind kind, std::size_t hidden = 8) {
  ModelConfig c = ModelConfig::defaults(kind);
  c.embedding_dim = 6;
  c.hidden_size = hidden;
  c.num_layers = 1;
  c.biaffine_size = 5;
  c.dropout = 0.0;
  return c;
}

// Analytic gradient of the mean gap loss of `gold` against central
// differences of the same loss evaluated in inference mode.
inline GradCheck model_gradient_check(Model& model, const SegmentedSentence& gold, double h = 1e-5) {
  const auto indices = model.vocabulary().encode(gold.chars);
  const GapLabels labels = to_gap_labels(gold, model.tagset());
  model.params().zero_grad();
  {
    nn::Tape tape;
    nn::ParamBinder bind = model.training_binder(tape);
    auto scores = model.forward(bind, indices, nullptr);
    tape.backward(gap_loss(tape, *scores, labels));
  }
  auto loss = [&] { return gap_loss(model.gap_scores(gold.chars), labels); };
  return check_gradients(model.params(), loss, h);
}

}  // namespace gapseg::testing
