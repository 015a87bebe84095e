#include "gapseg/training.hpp"

#include <algorithm>
#include <cmath>

#include "gapseg/adam.hpp"
#include "gapseg/error.hpp"

namespace gapseg {

double gap_loss(const GapScores& scores, const GapLabels& gold) {
  if (scores.rows() != gold.size()) {
    throw ContractError("gap_loss: " + std::to_string(scores.rows()) + " score rows but " +
                        std::to_string(gold.size()) + " gold labels");
  }
  if (gold.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    auto row = scores.row(r);
    if (gold[r] >= row.size()) throw ContractError("gap_loss: gold label out of range");
    const double top = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - top);
    total += top + std::log(z) - row[gold[r]];
  }
  return total / static_cast<double>(gold.size());
}

nn::Var gap_loss(nn::Tape& tape, nn::Var scores, const GapLabels& gold) {
  return tape.softmax_cross_entropy(scores, gold);
}

DecoderKind default_decoder(TagSetKind kind) {
  return kind == TagSetKind::kGap01 ? DecoderKind::kGreedy : DecoderKind::kBeam;
}

std::vector<SegmentedSentence> predict(const Model& model,
                                       const std::vector<SegmentedSentence>& sentences,
                                       DecoderKind decoder, std::size_t beam_width) {
  std::vector<SegmentedSentence> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(model.segment(s.chars, decoder, beam_width));
  return out;
}

EvalReport evaluate(const Model& model, const std::vector<SegmentedSentence>& gold,
                    DecoderKind decoder, std::size_t beam_width) {
  return f1(gold, predict(model, gold, decoder, beam_width));
}

namespace {

struct Example {
  std::vector<std::size_t> indices;
  GapLabels gold;
};

// Fisher-Yates on the engine's raw output so the permutation is identical
// across standard library implementations.
void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[nn::uniform_index(rng, i)]);
}

}  // namespace

TrainResult train(const std::vector<SegmentedSentence>& train_set,
                  const std::vector<SegmentedSentence>& dev_set, const TrainConfig& config,
                  const TrainOptions& options) {
  config.check();
  if (train_set.empty()) throw ContractError("train: empty training set");

  Vocabulary vocab = Vocabulary::build(train_set);
  std::optional<EmbeddingTable> pretrained;
  if (options.embeddings) {
    std::mt19937_64 embed_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    pretrained = options.embeddings(vocab, embed_rng);
  }
  Model model(config.model, vocab, config.seed, pretrained ? &*pretrained : nullptr);
  const TagSetSpec& spec = model.tagset();

  std::vector<Example> examples;
  for (const auto& s : train_set) {
    s.check();
    if (s.size() < 2) continue;  // no gaps, nothing to learn
    examples.push_back({vocab.encode(s.chars), to_gap_labels(s, spec)});
  }

  const bool select_on_train = dev_set.empty();
  const auto& selection_set = select_on_train ? train_set : dev_set;
  const DecoderKind decoder = default_decoder(config.model.tagset);

  std::mt19937_64 rng(config.seed + 1);
  nn::AdamState adam(nn::AdamConfig{config.learning_rate});
  auto params = model.params().all();

  TrainResult result{model, TrainingMeta{0, -1.0, config.seed}, {}};
  std::size_t since_best = 0;
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle(order, rng);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double weight = 1.0 / static_cast<double>(end - start);
      model.params().zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const Example& ex = examples[order[k]];
        nn::Tape tape;
        auto bind = model.training_binder(tape);
        nn::Var scores = *model.forward(bind, ex.indices, &rng);
        nn::Var loss = gap_loss(tape, scores, ex.gold);
        const double value = tape.value(loss)[0];
        if (!std::isfinite(value)) {
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(batch_index + 1));
        }
        loss_sum += value;
        tape.backward(tape.scale(loss, weight));
      }
      nn::clip_global_norm(params, config.clip_norm);
      try {
        nn::adam_step(params, adam);
      } catch (const TrainingError& e) {
        throw TrainingError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batch_index + 1));
      }
    }

    EpochLog entry{epoch, examples.empty() ? 0.0 : loss_sum / static_cast<double>(examples.size()),
                   evaluate(model, selection_set, decoder, config.beam_width).f1, false};
    if (entry.dev_f1 > result.meta.dev_f1) {
      entry.improved = true;
      result.model = model;
      result.meta.epoch = epoch;
      result.meta.dev_f1 = entry.dev_f1;
      since_best = 0;
    } else {
      ++since_best;
    }
    result.log.push_back(entry);
    if (options.on_epoch) options.on_epoch(entry);
    if (config.target_dev_f1 && entry.dev_f1 >= *config.target_dev_f1) break;
    if (since_best >= config.patience) break;
  }
  return result;
}

TrainResult train(const std::vector<SegmentedSentence>& corpus, const TrainConfig& config,
                  const TrainOptions& options) {
  if (corpus.size() < 2) throw ContractError("train: corpus needs at least two sentences");
  DevSplit split = dev_split(corpus);
  return train(split.train, split.dev, config, options);
}

}  // namespace gapseg
