#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gapseg/adam.hpp"
#include "gapseg/checkpoint.hpp"
#include "gapseg/error.hpp"
#include "gapseg/scorer.hpp"
#include "support/model_check.hpp"

using namespace gapseg;
using namespace gapseg::nn;
using gapseg::testing::tiny_config;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Vocabulary letters(std::u32string_view chars) {
  return Vocabulary::from_chars(std::vector<char32_t>(chars.begin(), chars.end()));
}

Tensor run_encoder(const ParameterStore& store, const EncoderParams& params,
                   const EncoderConfig& config, const std::vector<std::size_t>& indices,
                   Var EncoderOutput::*which) {
  Tape tape(false);
  ParamBinder bind(tape, store);
  const EncoderOutput out = encode(bind, params, config, indices, nullptr);
  return tape.value(out.*which);
}

}  // namespace

TEST_SUITE("encoder") {
  TEST_CASE("embedding lookup rows and repeated-index gradient") {
    ParameterStore store;
    auto table = store.add("t", Tensor::matrix({{1, 2}, {3, 4}, {5, 6}}));
    store.zero_grad();
    Tape tape;
    ParamBinder bind(tape, store);
    const std::size_t idx[] = {0, 2, 2};
    Var e = embed(tape, bind(table), idx);
    CHECK(tape.value(e) == Tensor::matrix({{1, 2}, {5, 6}, {5, 6}}));
    tape.backward(tape.sum(e));
    CHECK(store[table].grad == Tensor::matrix({{1, 1}, {0, 0}, {2, 2}}));
    const std::size_t bad[] = {3};
    CHECK_THROWS_AS(embed(tape, bind(table), bad), ContractError);
  }

  TEST_CASE("zero weights and states give a zero hidden vector") {
    const std::size_t H = 3;
    Tape tape(false);
    Var x = tape.constant(Tensor({1, 2}, 0.7));
    auto s = lstm_cell(tape, x, std::nullopt, tape.constant(Tensor({4 * H, 2})),
                       tape.constant(Tensor({4 * H, H})), tape.constant(Tensor({4 * H})));
    for (double v : tape.value(s.h).data()) CHECK(v == 0.0);
  }

  TEST_CASE("scalar cell matches a hand-computed step") {
    // Gate order: input, forget, output, candidate.
    const double wi[4] = {0.5, -0.3, 0.8, 1.2};
    const double wh[4] = {0.1, 0.4, -0.6, 0.9};
    const double b[4] = {0.05, 0.2, -0.1, 0.0};
    const double x = 0.5, h0 = 0.2, c0 = 0.3;
    const double i = sigmoid(wi[0] * x + wh[0] * h0 + b[0]);
    const double f = sigmoid(wi[1] * x + wh[1] * h0 + b[1]);
    const double o = sigmoid(wi[2] * x + wh[2] * h0 + b[2]);
    const double g = std::tanh(wi[3] * x + wh[3] * h0 + b[3]);
    const double c1 = f * c0 + i * g;
    const double h1 = o * std::tanh(c1);

    Tape tape(false);
    LstmState prev{tape.constant(Tensor({1, 1}, h0)), tape.constant(Tensor({1, 1}, c0))};
    auto s = lstm_cell(tape, tape.constant(Tensor({1, 1}, x)), prev,
                       tape.constant(Tensor({4, 1}, {wi[0], wi[1], wi[2], wi[3]})),
                       tape.constant(Tensor({4, 1}, {wh[0], wh[1], wh[2], wh[3]})),
                       tape.constant(Tensor({4}, {b[0], b[1], b[2], b[3]})));
    CHECK(tape.value(s.c)[0] == doctest::Approx(c1).epsilon(1e-15));
    CHECK(tape.value(s.h)[0] == doctest::Approx(h1).epsilon(1e-15));
  }

  TEST_CASE("cell gradient matches finite differences") {
    std::mt19937_64 rng(4);
    ParameterStore store;
    auto rnd = [&](Shape s) {
      Tensor t(std::move(s));
      fill_uniform(t, rng, -0.8, 0.8);
      return t;
    };
    auto x = store.add("x", rnd({1, 3}));
    auto h = store.add("h", rnd({1, 2}));
    auto c = store.add("c", rnd({1, 2}));
    auto w_in = store.add("w_in", rnd({8, 3}));
    auto w_h = store.add("w_h", rnd({8, 2}));
    auto bias = store.add("b", rnd({8}));
    auto loss = [&](bool record) {
      Tape tape(record);
      ParamBinder bind(tape, store);
      auto s = lstm_cell(tape, bind(x), LstmState{bind(h), bind(c)}, bind(w_in), bind(w_h), bind(bias));
      Var total = tape.add(tape.sum(tape.scale(s.h, 1.3)), tape.sum(tape.scale(s.c, -0.7)));
      if (record) tape.backward(total);
      return tape.value(total)[0];
    };
    store.zero_grad();
    loss(true);
    auto result = gapseg::testing::check_gradients(store, [&] { return loss(false); });
    CHECK_MESSAGE(result.max_relative_error < 1e-4, result.worst);
  }

  TEST_CASE("output shape under the default configuration") {
    Model model(ModelConfig::defaults(TagSetKind::kBEMS), letters(U"AB"), 3);
    for (std::u32string s : {U"A", U"ABBA"}) {
      Tape tape(false);
      ParamBinder bind(tape, model.params());
      const auto idx = model.vocabulary().encode(s);
      const auto out = model.encode(bind, idx, nullptr);
      CHECK(tape.value(out.combined).shape() == Shape{s.size(), 600});
    }
  }

  TEST_CASE("reversed input with swapped directions mirrors the outputs") {
    EncoderConfig config{4, 5, 1, 0.0};
    std::mt19937_64 rng(8);
    ParameterStore a;
    const auto pa = add_encoder_params(a, config, 7, rng);
    ParameterStore b = a;
    for (auto id : {&LstmParams::w_input, &LstmParams::w_hidden, &LstmParams::bias}) {
      std::swap(b[pa.layers[0][0].*id].value, b[pa.layers[0][1].*id].value);
    }
    const std::vector<std::size_t> sentence{1, 4, 2, 6, 0, 3};
    const std::vector<std::size_t> reversed(sentence.rbegin(), sentence.rend());
    const Tensor fwd_rev = run_encoder(b, pa, config, reversed, &EncoderOutput::forward);
    const Tensor bwd = run_encoder(a, pa, config, sentence, &EncoderOutput::backward);
    const std::size_t n = sentence.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < 5; ++k) CHECK(fwd_rev.at(n - 1 - i, k) == bwd.at(i, k));
  }

  TEST_CASE("inference is deterministic and context sensitive") {
    Model model(tiny_config(TagSetKind::kBEMS), letters(U"ABCDEFGH"), 5);
    auto hidden = [&](std::u32string_view s) {
      Tape tape(false);
      ParamBinder bind(tape, model.params());
      const auto idx = model.vocabulary().encode(s);
      return tape.value(model.encode(bind, idx, nullptr).combined);
    };
    const Tensor base = hidden(U"ABCDEFGH");
    CHECK(hidden(U"ABCDEFGH") == base);
    const Tensor changed = hidden(U"ABCDEFGA");  // position 7, three or more away from 0..4
    for (std::size_t i = 0; i <= 4; ++i) {
      bool differs = false;
      for (std::size_t k = 0; k < base.cols(); ++k) differs |= base.at(i, k) != changed.at(i, k);
      CHECK(differs);
    }
  }

  TEST_CASE("with dropout 0 training-mode scores equal inference scores") {
    Model model(tiny_config(TagSetKind::kBE), letters(U"ABCDE"), 2);
    std::mt19937_64 rng(1);
    Tape tape;
    ParamBinder bind = model.training_binder(tape);
    const auto idx = model.vocabulary().encode(U"ABCDE");
    const Tensor train_mode = tape.value(*model.forward(bind, idx, &rng));
    const GapScores infer = model.gap_scores(U"ABCDE");
    CHECK(std::vector<double>(train_mode.data().begin(), train_mode.data().end()) ==
          std::vector<double>(infer.data().begin(), infer.data().end()));
  }
}

TEST_SUITE("scorer") {
  TEST_CASE("bilinear examples") {
    const Tensor e1 = Tensor::vector({1, 0}), e2 = Tensor::vector({0, 1});
    CHECK(bilinear_score(e1, e2, Tensor::matrix({{0, 2}, {0, 0}})) == 2.0);
    const Tensor u = Tensor::vector({1, 2, 3}), v = Tensor::vector({4, -5, 6});
    CHECK(bilinear_score(u, v, Tensor::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}})) == 12.0);

    std::mt19937_64 rng(3);
    Tensor t({3}), s({4}), w({3, 4});
    fill_uniform(t, rng, -1, 1);
    fill_uniform(s, rng, -1, 1);
    fill_uniform(w, rng, -1, 1);
    double oracle = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 4; ++j) oracle += t[i] * w.at(i, j) * s[j];
    CHECK(bilinear_score(t, s, w) == doctest::Approx(oracle).epsilon(1e-14));
    CHECK_THROWS_AS(bilinear_score(s, t, w), ShapeError);
  }

  TEST_CASE("biaffine hand example evaluates to 21.5") {
    const Tensor W({1, 2, 2}, {1, 0, 0, 1});
    const Tensor U({1, 4}, {1, 1, 1, 1});
    const Tensor b = Tensor::vector({0.5});
    const auto s = biaffine_score(Tensor::vector({1, 2}), Tensor::vector({3, 4}), W, U, b);
    REQUIRE(s.size() == 1);
    CHECK(s[0] == 21.5);

    Tape tape(false);
    Var sc = tape.add(tape.add(tape.bilinear_rows(tape.constant(Tensor::matrix({{1, 2}})), tape.constant(W),
                                                  tape.constant(Tensor::matrix({{3, 4}}))),
                               tape.linear(tape.constant(Tensor::matrix({{1, 2, 3, 4}})), tape.constant(U))),
                      tape.constant(b));
    CHECK(tape.value(sc)[0] == 21.5);
  }

  TEST_CASE("biaffine reduces to bilinear plus bias when the linear term is zero") {
    std::mt19937_64 rng(5);
    Tensor W({3, 4, 4}), f({4}), r({4});
    fill_uniform(W, rng, -1, 1);
    fill_uniform(f, rng, -1, 1);
    fill_uniform(r, rng, -1, 1);
    const Tensor b = Tensor::vector({0.1, -0.2, 0.3});
    const auto s = biaffine_score(f, r, W, Tensor({3, 8}), b);
    for (std::size_t l = 0; l < 3; ++l) {
      Tensor slice({4, 4}, std::vector<double>(W.data().begin() + 16 * l, W.data().begin() + 16 * (l + 1)));
      CHECK(s[l] == doctest::Approx(bilinear_score(f, r, slice) + b[l]).epsilon(1e-14));
    }
  }

  TEST_CASE("affine heads with zero weights return the bias") {
    ParameterStore store;
    std::mt19937_64 rng(1);
    auto p = add_scorer_params(store, 6, 3, 2, rng);
    store[p.front_weight].value.fill(0.0);
    store[p.front_bias].value = Tensor::vector({1, 2, 3});
    Tape tape(false);
    ParamBinder bind(tape, store);
    Tensor g({4, 6});
    fill_uniform(g, rng, -1, 1);
    auto heads = affine_heads(bind, p, tape.constant(g), 0.0, nullptr);
    const Tensor& front = tape.value(heads.front);
    CHECK(front.shape() == Shape{4, 3});
    for (std::size_t r = 0; r < 4; ++r) CHECK(front.at(r, 0) == 1.0);
    CHECK(front.at(3, 2) == 3.0);
    CHECK(store[p.gap_weight].value.shape() == Shape{2, 3, 3});
    CHECK(store[p.gap_linear].value.shape() == Shape{2, 6});
    for (double v : store[p.gap_bias].value.data()) CHECK(v == 0.0);
  }

  TEST_CASE("default head size maps 600 inputs to 300") {
    ParameterStore store;
    std::mt19937_64 rng(1);
    auto p = add_scorer_params(store, 600, 300, 8, rng);
    CHECK(store[p.front_weight].value.shape() == Shape{300, 600});
    CHECK(store[p.rear_weight].value.shape() == Shape{300, 600});
  }

  TEST_CASE("score rows equal individual biaffine evaluations") {
    ParameterStore store;
    std::mt19937_64 rng(7);
    auto p = add_scorer_params(store, 6, 4, 8, rng);
    fill_uniform(store[p.gap_bias].value, rng, -1, 1);
    Tensor g({5, 6});
    fill_uniform(g, rng, -1, 1);
    Tape tape(false);
    ParamBinder bind(tape, store);
    auto heads = affine_heads(bind, p, tape.constant(g), 0.0, nullptr);
    auto scores = score_gaps(bind, p, heads);
    REQUIRE(scores);
    const Tensor& S = tape.value(*scores);
    CHECK(S.shape() == Shape{4, 8});
    const Tensor& front = tape.value(heads.front);
    const Tensor& rear = tape.value(heads.rear);
    for (std::size_t i = 0; i + 1 < 5; ++i) {
      const Tensor f({4}, std::vector<double>(front.row(i).begin(), front.row(i).end()));
      const Tensor r({4}, std::vector<double>(rear.row(i + 1).begin(), rear.row(i + 1).end()));
      const auto ref = biaffine_score(f, r, store[p.gap_weight].value, store[p.gap_linear].value,
                                      store[p.gap_bias].value);
      for (std::size_t l = 0; l < 8; ++l) CHECK(S.at(i, l) == doctest::Approx(ref[l]).epsilon(1e-13));
    }
    auto single = affine_heads(bind, p, tape.constant(Tensor({1, 6})), 0.0, nullptr);
    CHECK_FALSE(score_gaps(bind, p, single));
  }

  TEST_CASE("bias-only scorer gives the same row for every gap and sentence") {
    Model model(tiny_config(TagSetKind::kBEMS), letters(U"ABCDEF"), 9);
    auto& store = model.params();
    for (const char* name : {"scorer.gap.weight", "scorer.gap.linear"}) store[*store.find(name)].value.fill(0.0);
    auto& bias = store[*store.find("scorer.gap.bias")].value;
    for (std::size_t l = 0; l < bias.size(); ++l) bias[l] = 0.1 * static_cast<double>(l);
    const GapScores a = model.gap_scores(U"ABCDEF");
    const GapScores b = model.gap_scores(U"AECDBF");
    const GapScores c = model.gap_scores(U"FFA");
    for (const GapScores* s : {&a, &b, &c})
      for (std::size_t r = 0; r < s->rows(); ++r)
        for (std::size_t l = 0; l < 8; ++l) CHECK(s->at(r, l) == bias[l]);
  }

  TEST_CASE("scorer gradients match finite differences") {
    ParameterStore store;
    std::mt19937_64 rng(12);
    auto p = add_scorer_params(store, 4, 3, 4, rng);
    fill_uniform(store[p.gap_weight].value, rng, -1, 1);
    fill_uniform(store[p.gap_bias].value, rng, -1, 1);
    Tensor g({4, 4});
    fill_uniform(g, rng, -1, 1);
    const GapLabels gold{0, 3, 1};
    auto loss = [&](bool record) {
      Tape tape(record);
      ParamBinder bind(tape, store);
      Var l = gap_loss(tape, *score_sentence(bind, p, tape.constant(g), 0.0, nullptr), gold);
      if (record) tape.backward(l);
      return tape.value(l)[0];
    };
    store.zero_grad();
    loss(true);
    auto result = gapseg::testing::check_gradients(store, [&] { return loss(false); });
    CHECK_MESSAGE(result.max_relative_error < 1e-4, result.worst);
  }
}

TEST_SUITE("training") {
  TEST_CASE("gap loss values") {
    CHECK(gap_loss(GapScores(3, 2), GapLabels{0, 1, 1}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(gap_loss(GapScores(2, 2, {1000, 0, 0, 1000}), GapLabels{0, 1}) < 1e-12);
    CHECK(gap_loss(GapScores(2, 2, {1000, 0, 0, 1000}), GapLabels{1, 1}) == doctest::Approx(500.0));
    CHECK_THROWS_AS(gap_loss(GapScores(2, 2), GapLabels{0}), ContractError);
    Tape tape;
    CHECK_THROWS_AS(gap_loss(tape, tape.constant(Tensor({2, 2})), GapLabels{0, 1, 0}), ContractError);
  }

  TEST_CASE("loss gradient with respect to scores matches finite differences") {
    std::mt19937_64 rng(2);
    ParameterStore store;
    Tensor s({4, 8});
    fill_uniform(s, rng, -2, 2);
    auto id = store.add("scores", s);
    const GapLabels gold{1, 7, 0, 5};
    store.zero_grad();
    {
      Tape tape;
      tape.backward(gap_loss(tape, tape.parameter(store[id]), gold));
    }
    auto result = gapseg::testing::check_gradients(store, [&] {
      const Tensor& v = store[id].value;
      return gap_loss(GapScores(4, 8, std::vector<double>(v.data().begin(), v.data().end())), gold);
    });
    CHECK_MESSAGE(result.max_relative_error < 1e-6, result.worst);
  }

  TEST_CASE("full model gradient on a five-character sentence") {
    const auto gold = *parse_line("AB C DE");
    for (const auto& spec : builtin_tagsets()) {
      CAPTURE(spec.name);
      Model model(tiny_config(spec.kind), letters(U"ABCDE"), 11);
      const auto result = gapseg::testing::model_gradient_check(model, gold);
      CHECK(result.elements == model.params().element_count());
      CHECK_MESSAGE(result.max_relative_error < 1e-4, result.worst);
    }
  }

  TEST_CASE("loss on a fixed batch decreases over the first five steps") {
    std::mt19937_64 rng(3);
    const auto lexicon = gapseg::testing::make_lexicon(rng, 12, 20);
    const auto batch = gapseg::testing::sample_corpus(lexicon, 8, rng);
    for (const auto& spec : builtin_tagsets()) {
      CAPTURE(spec.name);
      Model model(tiny_config(spec.kind, 12), Vocabulary::build(batch), 4);
      AdamState adam(AdamConfig{0.001});
      double previous = std::numeric_limits<double>::infinity();
      for (int step = 0; step < 5; ++step) {
        model.params().zero_grad();
        double total = 0.0;
        for (const auto& s : batch) {
          Tape tape;
          ParamBinder bind = model.training_binder(tape);
          const auto idx = model.vocabulary().encode(s.chars);
          Var loss = tape.scale(gap_loss(tape, *model.forward(bind, idx, nullptr), to_gap_labels(s, spec)),
                                1.0 / static_cast<double>(batch.size()));
          total += tape.value(loss)[0];
          tape.backward(loss);
        }
        CHECK(total < previous);
        previous = total;
        adam_step(model.params().all(), adam);
      }
    }
  }

  TEST_CASE("training is deterministic and never touches parameters during evaluation") {
    std::mt19937_64 rng(5);
    const auto lexicon = gapseg::testing::make_lexicon(rng, 10, 15);
    const auto corpus = gapseg::testing::sample_corpus(lexicon, 24, rng);
    TrainConfig config = TrainConfig::defaults(TagSetKind::kBE);
    config.model = tiny_config(TagSetKind::kBE);
    config.model.dropout = 0.2;
    config.batch_size = 4;
    config.max_epochs = 3;
    config.seed = 42;
    const auto a = train(corpus, config);
    const auto b = train(corpus, config);
    CHECK(checkpoint_bytes(a.model, config, a.meta) == checkpoint_bytes(b.model, config, b.meta));
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t k = 0; k < a.log.size(); ++k) {
      CHECK(a.log[k].train_loss == b.log[k].train_loss);
      CHECK(a.log[k].dev_f1 == b.log[k].dev_f1);
    }
    CHECK(a.meta.seed == 42);

    const std::string before = checkpoint_bytes(a.model, config, a.meta);
    evaluate(a.model, corpus, DecoderKind::kBeam);
    CHECK(checkpoint_bytes(a.model, config, a.meta) == before);
  }

  TEST_CASE("train rejects corpora with fewer than two sentences") {
    TrainConfig config = TrainConfig::defaults(TagSetKind::kGap01);
    CHECK_THROWS_AS(train(std::vector<SegmentedSentence>{*parse_line("AB")}, config), ContractError);
  }

  TEST_CASE("config defaults follow the tag set") {
    CHECK(TrainConfig::defaults(TagSetKind::kGap01).learning_rate == 0.001);
    CHECK(TrainConfig::defaults(TagSetKind::kBE).learning_rate == 0.0012);
    CHECK(TrainConfig::defaults(TagSetKind::kBEMS).learning_rate == 0.002);
    CHECK(ModelConfig::defaults(TagSetKind::kGap01).dropout == 0.6);
    CHECK(ModelConfig::defaults(TagSetKind::kBE).dropout == 0.39);
    CHECK(ModelConfig::defaults(TagSetKind::kBEMS).dropout == 0.45);
    ModelConfig bad = ModelConfig::defaults(TagSetKind::kBE);
    bad.dropout = 1.0;
    CHECK_THROWS_AS(bad.check(), ConfigError);
  }
}

TEST_SUITE("checkpoint") {
  TEST_CASE("save -> load -> save is byte-identical and segments identically") {
    std::mt19937_64 rng(7);
    const auto lexicon = gapseg::testing::make_lexicon(rng, 15, 25);
    const auto corpus = gapseg::testing::sample_corpus(lexicon, 10, rng);
    for (const auto& spec : builtin_tagsets()) {
      Model model(tiny_config(spec.kind), Vocabulary::build(corpus), 13);
      model.set_embedding_trainable(false);
      TrainConfig config = TrainConfig::defaults(spec.kind);
      const TrainingMeta meta{3, 0.75, 99};
      const std::string first = checkpoint_bytes(model, config, meta);
      std::istringstream in(first);
      Checkpoint loaded = load_checkpoint(in);
      CHECK(loaded.meta == meta);
      CHECK_FALSE(loaded.model.embedding_trainable());
      CHECK(loaded.model.vocabulary() == model.vocabulary());
      CHECK(loaded.config.model == model.config());
      CHECK(checkpoint_bytes(loaded.model, loaded.config, loaded.meta) == first);

      const auto sentences = gapseg::testing::sample_corpus(lexicon, 100, rng);
      for (const auto& s : sentences) {
        const auto decoder = default_decoder(spec.kind);
        CHECK(loaded.model.segment(s.chars, decoder) == model.segment(s.chars, decoder));
      }
    }
  }

  TEST_CASE("load errors name the field") {
    Model model(tiny_config(TagSetKind::kBE), letters(U"AB"), 1);
    const TrainConfig config = TrainConfig::defaults(TagSetKind::kBE);
    const std::string bytes = checkpoint_bytes(model, config, {});
    auto load = [](std::string b, std::optional<TagSetKind> expected = std::nullopt) {
      std::istringstream in(std::move(b));
      return load_checkpoint(in, expected);
    };
    auto message = [&](std::string b) -> std::string {
      try {
        load(std::move(b));
      } catch (const LoadError& e) {
        return e.what();
      }
      return "";
    };
    CHECK(message("NOTACHECKPOINT__________").rfind("magic", 0) == 0);
    std::string wrong_version = bytes;
    wrong_version[8] = 2;
    CHECK(message(wrong_version).rfind("version", 0) == 0);
    CHECK(message(bytes.substr(0, 15)).rfind("manifest_length", 0) == 0);
    CHECK(message(bytes.substr(0, 40)).rfind("manifest", 0) == 0);
    CHECK(message(bytes.substr(0, bytes.size() - 8)).rfind("payload", 0) == 0);

    // Same-length edit of the tag set: four-label tensors under {0,1}.
    std::string relabeled = bytes;
    const auto at = relabeled.find("\"tagset\":\"be\"");
    REQUIRE(at != std::string::npos);
    relabeled.replace(at, 13, "\"tagset\":\"01\"");
    CHECK_THROWS_AS(load(relabeled), ConfigError);
    CHECK_THROWS_AS(load(bytes, TagSetKind::kGap01), ConfigError);
    CHECK_NOTHROW(load(bytes, TagSetKind::kBE));
  }
}
