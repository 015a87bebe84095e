#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gapseg/bench.hpp"
#include "gapseg/checkpoint.hpp"
#include "gapseg/error.hpp"
#include "gapseg/evaluation.hpp"
#include "gapseg/training.hpp"

namespace py = pybind11;
using namespace gapseg;

namespace {

using Words = std::vector<std::u32string>;

const TagSetSpec& spec_of(const std::string& name) { return tagset(parse_tagset_kind(name)); }

std::vector<SegmentedSentence> sentences_of(const std::vector<Words>& corpus) {
  std::vector<SegmentedSentence> out;
  out.reserve(corpus.size());
  for (const auto& words : corpus) {
    auto s = SegmentedSentence::from_words(words);
    s.check();
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Words> words_of(const std::vector<SegmentedSentence>& corpus) {
  std::vector<Words> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) out.push_back(s.words());
  return out;
}

std::vector<std::string> label_names(const GapLabels& labels, const TagSetSpec& spec) {
  std::vector<std::string> out;
  for (Label l : labels) out.push_back(spec.labels[l]);
  return out;
}

GapLabels label_ids(const std::vector<std::string>& names, const TagSetSpec& spec) {
  GapLabels out;
  for (const auto& n : names) {
    const auto id = spec.find(n);
    if (!id) throw ConfigError("unknown label '" + n + "' for tag set " + spec.name);
    out.push_back(*id);
  }
  return out;
}

GapScores scores_of(const std::vector<std::vector<double>>& rows, std::size_t labels) {
  GapScores out(rows.size(), labels);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != labels)
      throw ShapeError("score row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                       " entries, expected " + std::to_string(labels));
    for (std::size_t l = 0; l < labels; ++l) out.at(r, l) = rows[r][l];
  }
  return out;
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["sentences"] = r.sentences;
  d["gold_words"] = r.gold_words;
  d["predicted_words"] = r.predicted_words;
  d["correct_words"] = r.correct_words;
  d["precision"] = r.precision;
  d["recall"] = r.recall;
  d["f1"] = r.f1;
  return d;
}

py::dict split_dict(const SplitTiming& s) {
  py::dict d;
  d["sentences"] = s.sentences;
  d["characters"] = s.characters;
  d["encode_seconds"] = s.time.encode;
  d["score_seconds"] = s.time.score;
  d["decode_seconds"] = s.time.decode;
  d["total_seconds"] = s.time.total();
  return d;
}

DecoderKind decoder_for(const Checkpoint& c, const std::optional<std::string>& name) {
  return name ? parse_decoder_kind(*name) : default_decoder(c.config.model.tagset);
}

}  // namespace

PYBIND11_MODULE(_gapseg, m) {
  m.doc() = "Gap-labeling Chinese word segmentation";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", base);
  py::register_exception<ContractError>(m, "ContractError", base);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<IngestionError>(m, "IngestionError", base);
  py::register_exception<DecodeError>(m, "DecodeError", base);
  py::register_exception<AlignmentError>(m, "AlignmentError", base);
  py::register_exception<TrainingError>(m, "TrainingError", base);
  py::register_exception<LoadError>(m, "LoadError", base);
  py::register_exception<IoError>(m, "IoError", base);

  m.def("tagset_labels", [](const std::string& name) { return spec_of(name).labels; }, py::arg("tagset"));

  m.def(
      "parse_line",
      [](const std::string& line) -> std::optional<Words> {
        auto s = parse_line(line);
        if (!s) return std::nullopt;
        return s->words();
      },
      py::arg("line"));
  m.def("render", [](const Words& words) { return render(SegmentedSentence::from_words(words)); },
        py::arg("words"));

  m.def(
      "to_gap_labels",
      [](const Words& words, const std::string& name) {
        const auto& spec = spec_of(name);
        return label_names(to_gap_labels(SegmentedSentence::from_words(words), spec), spec);
      },
      py::arg("words"), py::arg("tagset"));
  m.def(
      "from_gap_labels",
      [](const std::string& text, const std::vector<std::string>& labels, const std::string& name) {
        const auto& spec = spec_of(name);
        return from_gap_labels(parse_raw_line(text), label_ids(labels, spec), spec).words();
      },
      py::arg("text"), py::arg("labels"), py::arg("tagset"));
  m.def(
      "validate",
      [](const std::vector<std::string>& labels, const std::string& name) -> std::optional<std::string> {
        const auto& spec = spec_of(name);
        const auto v = validate(label_ids(labels, spec), spec);
        if (!v) return std::nullopt;
        return "position " + std::to_string(v->position) + ": " + v->message;
      },
      py::arg("labels"), py::arg("tagset"));
  m.def(
      "decode",
      [](const std::vector<std::vector<double>>& scores, const std::string& name, const std::string& decoder,
         std::size_t beam_width) {
        const auto& spec = spec_of(name);
        return label_names(decode(scores_of(scores, spec.size()), spec, parse_decoder_kind(decoder), beam_width),
                           spec);
      },
      py::arg("scores"), py::arg("tagset"), py::arg("decoder") = "viterbi",
      py::arg("beam_width") = kDefaultBeamWidth);

  m.def(
      "f1", [](const std::vector<Words>& gold, const std::vector<Words>& pred) {
        return report_dict(f1(sentences_of(gold), sentences_of(pred)));
      },
      py::arg("gold"), py::arg("pred"));
  m.def(
      "hybrid_combine",
      [](const std::vector<Words>& base, const std::vector<Words>& ours, std::size_t threshold) {
        return words_of(hybrid_combine(sentences_of(base), sentences_of(ours), threshold));
      },
      py::arg("base"), py::arg("ours"), py::arg("threshold") = kDefaultHybridThreshold);

  m.def(
      "default_config_json",
      [](const std::string& name) { return config_to_json(TrainConfig::defaults(parse_tagset_kind(name))).dump(); },
      py::arg("tagset"));

  py::class_<Checkpoint>(m, "Model")
      .def_static(
          "train",
          [](const std::vector<Words>& corpus, const std::string& config_json,
             const std::optional<std::vector<Words>>& dev) {
            const auto json = nlohmann::json::parse(config_json);
            TrainConfig config = TrainConfig::defaults(
                json.contains("tagset") ? parse_tagset_kind(json["tagset"].get<std::string>()) : TagSetKind::kBEMS);
            apply_config_json(config, json);
            const auto train_set = sentences_of(corpus);
            std::vector<py::dict> log;
            std::vector<EpochLog> epochs;
            TrainOptions options;
            options.on_epoch = [&](const EpochLog& e) { epochs.push_back(e); };
            TrainResult result = [&] {
              py::gil_scoped_release release;
              return dev ? train(train_set, sentences_of(*dev), config, options) : train(train_set, config, options);
            }();
            for (const auto& e : epochs) {
              py::dict d;
              d["epoch"] = e.epoch;
              d["train_loss"] = e.train_loss;
              d["dev_f1"] = e.dev_f1;
              d["improved"] = e.improved;
              log.push_back(d);
            }
            return py::make_tuple(Checkpoint{std::move(result.model), config, result.meta}, log);
          },
          py::arg("corpus"), py::arg("config_json") = "{}", py::arg("dev") = py::none())
      .def_static(
          "load",
          [](const std::string& path, const std::optional<std::string>& expected) {
            std::optional<TagSetKind> kind;
            if (expected) kind = parse_tagset_kind(*expected);
            return load_checkpoint_file(path, kind);
          },
          py::arg("path"), py::arg("tagset") = py::none())
      .def("save", [](const Checkpoint& c, const std::string& path) { save_checkpoint_file(path, c); },
           py::arg("path"))
      .def("to_bytes",
           [](const Checkpoint& c) { return py::bytes(checkpoint_bytes(c.model, c.config, c.meta)); })
      .def_property_readonly("tagset", [](const Checkpoint& c) { return std::string(tagset_name(c.config.model.tagset)); })
      .def_property_readonly("config_json", [](const Checkpoint& c) { return config_to_json(c.config).dump(); })
      .def_property_readonly("best_epoch", [](const Checkpoint& c) { return c.meta.epoch; })
      .def_property_readonly("dev_f1", [](const Checkpoint& c) { return c.meta.dev_f1; })
      .def(
          "segment",
          [](const Checkpoint& c, const std::string& text, const std::optional<std::string>& decoder,
             std::size_t beam_width) {
            return c.model.segment(parse_raw_line(text), decoder_for(c, decoder), beam_width).words();
          },
          py::arg("text"), py::arg("decoder") = py::none(), py::arg("beam_width") = kDefaultBeamWidth)
      .def(
          "gap_scores",
          [](const Checkpoint& c, const std::string& text) {
            const GapScores s = c.model.gap_scores(parse_raw_line(text));
            std::vector<std::vector<double>> rows(s.rows());
            for (std::size_t r = 0; r < s.rows(); ++r) rows[r].assign(s.row(r).begin(), s.row(r).end());
            return rows;
          },
          py::arg("text"))
      .def(
          "evaluate",
          [](const Checkpoint& c, const std::vector<Words>& gold, const std::optional<std::string>& decoder,
             std::size_t beam_width) {
            const auto sentences = sentences_of(gold);
            EvalReport r;
            {
              py::gil_scoped_release release;
              r = evaluate(c.model, sentences, decoder_for(c, decoder), beam_width);
            }
            return report_dict(r);
          },
          py::arg("gold"), py::arg("decoder") = py::none(), py::arg("beam_width") = kDefaultBeamWidth)
      .def(
          "bench",
          [](const Checkpoint& c, const std::vector<std::string>& texts, const std::optional<std::string>& decoder,
             std::size_t beam_width, std::size_t repeat, std::size_t threads) {
            std::vector<std::u32string> sentences;
            for (const auto& t : texts) sentences.push_back(parse_raw_line(t));
            BenchOptions options;
            options.decoder = decoder_for(c, decoder);
            options.beam_width = beam_width;
            options.repeat = repeat;
            options.threads = threads;
            BenchReport r;
            {
              py::gil_scoped_release release;
              r = bench(c.model, sentences, options);
            }
            py::dict d;
            d["tagset"] = r.tagset;
            d["decoder"] = r.decoder;
            d["repeat"] = r.repeat;
            d["threads"] = r.threads;
            d["short"] = split_dict(r.short_sentences);
            d["long"] = split_dict(r.long_sentences);
            d["all"] = split_dict(r.all);
            d["wall_seconds"] = r.wall_seconds;
            return d;
          },
          py::arg("texts"), py::arg("decoder") = py::none(), py::arg("beam_width") = kDefaultBeamWidth,
          py::arg("repeat") = 3, py::arg("threads") = 1);
}
