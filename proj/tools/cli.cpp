#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include "gapseg/bench.hpp"
#include "gapseg/checkpoint.hpp"
#include "gapseg/error.hpp"
#include "gapseg/evaluation.hpp"
#include "gapseg/training.hpp"

namespace gapseg::cli {

namespace {

class InputFile {
 public:
  InputFile(const std::string& path, std::istream& fallback) {
    if (path == "-") {
      stream_ = &fallback;
      return;
    }
    file_ = std::make_unique<std::ifstream>(path, std::ios::binary);
    if (!*file_) throw IoError("cannot open '" + path + "' for reading");
    stream_ = file_.get();
  }
  std::istream& get() { return *stream_; }

 private:
  std::unique_ptr<std::ifstream> file_;
  std::istream* stream_ = nullptr;
};

class OutputFile {
 public:
  OutputFile(const std::string& path, std::ostream& fallback) : path_(path) {
    if (path == "-") {
      stream_ = &fallback;
      return;
    }
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw IoError("cannot open '" + path + "' for writing");
    stream_ = file_.get();
  }
  std::ostream& get() { return *stream_; }
  void finish() {
    stream_->flush();
    if (!*stream_) throw IoError("failed writing '" + path_ + "'");
  }

 private:
  std::string path_;
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

std::vector<CorpusLine> read_corpus(const std::string& path, std::istream& in) {
  InputFile file(path, in);
  try {
    return parse_corpus_lines(file.get());
  } catch (const IngestionError& e) {
    throw IngestionError(e.line(), path + ": " + e.what());
  }
}

std::vector<SegmentedSentence> sentences_of(const std::vector<CorpusLine>& lines) {
  std::vector<SegmentedSentence> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(l.sentence);
  return out;
}

// Raw lines; blank ones become empty strings so output can mirror them.
std::vector<std::u32string> read_raw_lines(const std::string& path, std::istream& in) {
  InputFile file(path, in);
  std::vector<std::u32string> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(file.get(), line)) {
    ++number;
    try {
      out.push_back(parse_raw_line(line, number));
    } catch (const IngestionError& e) {
      throw IngestionError(e.line(), path + ": " + e.what());
    }
  }
  return out;
}

void write_config_json(std::ostream& out, const TrainConfig& config) {
  out << "config " << config_to_json(config).dump() << '\n';
}

struct TrainArgs {
  std::string train_path;
  std::string dev_path;
  std::string checkpoint;
  std::string config_path;
  std::string embeddings;
  std::string log_path;
  std::optional<std::string> tagset;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> patience;
  std::optional<std::size_t> beam_width;
  std::optional<double> learning_rate;
  std::optional<double> dropout;
  std::optional<double> target_f1;
  bool freeze_embeddings = false;
};

// Flags override the config file, which overrides the tag-set defaults.
TrainConfig resolve_train_config(const TrainArgs& a) {
  nlohmann::json file_config = nlohmann::json::object();
  if (!a.config_path.empty()) {
    std::ifstream in(a.config_path);
    if (!in) throw IoError("cannot open config '" + a.config_path + "'");
    try {
      file_config = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(a.config_path + ": " + e.what());
    }
    if (!file_config.is_object()) throw ConfigError(a.config_path + ": expected a JSON object");
  }

  TagSetKind kind = TagSetKind::kBEMS;
  if (a.tagset) {
    kind = parse_tagset_kind(*a.tagset);
  } else if (file_config.contains("tagset") && file_config["tagset"].is_string()) {
    kind = parse_tagset_kind(file_config["tagset"].get<std::string>());
  }

  TrainConfig c = TrainConfig::defaults(kind);
  apply_config_json(c, file_config);
  c.model.tagset = kind;
  if (a.seed) c.seed = *a.seed;
  if (a.epochs) c.max_epochs = *a.epochs;
  if (a.batch_size) c.batch_size = *a.batch_size;
  if (a.patience) c.patience = *a.patience;
  if (a.beam_width) c.beam_width = *a.beam_width;
  if (a.learning_rate) c.learning_rate = *a.learning_rate;
  if (a.dropout) c.model.dropout = *a.dropout;
  if (a.target_f1) c.target_dev_f1 = *a.target_f1;
  c.check();
  return c;
}

int cmd_train(const TrainArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
  const TrainConfig config = resolve_train_config(a);
  const auto corpus = sentences_of(read_corpus(a.train_path, in));
  std::vector<SegmentedSentence> train_set, dev_set;
  if (!a.dev_path.empty()) {
    train_set = corpus;
    dev_set = sentences_of(read_corpus(a.dev_path, in));
  } else {
    DevSplit split = dev_split(corpus);
    if (split.warning) err << "warning: " << *split.warning << '\n';
    train_set = std::move(split.train);
    dev_set = std::move(split.dev);
  }
  if (train_set.empty()) throw ConfigError("training corpus '" + a.train_path + "' is empty");

  std::unique_ptr<std::ofstream> log_file;
  if (!a.log_path.empty()) {
    log_file = std::make_unique<std::ofstream>(a.log_path);
    if (!*log_file) throw IoError("cannot open log '" + a.log_path + "' for writing");
  }
  auto log = [&](const std::string& line) {
    out << line << '\n';
    if (log_file) *log_file << line << '\n';
  };

  std::ostringstream header;
  write_config_json(header, config);
  log(header.str().substr(0, header.str().size() - 1));
  log("data train_sentences=" + std::to_string(train_set.size()) +
      " dev_sentences=" + std::to_string(dev_set.size()));

  TrainOptions options;
  if (!a.embeddings.empty()) {
    options.embeddings = [&](const Vocabulary& vocab, std::mt19937_64& rng) {
      std::ifstream file(a.embeddings);
      if (!file) throw IoError("cannot open embeddings '" + a.embeddings + "'");
      EmbeddingLoad load = load_embeddings(file, vocab, config.model.embedding_dim, rng);
      load.table.trainable = !a.freeze_embeddings;
      log("embeddings copied=" + std::to_string(load.copied) +
          " ignored=" + std::to_string(load.ignored));
      return load.table;
    };
  }
  options.on_epoch = [&](const EpochLog& e) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "epoch=%zu train_loss=%.9g dev_f1=%.6f improved=%d", e.epoch,
                  e.train_loss, e.dev_f1, e.improved ? 1 : 0);
    log(buf);
  };

  TrainResult result = train(train_set, dev_set, config, options);
  save_checkpoint_file(a.checkpoint, Checkpoint{result.model, config, result.meta});
  char buf[160];
  std::snprintf(buf, sizeof buf, "best epoch=%zu dev_f1=%.6f", result.meta.epoch, result.meta.dev_f1);
  log(buf);
  if (log_file && !*log_file) throw IoError("failed writing log '" + a.log_path + "'");
  return kSuccess;
}

struct DecodeArgs {
  std::string checkpoint;
  std::optional<std::string> tagset;
  std::optional<std::string> decoder;
  std::size_t beam_width = kDefaultBeamWidth;
};

struct LoadedModel {
  Checkpoint checkpoint;
  DecoderKind decoder;
};

LoadedModel load_for_decoding(const DecodeArgs& a) {
  std::optional<TagSetKind> expected;
  if (a.tagset) expected = parse_tagset_kind(*a.tagset);
  if (a.beam_width == 0) throw ConfigError("--beam-width must be at least 1");
  Checkpoint ckpt = load_checkpoint_file(a.checkpoint, expected);
  const TagSetKind kind = ckpt.config.model.tagset;
  const DecoderKind decoder = a.decoder ? parse_decoder_kind(*a.decoder) : default_decoder(kind);
  if (decoder == DecoderKind::kGreedy && kind != TagSetKind::kGap01) {
    throw ConfigError("decoder greedy is only valid with tag set 01; checkpoint uses tag set " +
                      std::string(tagset_name(kind)));
  }
  return {std::move(ckpt), decoder};
}

int cmd_segment(const DecodeArgs& d, const std::string& input, const std::string& output,
                std::size_t threads, std::istream& in, std::ostream& out) {
  const LoadedModel loaded = load_for_decoding(d);
  const auto lines = read_raw_lines(input, in);
  std::vector<std::string> rendered(lines.size());
  const Model& model = loaded.checkpoint.model;
  auto work = [&](std::size_t first, std::size_t step) {
    for (std::size_t k = first; k < lines.size(); k += step) {
      if (!lines[k].empty()) rendered[k] = render(model.segment(lines[k], loaded.decoder, d.beam_width));
    }
  };
  threads = std::max<std::size_t>(1, threads);
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          work(t, threads);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  OutputFile file(output, out);
  for (const auto& line : rendered) file.get() << line << '\n';
  file.finish();
  return kSuccess;
}

int cmd_eval(const std::string& gold_path, const std::string& pred_path, bool buckets,
             const std::string& format, std::istream& in, std::ostream& out) {
  const auto gold_lines = read_corpus(gold_path, in);
  const auto pred_lines = read_corpus(pred_path, in);
  const auto gold = sentences_of(gold_lines);
  const auto pred = sentences_of(pred_lines);
  auto where = [](const std::vector<CorpusLine>& lines, std::size_t k) {
    return k < lines.size() ? "line " + std::to_string(lines[k].line_number) : std::string("end of file");
  };
  EvalReport overall;
  std::vector<BucketReport> per_bucket;
  try {
    if (gold.size() != pred.size()) {
      const std::size_t k = std::min(gold.size(), pred.size());
      throw AlignmentError(k, std::to_string(gold.size()) + " gold sentences but " +
                                  std::to_string(pred.size()) + " predicted");
    }
    overall = f1(gold, pred);
    if (buckets) per_bucket = bucketed_f1(gold, pred, default_length_buckets());
  } catch (const AlignmentError& e) {
    throw AlignmentError(e.index(), gold_path + " " + where(gold_lines, e.index()) + " vs " + pred_path +
                                        " " + where(pred_lines, e.index()) + ": " + e.what());
  }
  if (format == "kv") {
    write_report_kv(out, overall, per_bucket);
  } else {
    write_report_table(out, overall, per_bucket);
  }
  return kSuccess;
}

int cmd_bench(const DecodeArgs& d, const std::string& input, std::size_t repeat, std::size_t threads,
              const std::string& format, std::istream& in, std::ostream& out) {
  const LoadedModel loaded = load_for_decoding(d);
  const auto lines = read_raw_lines(input, in);
  BenchOptions options;
  options.decoder = loaded.decoder;
  options.beam_width = d.beam_width;
  options.repeat = repeat;
  options.threads = threads;
  if (repeat == 0) throw ConfigError("--repeat must be at least 1");
  const BenchReport report = bench(loaded.checkpoint.model, lines, options);
  if (format == "kv") {
    write_bench_kv(out, report);
  } else {
    write_bench_table(out, report);
  }
  return kSuccess;
}

int cmd_combine(const std::string& base_path, const std::string& ours_path, std::size_t threshold,
                const std::string& output, std::istream& in, std::ostream& out) {
  const auto base = sentences_of(read_corpus(base_path, in));
  const auto ours = sentences_of(read_corpus(ours_path, in));
  if (base.size() != ours.size()) {
    throw AlignmentError(std::min(base.size(), ours.size()),
                         std::to_string(base.size()) + " base sentences but " +
                             std::to_string(ours.size()) + " from ours");
  }
  OutputFile file(output, out);
  write_corpus(file.get(), hybrid_combine(base, ours, threshold));
  file.finish();
  return kSuccess;
}

void add_decode_options(CLI::App& cmd, DecodeArgs& d) {
  cmd.add_option("--checkpoint", d.checkpoint, "Trained checkpoint")->required();
  cmd.add_option("--tagset", d.tagset, "Expected tag set of the checkpoint (01, be, bems)");
  cmd.add_option("--decoder", d.decoder, "greedy, beam or viterbi (default: greedy for 01, else beam)");
  cmd.add_option("--beam-width", d.beam_width, "Beam width")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gap-labeling Chinese word segmenter", "gapseg"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  train_cmd->add_option("--train", train_args.train_path, "Segmented training corpus")->required();
  train_cmd->add_option("--dev", train_args.dev_path, "Segmented dev corpus (default: last 10% of --train)");
  train_cmd->add_option("--checkpoint", train_args.checkpoint, "Output checkpoint path")->required();
  train_cmd->add_option("--config", train_args.config_path, "JSON training configuration");
  train_cmd->add_option("--tagset", train_args.tagset, "01, be or bems (default bems)");
  train_cmd->add_option("--embeddings", train_args.embeddings, "Pretrained embeddings, word2vec text format");
  train_cmd->add_flag("--freeze-embeddings", train_args.freeze_embeddings, "Keep pretrained embeddings fixed");
  train_cmd->add_option("--seed", train_args.seed, "Random seed");
  train_cmd->add_option("--epochs", train_args.epochs, "Maximum epochs");
  train_cmd->add_option("--batch-size", train_args.batch_size, "Sentences per batch");
  train_cmd->add_option("--patience", train_args.patience, "Epochs without dev improvement before stopping");
  train_cmd->add_option("--learning-rate", train_args.learning_rate, "Adam learning rate");
  train_cmd->add_option("--dropout", train_args.dropout, "Dropout probability");
  train_cmd->add_option("--beam-width", train_args.beam_width, "Beam width for dev decoding");
  train_cmd->add_option("--target-f1", train_args.target_f1, "Stop once dev F1 reaches this value");
  train_cmd->add_option("--log", train_args.log_path, "Also write the training log to this file");

  DecodeArgs seg_args;
  std::string seg_input = "-", seg_output = "-";
  std::size_t seg_threads = 1;
  auto* seg_cmd = app.add_subcommand("segment", "Segment raw text, one sentence per line");
  add_decode_options(*seg_cmd, seg_args);
  seg_cmd->add_option("--input", seg_input, "Raw text ('-' for stdin)")->capture_default_str();
  seg_cmd->add_option("--output", seg_output, "Segmented output ('-' for stdout)")->capture_default_str();
  seg_cmd->add_option("--threads", seg_threads, "Worker threads")->capture_default_str();

  std::string gold_path, pred_path, eval_format = "table";
  bool eval_buckets = false;
  auto* eval_cmd = app.add_subcommand("eval", "Word precision, recall and F1");
  eval_cmd->add_option("--gold", gold_path, "Gold segmented corpus")->required();
  eval_cmd->add_option("--pred", pred_path, "Predicted segmented corpus")->required();
  eval_cmd->add_flag("--buckets", eval_buckets, "Add per-length-bucket rows");
  eval_cmd->add_option("--format", eval_format, "table or kv")
      ->check(CLI::IsMember({"table", "kv"}))
      ->capture_default_str();

  DecodeArgs bench_args;
  std::string bench_input = "-", bench_format = "table";
  std::size_t bench_repeat = 3, bench_threads = 1;
  auto* bench_cmd = app.add_subcommand("bench", "Time encode, score and decode");
  add_decode_options(*bench_cmd, bench_args);
  bench_cmd->add_option("--input", bench_input, "Raw text ('-' for stdin)")->capture_default_str();
  bench_cmd->add_option("--repeat", bench_repeat, "Timed passes; the median is reported")->capture_default_str();
  bench_cmd->add_option("--threads", bench_threads, "Throughput mode with this many threads")
      ->capture_default_str();
  bench_cmd->add_option("--format", bench_format, "table or kv")
      ->check(CLI::IsMember({"table", "kv"}))
      ->capture_default_str();

  std::string base_path, ours_path, combine_output = "-";
  std::size_t threshold = kDefaultHybridThreshold;
  auto* combine_cmd = app.add_subcommand("combine", "Use ours for long sentences, base otherwise");
  combine_cmd->add_option("--base", base_path, "Base segmenter output")->required();
  combine_cmd->add_option("--ours", ours_path, "This model's output")->required();
  combine_cmd->add_option("--threshold", threshold, "Character count above which ours is used")
      ->capture_default_str();
  combine_cmd->add_option("--output", combine_output, "Combined output ('-' for stdout)")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << "run with --help for usage\n";
    return kUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_args, in, out, err);
    if (seg_cmd->parsed()) return cmd_segment(seg_args, seg_input, seg_output, seg_threads, in, out);
    if (eval_cmd->parsed()) return cmd_eval(gold_path, pred_path, eval_buckets, eval_format, in, out);
    if (bench_cmd->parsed()) {
      return cmd_bench(bench_args, bench_input, bench_repeat, bench_threads, bench_format, in, out);
    }
    if (combine_cmd->parsed()) return cmd_combine(base_path, ours_path, threshold, combine_output, in, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const IngestionError& e) {
    err << "input error: " << e.what() << '\n';
    return kIo;
  } catch (const AlignmentError& e) {
    err << "alignment error: " << e.what() << '\n';
    return kIo;
  } catch (const LoadError& e) {
    err << "checkpoint error: " << e.what() << '\n';
    return kIo;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}

}  // namespace gapseg::cli
