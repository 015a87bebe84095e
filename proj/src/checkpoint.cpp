#include "gapseg/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gapseg/error.hpp"

namespace gapseg {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'G', 'A', 'P', 'S', 'E', 'G', 'C', 'K'};

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const std::string& bytes, std::size_t offset) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return v;
}

}  // namespace

json config_to_json(const TrainConfig& c) {
  json j;
  j["tagset"] = std::string(tagset_name(c.model.tagset));
  j["embedding_dim"] = c.model.embedding_dim;
  j["hidden_size"] = c.model.hidden_size;
  j["num_layers"] = c.model.num_layers;
  j["biaffine_size"] = c.model.biaffine_size;
  j["dropout"] = c.model.dropout;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["seed"] = c.seed;
  j["clip_norm"] = c.clip_norm;
  j["beam_width"] = c.beam_width;
  j["target_dev_f1"] = c.target_dev_f1 ? json(*c.target_dev_f1) : json(nullptr);
  return j;
}

void apply_config_json(TrainConfig& c, const json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "tagset") c.model.tagset = parse_tagset_kind(value.get<std::string>());
      else if (key == "embedding_dim") c.model.embedding_dim = value.get<std::size_t>();
      else if (key == "hidden_size") c.model.hidden_size = value.get<std::size_t>();
      else if (key == "num_layers") c.model.num_layers = value.get<std::size_t>();
      else if (key == "biaffine_size") c.model.biaffine_size = value.get<std::size_t>();
      else if (key == "dropout") c.model.dropout = value.get<double>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "max_epochs") c.max_epochs = value.get<std::size_t>();
      else if (key == "patience") c.patience = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "clip_norm") c.clip_norm = value.get<double>();
      else if (key == "beam_width") c.beam_width = value.get<std::size_t>();
      else if (key == "target_dev_f1") {
        c.target_dev_f1 = value.is_null() ? std::nullopt : std::optional<double>(value.get<double>());
      } else {
        throw ConfigError("unknown configuration key '" + key + "'");
      }
    } catch (const json::exception& e) {
      throw ConfigError("configuration key '" + key + "': " + e.what());
    }
  }
}

std::string checkpoint_bytes(const Model& model, const TrainConfig& config,
                             const TrainingMeta& meta) {
  TrainConfig snapshot = config;
  snapshot.model = model.config();

  json manifest;
  manifest["config"] = config_to_json(snapshot);
  manifest["embedding_trainable"] = model.embedding_trainable();
  manifest["training"] = {{"epoch", meta.epoch}, {"dev_f1", meta.dev_f1}, {"seed", meta.seed}};
  json vocab = json::array();
  for (char32_t c : model.vocabulary().chars()) vocab.push_back(static_cast<std::uint32_t>(c));
  manifest["vocabulary"] = std::move(vocab);

  json tensors = json::array();
  std::size_t offset = 0;
  for (const auto& p : model.params().all()) {
    tensors.push_back({{"name", p.name}, {"shape", p.value.shape()}, {"offset", offset}});
    offset += p.value.size() * sizeof(double);
  }
  manifest["tensors"] = std::move(tensors);
  manifest["payload_bytes"] = offset;
  const std::string text = manifest.dump();

  std::string out(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  out.reserve(out.size() + offset);
  for (const auto& p : model.params().all())
    for (double v : p.value.data()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

void save_checkpoint(std::ostream& out, const Model& model, const TrainConfig& config,
                     const TrainingMeta& meta) {
  const std::string bytes = checkpoint_bytes(model, config, meta);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed to write checkpoint");
}

Checkpoint load_checkpoint(std::istream& in, std::optional<TagSetKind> expected_tagset) {
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw LoadError("magic: not a checkpoint file");
  }
  if (bytes.size() < 12) throw LoadError("version: truncated stream");
  const auto version = get_le<std::uint32_t>(bytes, 8);
  if (version != kCheckpointVersion) {
    throw LoadError("version: unsupported checkpoint version " + std::to_string(version) +
                    " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  if (bytes.size() < 20) throw LoadError("manifest_length: truncated stream");
  const auto manifest_len = get_le<std::uint64_t>(bytes, 12);
  if (bytes.size() - 20 < manifest_len) throw LoadError("manifest: truncated stream");

  json manifest;
  try {
    manifest = json::parse(bytes.begin() + 20, bytes.begin() + 20 + static_cast<std::ptrdiff_t>(manifest_len));
  } catch (const json::exception& e) {
    throw LoadError(std::string("manifest: ") + e.what());
  }
  auto field = [&](const char* name) -> const json& {
    if (!manifest.contains(name)) throw LoadError(std::string(name) + ": missing");
    return manifest[name];
  };

  TrainConfig config;
  try {
    apply_config_json(config, field("config"));
  } catch (const ConfigError& e) {
    throw LoadError(std::string("config: ") + e.what());
  }
  config.model.check();
  if (expected_tagset && *expected_tagset != config.model.tagset) {
    throw ConfigError("checkpoint was trained for tag set " +
                      std::string(tagset_name(config.model.tagset)) + ", not " +
                      std::string(tagset_name(*expected_tagset)));
  }

  std::vector<char32_t> chars;
  TrainingMeta meta;
  bool trainable = true;
  try {
    for (const auto& c : field("vocabulary")) chars.push_back(static_cast<char32_t>(c.get<std::uint32_t>()));
    const json& t = field("training");
    meta.epoch = t.at("epoch").get<std::size_t>();
    meta.dev_f1 = t.at("dev_f1").get<double>();
    meta.seed = t.at("seed").get<std::uint64_t>();
    trainable = field("embedding_trainable").get<bool>();
  } catch (const json::exception& e) {
    throw LoadError(std::string("manifest: ") + e.what());
  } catch (const ContractError& e) {
    throw LoadError(std::string("vocabulary: ") + e.what());
  }

  Model model(config.model, Vocabulary::from_chars(chars), 0);
  model.set_embedding_trainable(trainable);
  const std::size_t labels = model.tagset().size();

  const json& tensors = field("tensors");
  auto& store = model.params();
  if (!tensors.is_array() || tensors.size() != store.size()) {
    throw LoadError("tensors: expected " + std::to_string(store.size()) + " entries");
  }
  const std::size_t payload_start = 20 + manifest_len;
  const std::size_t payload_bytes = field("payload_bytes").get<std::size_t>();
  if (bytes.size() - payload_start != payload_bytes) {
    throw LoadError("payload: expected " + std::to_string(payload_bytes) + " bytes, found " +
                    std::to_string(bytes.size() - payload_start));
  }
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    nn::Parameter& p = store[k];
    const json& entry = tensors[k];
    std::string name;
    nn::Shape shape;
    std::size_t offset = 0;
    try {
      name = entry.at("name").get<std::string>();
      shape = entry.at("shape").get<nn::Shape>();
      offset = entry.at("offset").get<std::size_t>();
    } catch (const json::exception& e) {
      throw LoadError("tensors[" + std::to_string(k) + "]: " + e.what());
    }
    if (name != p.name) throw LoadError("tensors[" + std::to_string(k) + "]: unexpected tensor '" + name + "'");
    if (name.rfind("scorer.gap.", 0) == 0 && !shape.empty() && shape[0] != labels) {
      throw ConfigError("tensor '" + name + "' scores " + std::to_string(shape[0]) +
                        " labels but tag set " + model.tagset().name + " has " +
                        std::to_string(labels));
    }
    if (shape != p.value.shape()) {
      throw LoadError(name + ": shape " + nn::shape_string(shape) + " does not match " +
                      nn::shape_string(p.value.shape()));
    }
    const std::size_t size = p.value.size() * sizeof(double);
    if (offset > payload_bytes || payload_bytes - offset < size) {
      throw LoadError(name + ": payload range out of bounds");
    }
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      p.value[i] = std::bit_cast<double>(get_le<std::uint64_t>(bytes, payload_start + offset + 8 * i));
    }
  }
  return Checkpoint{std::move(model), std::move(config), meta};
}

void save_checkpoint_file(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  save_checkpoint(out, ckpt.model, ckpt.config, ckpt.meta);
}

Checkpoint load_checkpoint_file(const std::string& path, std::optional<TagSetKind> expected_tagset) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  return load_checkpoint(in, expected_tagset);
}

}  // namespace gapseg
