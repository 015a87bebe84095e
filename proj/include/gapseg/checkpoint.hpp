#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "gapseg/config.hpp"
#include "gapseg/model.hpp"
#include "gapseg/training.hpp"

namespace gapseg {

// Checkpoint layout (all integers little-endian):
//
//   offset 0   8 bytes  magic "GAPSEGCK"
//   offset 8   u32      format version (kCheckpointVersion)
//   offset 12  u64      manifest length M in bytes
//   offset 20  M bytes  manifest, compact JSON with sorted keys:
//                         config               training configuration
//                         embedding_trainable  bool
//                         training             {epoch, dev_f1, seed}
//                         vocabulary           code points, index k+1 each
//                         tensors              [{name, shape, offset}]
//                         payload_bytes        total payload size
//   offset 20+M         payload: IEEE-754 binary64 values, row-major per
//                       tensor, `offset` counted from the payload start
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Model model;
  TrainConfig config;
  TrainingMeta meta;
};

void save_checkpoint(std::ostream& out, const Model& model, const TrainConfig& config,
                     const TrainingMeta& meta);
std::string checkpoint_bytes(const Model& model, const TrainConfig& config,
                             const TrainingMeta& meta);

// Throws LoadError naming the offending field, or ConfigError when the stored
// tensors do not fit the stored (or the expected) tag set.
Checkpoint load_checkpoint(std::istream& in,
                           std::optional<TagSetKind> expected_tagset = std::nullopt);

void save_checkpoint_file(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint_file(const std::string& path,
                                std::optional<TagSetKind> expected_tagset = std::nullopt);

// JSON form of TrainConfig, shared by checkpoints and --config files.
nlohmann::json config_to_json(const TrainConfig& config);
// Overrides the fields present in j; unknown keys are rejected.
void apply_config_json(TrainConfig& config, const nlohmann::json& j);

}  // namespace gapseg
