#pragma once

#include <string>

#include "json.hpp"
#include "lica/config.hpp"
#include "lica/training.hpp"

namespace lica {

// Checkpoint format: one JSON document mapping parameter name to
// {shape, row-major data}, plus metadata (config hash, full config TOML for
// reconstruction, step count, rng state). Doubles round-trip bit-exactly.

nlohmann::json checkpoint_to_json(const TrainConfig& cfg, TrainState& state, long step);
void save_checkpoint(const std::string& path, const TrainConfig& cfg,
                     TrainState& state, long step);

struct LoadedCheckpoint {
  TrainConfig config;
  TrainState state;
  long step = 0;
};

LoadedCheckpoint checkpoint_from_json(const nlohmann::json& j);
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace lica
