// Checkpoint directory: manifest.json plus one PTNS tensor per parameter.
#pragma once

#include <map>
#include <string>

#include "percept/network.hpp"

namespace percept {

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CheckpointMeta {
    int stage = 0;
    int epoch = 0;
    double val_mae_apparent = -1.0;  // negative = not applicable
    double val_mae_real = -1.0;
};

void save_checkpoint(const std::string& dir, const NetworkSpec& spec, const ModelParams& params,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
    NetworkSpec spec;
    ModelParams params;
    CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::string& dir);

}  // namespace percept
