#pragma once

#include <map>
#include <string>

#include "tn/train.hpp"

namespace tn::ckpt {

struct Checkpoint {
    train::Model model;
    train::TrainConfig config;
    std::map<std::string, std::string> manifest;
};

/// Binary checkpoint: a text manifest followed by the raw little-endian
/// float64 payload of every parameter tensor. Round trips are bit exact.
/// The created_unix manifest field honors SOURCE_DATE_EPOCH when set.
void save_checkpoint(const std::string& path, const train::Model& model,
                     const train::TrainConfig& config);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace tn::ckpt
