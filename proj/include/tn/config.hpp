#pragma once

#include <map>
#include <string>

#include "tn/train.hpp"

namespace tn::cfg {

std::string norm_mode_name(mps::NormMode mode);
mps::NormMode norm_mode_from_name(const std::string& name);

/// Sets a single configuration field by key; throws std::invalid_argument
/// on an unknown key or an unparsable value.
void apply_key(train::TrainConfig& config, const std::string& key,
               const std::string& value);

/// Flat key=value text. '#' starts a comment, blank lines are skipped, and
/// optional [section] headers are ignored (the format is flat). Errors are
/// reported with the originating line number.
train::TrainConfig parse_config_text(const std::string& text,
                                     const std::string& origin,
                                     const train::TrainConfig& defaults = {});

train::TrainConfig parse_config_file(const std::string& path,
                                     const train::TrainConfig& defaults = {});

/// Every field as a string map, in the same key vocabulary apply_key accepts.
std::map<std::string, std::string> config_to_map(const train::TrainConfig& config);

}  // namespace tn::cfg
