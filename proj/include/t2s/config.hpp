#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "t2s/trainer.hpp"

namespace t2s {

std::string to_string(LossMode mode);
std::string to_string(EncoderKind kind);
LossMode parse_loss_mode(std::string_view name);
EncoderKind parse_encoder_kind(std::string_view name);

/// Flat "key = value" file; '#' starts a comment.
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

/// Sets one TrainConfig field by key. Returns false for keys that are not
/// TrainConfig fields; throws on malformed values.
bool apply_config_value(TrainConfig& config, std::string_view key,
                        std::string_view value);

/// Every TrainConfig field as (key, value) in a fixed order.
std::vector<std::pair<std::string, std::string>> config_items(const TrainConfig& config);

}  // namespace t2s
