#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "conjunctive/evaluation.hpp"

namespace conjunctive {

nlohmann::json to_json(const EpisodeRecord& record);

/// Throws SchemaError naming the first missing or mistyped field.
EpisodeRecord record_from_json(const nlohmann::json& j);

/// One compact JSON object per line, in the given order.
void write_episode_log(std::span<const EpisodeRecord> records, const std::filesystem::path& path);

/// Throws ParseError (with 1-based line number) for malformed lines and
/// SchemaError for missing fields; IoError when the file cannot be opened.
std::vector<EpisodeRecord> read_episode_log(const std::filesystem::path& path);

nlohmann::json to_json(const AttackConfig& config);
AttackConfig attack_config_from_json(const nlohmann::json& j);

}  // namespace conjunctive
