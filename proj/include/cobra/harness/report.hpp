#pragma once

// JSON/CSV encodings of result types. Every file carries schema_version and
// an echo of the configuration that produced it.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "cobra/harness/config.hpp"
#include "cobra/metrics.hpp"
#include "cobra/physics.hpp"
#include "cobra/policy.hpp"
#include "cobra/world.hpp"

namespace cobra::harness {

nlohmann::json to_json(const physics::Block& block);
nlohmann::json to_json(const physics::TowerState& tower);
nlohmann::json to_json(const physics::StabilityVerdict& verdict);
nlohmann::json to_json(const task::Action& action);
nlohmann::json to_json(const task::Observation& observation);
nlohmann::json to_json(const metrics::ClassifierReport& report);
nlohmann::json to_json(const metrics::NoiseCharacterization& noise);
nlohmann::json to_json(const policy::SelectionResult& selection);
nlohmann::json to_json(const world::EpisodeRecord& record);

physics::Block block_from_json(const nlohmann::json& j, int default_id);

/// {"schema_version", "command", "config"} header shared by JSON reports.
nlohmann::json report_header(std::string_view command, const ExperimentConfig& config);

/// Comment lines prepended to CSV files.
std::string csv_header(std::string_view command, const ExperimentConfig& config);

/// Writes text to path, creating parent directories; throws std::runtime_error
/// naming the path on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace cobra::harness
