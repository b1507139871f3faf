#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cobra/task_model.hpp"
#include "cobra/world.hpp"

namespace cobra::harness {

inline constexpr int kSchemaVersion = 1;

/// Invalid or unreadable configuration. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PolicyChoice { cobra, baseline, both };

std::string_view to_string(PolicyChoice p);
PolicyChoice parse_policy(std::string_view s);

struct Thresholds {
  double tau_stable_z = 0.40;
  double tau_stable_a = 0.8;
  double tau_cluster = 0.2;
};

struct CharacterizeSettings {
  std::size_t observation_towers = 250;
  std::size_t tower_blocks = 3;
  std::size_t placement_towers = 25;
  std::size_t placement_trials = 10;
  double offset_range = 4.5;
};

struct PredictionSettings {
  std::size_t towers = 1000;
  std::size_t blocks = 3;
  double offset_range = 4.5;
};

struct ActionSettings {
  std::size_t towers = 50;
  std::size_t trials = 10;
  double offset_range = 4.5;
  std::size_t grid_rows = 5;
  std::size_t grid_cols = 5;
  PolicyChoice policy = PolicyChoice::both;
  bool no_actuation_noise = false;
};

struct HeatmapSettings {
  std::size_t rows = 21;
  std::size_t cols = 21;
};

struct EpisodeSettings {
  std::size_t initial_blocks = 1;
  std::size_t steps = 2;
  double offset_range = 4.5;
};

struct ExperimentConfig {
  world::BlockSpec block;
  world::WorldNoise world_noise{
      world::zero_mean({0.906, 0.216, 0.284}),
      world::zero_mean({1.790, 2.770, 0.146}),
  };
  task::NoiseParams model_noise{0.469, 1.570};
  std::size_t samples_per_query = 50;
  Thresholds thresholds;
  CharacterizeSettings characterize;
  PredictionSettings prediction;
  ActionSettings action;
  HeatmapSettings heatmap;
  EpisodeSettings episode;
  std::uint64_t seed = 0;
};

/// Throws ConfigError on any violated invariant.
void validate(const ExperimentConfig& config);

nlohmann::json to_json(const ExperimentConfig& config);

/// Reads `overrides` on top of the defaults. Unknown keys are errors.
ExperimentConfig config_from_json(const nlohmann::json& overrides);

/// Parses a JSON document; errors carry line and column.
nlohmann::json parse_json_text(std::string_view text, const std::string& origin);

ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace cobra::harness
