#pragma once

// Experiment commands behind the CLI. Each is a pure function of the config
// (including its seed): re-running writes byte-identical data files whatever
// the worker count. Wall-clock time goes to a separate timing.json.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cobra/harness/config.hpp"
#include "cobra/metrics.hpp"
#include "cobra/policy.hpp"
#include "cobra/world.hpp"

namespace cobra::harness {

struct RunOptions {
  std::filesystem::path out_dir = ".";
  std::size_t workers = 1;
  /// Skip writing files (used by tests that only need the numbers).
  bool write_files = true;
};

// Named seed streams; each command derives unit seeds from
// derive_seed(derive_seed(config.seed, stream), unit_index).
namespace streams {
inline constexpr std::uint64_t kTowers = 11;
inline constexpr std::uint64_t kObservation = 12;
inline constexpr std::uint64_t kInference = 13;
inline constexpr std::uint64_t kWorld = 14;
inline constexpr std::uint64_t kHeatmap = 16;
/// Offset of per-step policy seeds inside an episode's world seed.
inline constexpr std::uint64_t kPolicyStep = 1000;
}  // namespace streams

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

// --- characterize -------------------------------------------------------------

struct CharacterizeResult {
  metrics::NoiseCharacterization observation;
  metrics::NoiseCharacterization placement;
  std::vector<std::string> artifacts;
};

CharacterizeResult cmd_characterize(const ExperimentConfig& config, const RunOptions& options);

// --- eval-prediction ----------------------------------------------------------

struct PredictionDataset {
  std::vector<physics::TowerState> towers;
  std::vector<bool> labels;
};

PredictionDataset make_prediction_dataset(const ExperimentConfig& config);

/// Observes each tower in the world and scores it with predict_stability.
std::vector<metrics::ScoredSample> score_prediction_dataset(const PredictionDataset& dataset,
                                                            const world::WorldNoise& world_noise,
                                                            const task::NoiseParams& model_noise,
                                                            std::size_t n_samples,
                                                            std::uint64_t seed,
                                                            std::size_t workers);

struct PredictionResult {
  std::vector<metrics::ScoredSample> samples;
  std::size_t stable_count = 0;
  metrics::ClassifierReport at_configured;
  std::optional<double> youden_tau;
  std::optional<metrics::ClassifierReport> at_youden;
  std::vector<std::string> warnings;
  std::vector<std::string> artifacts;
};

PredictionResult cmd_eval_prediction(const ExperimentConfig& config, const RunOptions& options);

// --- eval-action --------------------------------------------------------------

/// The configuration actually used: with action.no_actuation_noise, world
/// actuation noise and model sigma_a are zeroed.
ExperimentConfig effective_action_config(const ExperimentConfig& config);

policy::CobraSettings cobra_settings(const ExperimentConfig& config);

struct TowerOutcome {
  task::Action action;
  std::optional<policy::SelectionResult> selection;
  std::vector<bool> trial_success;
};

/// Chooses one action with `which` (cobra or baseline) from a single
/// observation, then executes it in `trials` independent worlds seeded
/// derive_seed(world_seed, t). The observation comes from trial 0's world, so
/// trial 0 is exactly a one-step episode run with run_policy_episode.
TowerOutcome evaluate_action_tower(const task::TaskState& initial, const ExperimentConfig& config,
                                   PolicyChoice which, std::uint64_t world_seed,
                                   std::size_t trials);

struct PolicyTally {
  std::size_t successes = 0;
  std::size_t failures = 0;
  std::size_t low_confidence = 0;
  double success_rate() const {
    const auto total = successes + failures;
    return total == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(total);
  }
};

struct ActionResult {
  std::optional<PolicyTally> cobra;
  std::optional<PolicyTally> baseline;
  std::size_t towers = 0;
  std::size_t trials = 0;
  double wall_clock_seconds = 0.0;
  std::vector<std::string> artifacts;
};

ActionResult cmd_eval_action(const ExperimentConfig& config, const RunOptions& options);

// --- heatmap ------------------------------------------------------------------

struct TowerSpec {
  physics::TowerState tower;
  physics::Block queue_block;
};

/// {"tower": [block...], "queue_block": {...}?}; errors carry line/column.
TowerSpec parse_tower_spec(std::string_view text, const std::string& origin,
                           const ExperimentConfig& config);
TowerSpec load_tower_spec(const std::filesystem::path& path, const ExperimentConfig& config);

struct HeatmapResult {
  std::size_t rows = 0;
  std::size_t cols = 0;
  policy::SelectionResult selection;
  /// Zero-noise oracle verdict per candidate, row-major.
  std::vector<bool> oracle_stable;
  std::optional<task::Action> oracle_centroid;
  std::vector<std::string> artifacts;
};

HeatmapResult cmd_heatmap(const ExperimentConfig& config, const TowerSpec& spec,
                          const RunOptions& options);

// --- episode ------------------------------------------------------------------

/// K-step episode from `initial` in World(world_seed); step k's policy seed is
/// derive_seed(world_seed, kPolicyStep + k).
world::EpisodeRecord run_policy_episode(const task::TaskState& initial,
                                        const ExperimentConfig& config, PolicyChoice which,
                                        std::uint64_t world_seed, std::size_t steps);

struct EpisodeResult {
  task::TaskState initial;
  std::vector<std::pair<PolicyChoice, world::EpisodeRecord>> episodes;
  std::vector<std::string> artifacts;
};

EpisodeResult cmd_episode(const ExperimentConfig& config, const RunOptions& options);

}  // namespace cobra::harness
