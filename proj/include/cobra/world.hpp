#pragma once

// Ground-truth environment: owns the true task state, produces noisy
// observations and executes noisy placements. Its noise may be biased and
// anisotropic, unlike the model's isotropic assumption.

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "cobra/common.hpp"
#include "cobra/physics.hpp"
#include "cobra/task_model.hpp"

namespace cobra::world {

using task::Action;
using task::Observation;
using task::TaskState;

class EmptyQueue : public std::logic_error {
 public:
  EmptyQueue() : std::logic_error("no blocks left in the queue") {}
};

class GenerationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AxisNoise {
  double mean = 0.0;
  double sigma = 0.0;
};

using AxisNoise3 = std::array<AxisNoise, 3>;

struct WorldNoise {
  AxisNoise3 obs{};
  AxisNoise3 act{};
};

void validate(const WorldNoise& noise);

/// Zero-mean noise with the given per-axis standard deviations.
AxisNoise3 zero_mean(const Vec3& sigma);

/// Shape shared by every block a world generates.
struct BlockSpec {
  Vec3 dims{7.5, 7.5, 7.5};
  double mass = 200.0;
};

/// Single-owner mutable environment. Observation and actuation noise come
/// from two independent streams derived from the seed, so the outcome of a
/// placement does not depend on how many observations were taken before it.
class World {
 public:
  World(TaskState initial, WorldNoise noise, std::uint64_t seed);

  Observation observe();

  /// Places the queue front at `action` plus actuation noise; returns the
  /// ground-truth verdict of the resulting tower. Throws EmptyQueue.
  physics::StabilityVerdict execute_place(const Action& action);

  const TaskState& state() const { return state_; }
  const WorldNoise& noise() const { return noise_; }
  /// Center of the last placed block at release, before settling.
  const Vec3& last_release() const { return last_release_; }

 private:
  TaskState state_;
  WorldNoise noise_;
  Vec3 last_release_{};
  Rng obs_rng_;
  Rng act_rng_;
};

/// Random tower with per-axis offsets between successive blocks drawn from
/// U[-offset_range, offset_range]. Block 0 sits at the origin. With
/// require_stable, rejection-samples up to 10 000 times.
TaskState random_tower(std::size_t n_blocks, double offset_range, bool require_stable,
                       std::uint64_t seed, const BlockSpec& spec = {});

/// Appends `count` queue blocks with ids following the tower's.
TaskState with_queue(TaskState state, std::size_t count, const BlockSpec& spec = {});

struct EpisodeStep {
  Observation observation;
  Action action;
  /// Settled center of the block after placement.
  Vec3 realized{};
  physics::StabilityVerdict verdict;
};

struct EpisodeRecord {
  std::uint64_t seed = 0;
  std::vector<EpisodeStep> steps;
  bool success = true;
};

using StepPolicy = std::function<Action(const Observation&, const task::Block& queue_front,
                                        std::size_t step)>;

/// observe, act, execute for up to `steps` placements; the first unstable
/// verdict ends the episode as a failure.
EpisodeRecord run_episode(World& world, std::size_t steps, const StepPolicy& policy,
                          std::uint64_t seed);

}  // namespace cobra::world
