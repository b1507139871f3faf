#pragma once

// Block-stacking dynamic causal model written as ppl programs.
//
// Site layout for one step labelled `step` (e.g. "t0", "t1"):
//   <step>/z/<id>/{x,y,z}   observation inputs (Delta)
//   <step>/wz/<id>/{x,y,z}  observation noise, GaussianScalar(0, sigma_z)
//   <step>/s/<id>           latent settled block position (Delta, Vec3)
//   <step>/a                placement action (Vec2), the intervention target
//   <step>/wa               actuation noise, GaussianIsotropic3(0, sigma_a)
//   <step>/placed           realized pre-settle placement of the new block
//   <step>/stable           1.0 when the resulting tower is stable

#include <string>
#include <string_view>
#include <vector>

#include "cobra/physics.hpp"
#include "cobra/ppl.hpp"

namespace cobra::task {

using physics::Block;
using physics::TowerState;

struct TaskState {
  TowerState tower;
  /// Blocks still to be placed, front first.
  std::vector<Block> queue;
};

/// Checks that tower and queue ids are disjoint and unique.
void validate(const TaskState& state);

/// Per-block position estimates; ids, dims and masses are taken as known.
struct Observation {
  std::vector<Block> tower_estimate;
};

struct Action {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Action&, const Action&) = default;
};

struct NoiseParams {
  double sigma_z = 0.0;
  double sigma_a = 0.0;
};

void validate(const NoiseParams& noise);

/// An observation that reports the latent tower exactly.
Observation perfect_observation(const TowerState& tower);

namespace sites {
inline constexpr std::string_view kLatentStep = "t0";
inline constexpr std::string_view kTransitionStep = "t1";

ppl::SiteName observation(std::string_view step, int block_id, std::size_t axis);
ppl::SiteName observation_noise(std::string_view step, int block_id, std::size_t axis);
ppl::SiteName latent(std::string_view step, int block_id);
ppl::SiteName action(std::string_view step = kTransitionStep);
ppl::SiteName actuation_noise(std::string_view step = kTransitionStep);
ppl::SiteName placed(std::string_view step = kTransitionStep);
ppl::SiteName stable(std::string_view step);
}  // namespace sites

// Sub-programs. They can be composed inside any ppl model.

/// Latent tower: observed position plus Gaussian noise per block and axis, settled.
TowerState sample_latent_tower(ppl::Context& ctx, const Observation& observation,
                               const NoiseParams& noise,
                               std::string_view step = sites::kLatentStep);

struct TransitionOutcome {
  TowerState successor;
  bool stable = false;
};

/// Places `queue_front` at the (possibly intervened) action plus actuation noise.
TransitionOutcome sample_transition(ppl::Context& ctx, const TowerState& latent,
                                    const Block& queue_front, const Action& action,
                                    const NoiseParams& noise,
                                    std::string_view step = sites::kTransitionStep);

// Complete programs. Each records its stability outcome at sites::stable(step).

ppl::Model latent_state_model(Observation observation, NoiseParams noise);
ppl::Model transition_model(TowerState latent, Block queue_front, Action action,
                            NoiseParams noise);
ppl::Model full_step_model(Observation observation, Block queue_front, Action action,
                           NoiseParams noise);

/// do(action = a) on the transition step.
ppl::InterventionSet do_action(const Action& action);

/// Query returning the recorded stability indicator of `step`.
ppl::Query stable_indicator(std::string_view step);

}  // namespace cobra::task
