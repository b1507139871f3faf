#include "cobra/task_model.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace cobra::task {

namespace {

constexpr std::array<std::string_view, 3> kAxes{"x", "y", "z"};

ppl::SiteName step_root(std::string_view step) { return ppl::SiteName{std::string(step)}; }

}  // namespace

void validate(const TaskState& state) {
  std::set<int> ids;
  for (const auto& b : state.tower.blocks) {
    physics::validate(b);
    if (!ids.insert(b.id).second) {
      throw std::invalid_argument("duplicate block id " + std::to_string(b.id));
    }
  }
  for (const auto& b : state.queue) {
    physics::validate(b);
    if (!ids.insert(b.id).second) {
      throw std::invalid_argument("block id " + std::to_string(b.id) +
                                  " appears twice across tower and queue");
    }
  }
}

void validate(const NoiseParams& noise) {
  if (!(noise.sigma_z >= 0.0) || !(noise.sigma_a >= 0.0)) {
    throw std::invalid_argument("noise standard deviations must be >= 0");
  }
}

Observation perfect_observation(const TowerState& tower) { return {tower.blocks}; }

namespace sites {

ppl::SiteName observation(std::string_view step, int block_id, std::size_t axis) {
  return step_root(step) / "z" / std::to_string(block_id) / kAxes.at(axis);
}

ppl::SiteName observation_noise(std::string_view step, int block_id, std::size_t axis) {
  return step_root(step) / "wz" / std::to_string(block_id) / kAxes.at(axis);
}

ppl::SiteName latent(std::string_view step, int block_id) {
  return step_root(step) / "s" / std::to_string(block_id);
}

ppl::SiteName action(std::string_view step) { return step_root(step) / "a"; }
ppl::SiteName actuation_noise(std::string_view step) { return step_root(step) / "wa"; }
ppl::SiteName placed(std::string_view step) { return step_root(step) / "placed"; }
ppl::SiteName stable(std::string_view step) { return step_root(step) / "stable"; }

}  // namespace sites

TowerState sample_latent_tower(ppl::Context& ctx, const Observation& observation,
                               const NoiseParams& noise, std::string_view step) {
  TowerState latent;
  latent.blocks.reserve(observation.tower_estimate.size());
  for (const Block& seen : observation.tower_estimate) {
    Block b = seen;
    for (std::size_t axis = 0; axis < 3; ++axis) {
      const double z =
          ctx.record(sites::observation(step, seen.id, axis), seen.center[axis]);
      const double w = ctx.sample_scalar(sites::observation_noise(step, seen.id, axis),
                                         ppl::GaussianScalar{0.0, noise.sigma_z});
      b.center[axis] = z + w;
    }
    latent.blocks.push_back(b);
  }
  if (latent.empty()) return latent;
  latent = physics::settle(std::move(latent));
  for (const Block& b : latent.blocks) ctx.record(sites::latent(step, b.id), b.center);
  return latent;
}

TransitionOutcome sample_transition(ppl::Context& ctx, const TowerState& latent,
                                    const Block& queue_front, const Action& action,
                                    const NoiseParams& noise, std::string_view step) {
  if (latent.contains_id(queue_front.id)) {
    throw std::invalid_argument("block " + std::to_string(queue_front.id) +
                                " is already in the tower");
  }
  const Vec2 a = ctx.sample_vec2(sites::action(step), ppl::Delta{Vec2{action.x, action.y}});
  const Vec3 w = ctx.sample_vec3(sites::actuation_noise(step),
                                 ppl::GaussianIsotropic3{{0.0, 0.0, 0.0}, noise.sigma_a});
  Block placed = queue_front;
  placed.center = {a[0] + w[0], a[1] + w[1], latent.height() + 0.5 * placed.dims[2] + w[2]};
  ctx.record(sites::placed(step), placed.center);

  TransitionOutcome out;
  out.successor = latent;
  out.successor.blocks.push_back(placed);
  out.successor = physics::settle(std::move(out.successor));
  out.stable = physics::is_stable(out.successor).stable;
  ctx.record(sites::stable(step), out.stable ? 1.0 : 0.0);
  return out;
}

ppl::Model latent_state_model(Observation observation, NoiseParams noise) {
  validate(noise);
  if (observation.tower_estimate.empty()) throw physics::EmptyTower();
  return [observation = std::move(observation), noise](ppl::Context& ctx) {
    const TowerState latent = sample_latent_tower(ctx, observation, noise);
    ctx.record(sites::stable(sites::kLatentStep), physics::is_stable(latent).stable ? 1.0 : 0.0);
  };
}

ppl::Model transition_model(TowerState latent, Block queue_front, Action action,
                            NoiseParams noise) {
  validate(noise);
  return [latent = std::move(latent), queue_front, action, noise](ppl::Context& ctx) {
    sample_transition(ctx, latent, queue_front, action, noise);
  };
}

ppl::Model full_step_model(Observation observation, Block queue_front, Action action,
                           NoiseParams noise) {
  validate(noise);
  return [observation = std::move(observation), queue_front, action, noise](ppl::Context& ctx) {
    const TowerState latent = sample_latent_tower(ctx, observation, noise);
    sample_transition(ctx, latent, queue_front, action, noise);
  };
}

ppl::InterventionSet do_action(const Action& action) {
  ppl::InterventionSet handlers;
  handlers.assignments.emplace(sites::action(), Vec2{action.x, action.y});
  return handlers;
}

ppl::Query stable_indicator(std::string_view step) {
  return [name = sites::stable(step)](const ppl::Trace& trace) { return trace.scalar(name); };
}

}  // namespace cobra::task
