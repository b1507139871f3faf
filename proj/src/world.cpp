#include "cobra/world.hpp"

#include <cmath>
#include <string>

namespace cobra::world {

namespace {

constexpr std::uint64_t kObservationStream = 1;
constexpr std::uint64_t kActuationStream = 2;
constexpr std::size_t kRejectionBudget = 10'000;

double draw(Rng& rng, const AxisNoise& n) {
  if (n.sigma == 0.0) return n.mean;
  return std::normal_distribution<double>(n.mean, n.sigma)(rng);
}

double uniform(Rng& rng, double range) {
  if (range == 0.0) return 0.0;
  return std::uniform_real_distribution<double>(-range, range)(rng);
}

}  // namespace

void validate(const WorldNoise& noise) {
  for (const auto* axes : {&noise.obs, &noise.act}) {
    for (const auto& a : *axes) {
      if (!(a.sigma >= 0.0) || !std::isfinite(a.mean)) {
        throw std::invalid_argument("world noise: sigma must be >= 0 and mean finite");
      }
    }
  }
}

AxisNoise3 zero_mean(const Vec3& sigma) {
  return {AxisNoise{0.0, sigma[0]}, AxisNoise{0.0, sigma[1]}, AxisNoise{0.0, sigma[2]}};
}

World::World(TaskState initial, WorldNoise noise, std::uint64_t seed)
    : state_(std::move(initial)),
      noise_(noise),
      obs_rng_(derive_seed(seed, kObservationStream)),
      act_rng_(derive_seed(seed, kActuationStream)) {
  validate(noise_);
  task::validate(state_);
  if (!state_.tower.empty()) state_.tower = physics::settle(std::move(state_.tower));
}

Observation World::observe() {
  Observation obs;
  obs.tower_estimate = state_.tower.blocks;
  for (auto& b : obs.tower_estimate) {
    for (std::size_t axis = 0; axis < 3; ++axis) b.center[axis] += draw(obs_rng_, noise_.obs[axis]);
  }
  return obs;
}

physics::StabilityVerdict World::execute_place(const Action& action) {
  if (state_.queue.empty()) throw EmptyQueue();
  physics::Block block = state_.queue.front();
  state_.queue.erase(state_.queue.begin());
  const Vec3 err{draw(act_rng_, noise_.act[0]), draw(act_rng_, noise_.act[1]),
                 draw(act_rng_, noise_.act[2])};
  block.center = {action.x + err[0], action.y + err[1],
                  state_.tower.height() + 0.5 * block.dims[2] + err[2]};
  last_release_ = block.center;
  state_.tower.blocks.push_back(block);
  state_.tower = physics::settle(std::move(state_.tower));
  return physics::is_stable(state_.tower);
}

TaskState random_tower(std::size_t n_blocks, double offset_range, bool require_stable,
                       std::uint64_t seed, const BlockSpec& spec) {
  if (n_blocks < 1) throw std::invalid_argument("random_tower: n_blocks must be >= 1");
  if (!(offset_range >= 0.0)) throw std::invalid_argument("random_tower: offset_range must be >= 0");
  for (std::size_t attempt = 0; attempt < kRejectionBudget; ++attempt) {
    Rng rng(derive_seed(seed, attempt));
    TaskState state;
    Vec2 xy{0.0, 0.0};
    for (std::size_t i = 0; i < n_blocks; ++i) {
      if (i > 0) {
        xy[0] += uniform(rng, offset_range);
        xy[1] += uniform(rng, offset_range);
      }
      state.tower.blocks.push_back(
          physics::Block{static_cast<int>(i), {xy[0], xy[1], 0.0}, spec.dims, spec.mass});
    }
    state.tower = physics::settle(std::move(state.tower));
    if (!require_stable || physics::is_stable(state.tower).stable) return state;
  }
  throw GenerationFailed("no stable " + std::to_string(n_blocks) + "-block tower within " +
                         std::to_string(kRejectionBudget) + " attempts (offset_range " +
                         std::to_string(offset_range) + ")");
}

TaskState with_queue(TaskState state, std::size_t count, const BlockSpec& spec) {
  int next_id = 0;
  for (const auto& b : state.tower.blocks) next_id = std::max(next_id, b.id + 1);
  for (const auto& b : state.queue) next_id = std::max(next_id, b.id + 1);
  for (std::size_t i = 0; i < count; ++i) {
    state.queue.push_back(physics::Block{next_id++, {0.0, 0.0, 0.0}, spec.dims, spec.mass});
  }
  return state;
}

EpisodeRecord run_episode(World& world, std::size_t steps, const StepPolicy& policy,
                          std::uint64_t seed) {
  EpisodeRecord record;
  record.seed = seed;
  for (std::size_t k = 0; k < steps; ++k) {
    if (world.state().queue.empty()) throw EmptyQueue();
    EpisodeStep step;
    step.observation = world.observe();
    step.action = policy(step.observation, world.state().queue.front(), k);
    step.verdict = world.execute_place(step.action);
    step.realized = world.state().tower.top_block().center;
    record.steps.push_back(std::move(step));
    if (!record.steps.back().verdict.stable) {
      record.success = false;
      break;
    }
  }
  return record;
}

}  // namespace cobra::world
