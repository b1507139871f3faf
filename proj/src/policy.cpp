#include "cobra/policy.hpp"

#include <cmath>
#include <stdexcept>

#include "cobra/ppl.hpp"

namespace cobra::policy {

std::string_view to_string(Confidence c) {
  return c == Confidence::normal ? "normal" : "fallback_low_confidence";
}

std::vector<Action> candidate_grid(const task::Block& top_block, std::size_t rows,
                                   std::size_t cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("candidate_grid: rows and cols must be >= 1");
  const double w = top_block.dims[0];
  const double d = top_block.dims[1];
  const double x0 = top_block.center[0] - 0.5 * w;
  const double y0 = top_block.center[1] - 0.5 * d;
  std::vector<Action> grid;
  grid.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double y = y0 + (static_cast<double>(r) + 0.5) * d / static_cast<double>(rows);
    for (std::size_t c = 0; c < cols; ++c) {
      const double x = x0 + (static_cast<double>(c) + 0.5) * w / static_cast<double>(cols);
      grid.push_back({x, y});
    }
  }
  return grid;
}

std::vector<CandidateScore> score_candidates(const task::Observation& observation,
                                             const task::Block& queue_front,
                                             const std::vector<Action>& candidates,
                                             const task::NoiseParams& noise,
                                             std::size_t n_samples, std::uint64_t seed,
                                             std::size_t workers) {
  if (candidates.empty()) throw std::invalid_argument("score_candidates: no candidates");
  // The nominal action is overridden by do(); any candidate will do.
  const auto model = task::full_step_model(observation, queue_front, candidates.front(), noise);
  const auto query = task::stable_indicator(task::sites::kTransitionStep);
  std::vector<CandidateScore> scores(candidates.size());
  parallel_for(candidates.size(), workers, [&](std::size_t i) {
    const auto result = ppl::importance_query(model, task::do_action(candidates[i]), {}, query,
                                               n_samples, derive_seed(seed, i));
    scores[i].action = candidates[i];
    scores[i].phi = result.estimate;
  });
  return scores;
}

SelectionResult select_action(std::vector<CandidateScore> scores, double tau_stable_a,
                              double tau_cluster) {
  if (scores.empty()) throw std::invalid_argument("select_action: no scores");
  if (!(tau_stable_a >= 0.0 && tau_stable_a <= 1.0) || !(tau_cluster >= 0.0 && tau_cluster <= 1.0)) {
    throw std::invalid_argument("select_action: thresholds must lie in [0, 1]");
  }

  double cx = 0.0;
  double cy = 0.0;
  for (const auto& s : scores) {
    cx += s.action.x;
    cy += s.action.y;
  }
  cx /= static_cast<double>(scores.size());
  cy /= static_cast<double>(scores.size());
  const auto dist2 = [&](const Action& a) {
    return (a.x - cx) * (a.x - cx) + (a.y - cy) * (a.y - cy);
  };

  bool any_in_tau = false;
  for (auto& s : scores) {
    s.in_tau_set = s.phi >= tau_stable_a;
    s.in_stable_set = false;
    any_in_tau = any_in_tau || s.in_tau_set;
  }

  // Argmax over A_tau (or everything on fallback): higher phi, then closer
  // to the face center, then lower index.
  std::size_t best = scores.size();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (any_in_tau && !scores[i].in_tau_set) continue;
    if (best == scores.size()) {
      best = i;
      continue;
    }
    const auto& a = scores[i];
    const auto& b = scores[best];
    if (a.phi > b.phi ||
        (a.phi == b.phi && dist2(a.action) < dist2(b.action) - kMarginTolerance)) {
      best = i;
    }
  }

  SelectionResult result;
  result.best_index = best;
  result.best = scores[best].action;
  result.best_phi = scores[best].phi;

  if (!any_in_tau) {
    result.chosen = result.best;
    result.confidence = Confidence::fallback_low_confidence;
    result.scores = std::move(scores);
    return result;
  }

  double sx = 0.0;
  double sy = 0.0;
  std::size_t count = 0;
  for (auto& s : scores) {
    s.in_stable_set = s.in_tau_set && result.best_phi - s.phi <= tau_cluster + kMarginTolerance;
    if (s.in_stable_set) {
      sx += s.action.x;
      sy += s.action.y;
      ++count;
    }
  }
  result.chosen = {sx / static_cast<double>(count), sy / static_cast<double>(count)};
  result.confidence = Confidence::normal;
  result.scores = std::move(scores);
  return result;
}

Action baseline_action(const task::Block& top_block) {
  return {top_block.center[0], top_block.center[1]};
}

SelectionResult choose_action(const task::Observation& observation, const task::Block& queue_front,
                              const CobraSettings& settings, std::uint64_t seed) {
  if (observation.tower_estimate.empty()) throw physics::EmptyTower();
  const auto grid = candidate_grid(observation.tower_estimate.back(), settings.rows, settings.cols);
  auto scores = score_candidates(observation, queue_front, grid, settings.noise,
                                 settings.n_samples, seed, settings.workers);
  return select_action(std::move(scores), settings.tau_stable_a, settings.tau_cluster);
}

}  // namespace cobra::policy
