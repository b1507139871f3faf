#pragma once

// Greedy next-best placement: score a candidate grid with interventional
// stability queries, keep the near-best safe candidates and place at their
// centroid. Also the naive center-placement baseline.

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "cobra/task_model.hpp"

namespace cobra::policy {

using task::Action;

struct CandidateScore {
  Action action;
  double phi = 0.0;
  bool in_tau_set = false;
  bool in_stable_set = false;
};

enum class Confidence { normal, fallback_low_confidence };

std::string_view to_string(Confidence c);

struct SelectionResult {
  Action chosen;
  std::vector<CandidateScore> scores;
  /// Index into scores of a*.
  std::size_t best_index = 0;
  Action best;
  double best_phi = 0.0;
  Confidence confidence = Confidence::normal;
};

/// Slack on the cluster margin so k/n estimates compare as exact fractions.
inline constexpr double kMarginTolerance = 1e-9;

/// Cell-center grid over the top face of `top_block`, row-major (rows along y).
std::vector<Action> candidate_grid(const task::Block& top_block, std::size_t rows,
                                   std::size_t cols);

/// phi for each candidate under do(action = candidate). Candidate i uses seed
/// derive_seed(seed, i).
std::vector<CandidateScore> score_candidates(const task::Observation& observation,
                                             const task::Block& queue_front,
                                             const std::vector<Action>& candidates,
                                             const task::NoiseParams& noise,
                                             std::size_t n_samples, std::uint64_t seed,
                                             std::size_t workers = 1);

/// Applies the tau / cluster rule. The top-face center used for argmax
/// tie-breaking is the mean of all candidate positions, which is exact for
/// the symmetric grids produced by candidate_grid.
SelectionResult select_action(std::vector<CandidateScore> scores, double tau_stable_a,
                              double tau_cluster);

Action baseline_action(const task::Block& top_block);

struct CobraSettings {
  task::NoiseParams noise;
  std::size_t rows = 5;
  std::size_t cols = 5;
  std::size_t n_samples = 50;
  double tau_stable_a = 0.8;
  double tau_cluster = 0.2;
  std::size_t workers = 1;
};

/// Grid, score and select on the observed top block.
SelectionResult choose_action(const task::Observation& observation, const task::Block& queue_front,
                              const CobraSettings& settings, std::uint64_t seed);

}  // namespace cobra::policy
