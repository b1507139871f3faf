#include "cobra/harness/commands.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "cobra/harness/report.hpp"

namespace cobra::harness {

using nlohmann::json;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void write_timing(const RunOptions& options, std::string_view command, double seconds) {
  if (!options.write_files) return;
  write_json(options.out_dir / "timing.json",
             {{"command", std::string(command)}, {"wall_clock_seconds", seconds},
              {"workers", options.workers}});
}

world::BlockSpec block_spec(const ExperimentConfig& c) { return c.block; }

task::Action choose(const task::Observation& observation, const physics::Block& queue_front,
                    const ExperimentConfig& config, PolicyChoice which, std::uint64_t seed,
                    std::optional<policy::SelectionResult>* selection) {
  if (which == PolicyChoice::baseline) {
    return policy::baseline_action(observation.tower_estimate.back());
  }
  auto result = policy::choose_action(observation, queue_front, cobra_settings(config), seed);
  const task::Action chosen = result.chosen;
  if (selection != nullptr) *selection = std::move(result);
  return chosen;
}

std::vector<PolicyChoice> policies_of(PolicyChoice p) {
  if (p == PolicyChoice::both) return {PolicyChoice::cobra, PolicyChoice::baseline};
  return {p};
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  return derive_seed(derive_seed(master, stream), index);
}

// --- characterize -------------------------------------------------------------

CharacterizeResult cmd_characterize(const ExperimentConfig& config, const RunOptions& options) {
  validate(config);
  const Stopwatch clock;
  const auto& ch = config.characterize;

  std::vector<std::vector<std::pair<Vec3, Vec3>>> obs_pairs(ch.observation_towers);
  parallel_for(ch.observation_towers, options.workers, [&](std::size_t i) {
    const auto state = world::random_tower(ch.tower_blocks, ch.offset_range, false,
                                           stream_seed(config.seed, streams::kTowers, i),
                                           block_spec(config));
    world::World w(state, config.world_noise,
                   stream_seed(config.seed, streams::kObservation, i));
    const auto observed = w.observe();
    for (std::size_t b = 0; b < state.tower.size(); ++b) {
      obs_pairs[i].emplace_back(observed.tower_estimate[b].center, state.tower.blocks[b].center);
    }
  });

  std::vector<std::vector<std::pair<Vec3, Vec3>>> place_pairs(ch.placement_towers);
  parallel_for(ch.placement_towers, options.workers, [&](std::size_t i) {
    const auto state = world::with_queue(
        world::random_tower(2, ch.offset_range, true,
                            stream_seed(config.seed, streams::kTowers, ch.observation_towers + i),
                            block_spec(config)),
        1, block_spec(config));
    const auto target = policy::baseline_action(state.tower.top_block());
    const Vec3 intended{target.x, target.y,
                        state.tower.height() + 0.5 * state.queue.front().dims[2]};
    const auto world_seed = stream_seed(config.seed, streams::kWorld, i);
    for (std::size_t t = 0; t < ch.placement_trials; ++t) {
      world::World w(state, config.world_noise, derive_seed(world_seed, t));
      w.execute_place(target);
      place_pairs[i].emplace_back(w.last_release(), intended);
    }
  });

  const auto flatten = [](const auto& nested) {
    std::vector<std::pair<Vec3, Vec3>> flat;
    for (const auto& v : nested) flat.insert(flat.end(), v.begin(), v.end());
    return flat;
  };

  CharacterizeResult result;
  result.observation = metrics::characterize_noise(flatten(obs_pairs));
  result.placement = metrics::characterize_noise(flatten(place_pairs));

  if (options.write_files) {
    result.artifacts = {"noise_characterization.json", "noise_table.csv"};
    json report = report_header("characterize", config);
    report["measurement"] = to_json(result.observation);
    report["placement"] = to_json(result.placement);
    report["artifacts"] = result.artifacts;
    write_json(options.out_dir / "noise_characterization.json", report);

    std::ostringstream csv;
    csv << csv_header("characterize", config) << "row,X,Y,Z,Avg\n";
    for (const auto& [name, n] : {std::pair{"Measurement", &result.observation},
                                  std::pair{"Placement", &result.placement}}) {
      csv << name << ',' << format_number(n->axes[0].sigma) << ','
          << format_number(n->axes[1].sigma) << ',' << format_number(n->axes[2].sigma) << ','
          << format_number(n->isotropic_sigma) << '\n';
    }
    write_text(options.out_dir / "noise_table.csv", csv.str());
  }
  write_timing(options, "characterize", clock.seconds());
  return result;
}

// --- eval-prediction ----------------------------------------------------------

PredictionDataset make_prediction_dataset(const ExperimentConfig& config) {
  PredictionDataset data;
  const auto& p = config.prediction;
  data.towers.resize(p.towers);
  data.labels.resize(p.towers);
  for (std::size_t i = 0; i < p.towers; ++i) {
    data.towers[i] = world::random_tower(p.blocks, p.offset_range, false,
                                         stream_seed(config.seed, streams::kTowers, i),
                                         block_spec(config))
                         .tower;
    data.labels[i] = physics::is_stable(data.towers[i]).stable;
  }
  return data;
}

std::vector<metrics::ScoredSample> score_prediction_dataset(const PredictionDataset& dataset,
                                                            const world::WorldNoise& world_noise,
                                                            const task::NoiseParams& model_noise,
                                                            std::size_t n_samples,
                                                            std::uint64_t seed,
                                                            std::size_t workers) {
  std::vector<metrics::ScoredSample> samples(dataset.towers.size());
  parallel_for(dataset.towers.size(), workers, [&](std::size_t i) {
    world::World w(task::TaskState{dataset.towers[i], {}}, world_noise,
                   stream_seed(seed, streams::kObservation, i));
    const auto observation = w.observe();
    samples[i].phi = metrics::predict_stability(observation, model_noise, n_samples,
                                                stream_seed(seed, streams::kInference, i));
    samples[i].label = dataset.labels[i];
  });
  return samples;
}

PredictionResult cmd_eval_prediction(const ExperimentConfig& config, const RunOptions& options) {
  validate(config);
  const Stopwatch clock;
  const auto dataset = make_prediction_dataset(config);

  PredictionResult result;
  result.samples = score_prediction_dataset(dataset, config.world_noise, config.model_noise,
                                            config.samples_per_query, config.seed,
                                            options.workers);
  for (bool l : dataset.labels) result.stable_count += l ? 1 : 0;
  result.at_configured =
      metrics::evaluate_classifier(result.samples, config.thresholds.tau_stable_z);
  if (result.stable_count == 0 || result.stable_count == result.samples.size()) {
    result.warnings.push_back("dataset contains a single class; AUC and Youden threshold are undefined");
  } else {
    result.youden_tau = metrics::youden_threshold(result.samples);
    result.at_youden = metrics::evaluate_classifier(result.samples, *result.youden_tau);
  }

  if (options.write_files) {
    result.artifacts = {"prediction_report.json", "roc.csv", "pr.csv", "scores.csv"};
    json report = report_header("eval-prediction", config);
    report["dataset"] = {{"towers", result.samples.size()},
                         {"stable", result.stable_count},
                         {"unstable", result.samples.size() - result.stable_count}};
    report["at_configured_threshold"] = to_json(result.at_configured);
    report["youden_threshold"] = result.youden_tau ? json(*result.youden_tau) : json(nullptr);
    report["at_youden_threshold"] = result.at_youden ? to_json(*result.at_youden) : json(nullptr);
    report["warnings"] = result.warnings;
    report["artifacts"] = result.artifacts;
    write_json(options.out_dir / "prediction_report.json", report);

    std::ostringstream roc;
    roc << csv_header("eval-prediction", config);
    metrics::write_roc_csv(roc, result.at_configured.roc_points);
    write_text(options.out_dir / "roc.csv", roc.str());

    std::ostringstream pr;
    pr << csv_header("eval-prediction", config);
    metrics::write_pr_csv(pr, result.at_configured.pr_points);
    write_text(options.out_dir / "pr.csv", pr.str());

    std::ostringstream scores;
    scores << csv_header("eval-prediction", config) << "tower,phi,label\n";
    for (std::size_t i = 0; i < result.samples.size(); ++i) {
      scores << i << ',' << format_number(result.samples[i].phi) << ','
             << (result.samples[i].label ? 1 : 0) << '\n';
    }
    write_text(options.out_dir / "scores.csv", scores.str());
  }
  write_timing(options, "eval-prediction", clock.seconds());
  return result;
}

// --- eval-action --------------------------------------------------------------

ExperimentConfig effective_action_config(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  if (c.action.no_actuation_noise) {
    c.world_noise.act = world::zero_mean({0.0, 0.0, 0.0});
    c.model_noise.sigma_a = 0.0;
  }
  return c;
}

policy::CobraSettings cobra_settings(const ExperimentConfig& config) {
  policy::CobraSettings s;
  s.noise = config.model_noise;
  s.rows = config.action.grid_rows;
  s.cols = config.action.grid_cols;
  s.n_samples = config.samples_per_query;
  s.tau_stable_a = config.thresholds.tau_stable_a;
  s.tau_cluster = config.thresholds.tau_cluster;
  s.workers = 1;
  return s;
}

TowerOutcome evaluate_action_tower(const task::TaskState& initial, const ExperimentConfig& config,
                                   PolicyChoice which, std::uint64_t world_seed,
                                   std::size_t trials) {
  if (initial.queue.empty()) throw world::EmptyQueue();
  TowerOutcome out;
  const std::uint64_t first_world = derive_seed(world_seed, 0);
  const auto observation = world::World(initial, config.world_noise, first_world).observe();
  out.action = choose(observation, initial.queue.front(), config, which,
                      derive_seed(first_world, streams::kPolicyStep), &out.selection);
  for (std::size_t t = 0; t < trials; ++t) {
    world::World w(initial, config.world_noise, derive_seed(world_seed, t));
    out.trial_success.push_back(w.execute_place(out.action).stable);
  }
  return out;
}

ActionResult cmd_eval_action(const ExperimentConfig& raw_config, const RunOptions& options) {
  validate(raw_config);
  const Stopwatch clock;
  const ExperimentConfig config = effective_action_config(raw_config);
  const auto& a = config.action;
  const auto which = policies_of(a.policy);

  std::vector<task::TaskState> initial(a.towers);
  for (std::size_t i = 0; i < a.towers; ++i) {
    initial[i] = world::with_queue(
        world::random_tower(2, a.offset_range, true, stream_seed(config.seed, streams::kTowers, i),
                            block_spec(config)),
        1, block_spec(config));
  }

  std::vector<std::vector<TowerOutcome>> outcomes(a.towers);
  parallel_for(a.towers, options.workers, [&](std::size_t i) {
    const auto world_seed = stream_seed(config.seed, streams::kWorld, i);
    for (auto p : which) {
      outcomes[i].push_back(evaluate_action_tower(initial[i], config, p, world_seed, a.trials));
    }
  });

  ActionResult result;
  result.towers = a.towers;
  result.trials = a.trials;
  json towers = json::array();
  for (std::size_t i = 0; i < a.towers; ++i) {
    json entry = {{"index", i}, {"initial_tower", to_json(initial[i].tower)}};
    for (std::size_t k = 0; k < which.size(); ++k) {
      const auto& o = outcomes[i][k];
      auto& tally = which[k] == PolicyChoice::cobra ? result.cobra : result.baseline;
      if (!tally) tally = PolicyTally{};
      std::size_t wins = 0;
      for (bool s : o.trial_success) wins += s ? 1 : 0;
      tally->successes += wins;
      tally->failures += o.trial_success.size() - wins;
      const bool low = o.selection &&
                       o.selection->confidence == policy::Confidence::fallback_low_confidence;
      if (low) ++tally->low_confidence;
      json pe = {{"action", to_json(o.action)},
                 {"successes", wins},
                 {"trials", o.trial_success.size()}};
      if (o.selection) {
        pe["best_phi"] = o.selection->best_phi;
        pe["confidence"] = std::string(policy::to_string(o.selection->confidence));
      }
      entry[std::string(to_string(which[k]))] = pe;
    }
    towers.push_back(entry);
  }
  result.wall_clock_seconds = clock.seconds();

  if (options.write_files) {
    result.artifacts = {"action_report.json"};
    json report = report_header("eval-action", raw_config);
    report["no_actuation_noise"] = a.no_actuation_noise;
    json policies = json::object();
    for (auto p : which) {
      const auto& t = p == PolicyChoice::cobra ? result.cobra : result.baseline;
      policies[std::string(to_string(p))] = {{"successes", t->successes},
                                             {"failures", t->failures},
                                             {"success_rate", t->success_rate()},
                                             {"low_confidence_selections", t->low_confidence}};
    }
    report["policies"] = policies;
    report["towers"] = towers;
    report["artifacts"] = result.artifacts;
    write_json(options.out_dir / "action_report.json", report);
  }
  write_timing(options, "eval-action", result.wall_clock_seconds);
  return result;
}

// --- heatmap ------------------------------------------------------------------

TowerSpec parse_tower_spec(std::string_view text, const std::string& origin,
                           const ExperimentConfig& config) {
  const json j = parse_json_text(text, origin);
  try {
    if (!j.is_object() || !j.contains("tower") || !j.at("tower").is_array() ||
        j.at("tower").empty()) {
      throw ConfigError(origin + ": expected an object with a non-empty \"tower\" array");
    }
    TowerSpec spec;
    int next_id = 0;
    for (const auto& b : j.at("tower")) {
      physics::Block block;
      block.dims = config.block.dims;
      block.mass = config.block.mass;
      json merged = to_json(block);
      merged["id"] = next_id;
      merged.merge_patch(b);
      spec.tower.blocks.push_back(block_from_json(merged, next_id));
      next_id = std::max(next_id, spec.tower.blocks.back().id) + 1;
    }
    spec.tower = physics::settle(std::move(spec.tower));
    json queue = to_json(physics::Block{next_id, {0.0, 0.0, 0.0}, config.block.dims, config.block.mass});
    if (j.contains("queue_block")) queue.merge_patch(j.at("queue_block"));
    spec.queue_block = block_from_json(queue, next_id);
    if (spec.tower.contains_id(spec.queue_block.id)) {
      throw ConfigError(origin + ": queue_block id collides with a tower block");
    }
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": invalid tower spec: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(origin + ": invalid tower spec: " + e.what());
  }
}

TowerSpec load_tower_spec(const std::filesystem::path& path, const ExperimentConfig& config) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read tower spec " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_tower_spec(buffer.str(), path.string(), config);
}

HeatmapResult cmd_heatmap(const ExperimentConfig& config, const TowerSpec& spec,
                          const RunOptions& options) {
  validate(config);
  const Stopwatch clock;
  HeatmapResult result;
  result.rows = config.heatmap.rows;
  result.cols = config.heatmap.cols;

  const auto observation = task::perfect_observation(spec.tower);
  const auto grid = policy::candidate_grid(spec.tower.top_block(), result.rows, result.cols);
  auto scores = policy::score_candidates(observation, spec.queue_block, grid, config.model_noise,
                                         config.samples_per_query,
                                         derive_seed(config.seed, streams::kHeatmap),
                                         options.workers);
  result.selection = policy::select_action(std::move(scores), config.thresholds.tau_stable_a,
                                           config.thresholds.tau_cluster);

  double sx = 0.0;
  double sy = 0.0;
  std::size_t n_stable = 0;
  for (const auto& a : grid) {
    auto tower = spec.tower;
    auto block = spec.queue_block;
    block.center = {a.x, a.y, 0.0};
    tower.blocks.push_back(block);
    const bool ok = physics::is_stable(physics::settle(std::move(tower))).stable;
    result.oracle_stable.push_back(ok);
    if (ok) {
      sx += a.x;
      sy += a.y;
      ++n_stable;
    }
  }
  if (n_stable > 0) {
    result.oracle_centroid = task::Action{sx / static_cast<double>(n_stable),
                                          sy / static_cast<double>(n_stable)};
  }

  if (options.write_files) {
    result.artifacts = {"heatmap.json", "heatmap.csv"};
    json report = report_header("heatmap", config);
    report["tower"] = to_json(spec.tower);
    report["queue_block"] = to_json(spec.queue_block);
    report["rows"] = result.rows;
    report["cols"] = result.cols;
    report["selection"] = to_json(result.selection);
    report["oracle_stable"] = result.oracle_stable;
    report["oracle_centroid"] =
        result.oracle_centroid ? to_json(*result.oracle_centroid) : json(nullptr);
    report["artifacts"] = result.artifacts;
    write_json(options.out_dir / "heatmap.json", report);

    std::ostringstream csv;
    csv << csv_header("heatmap", config)
        << "row,col,x,y,phi,in_tau_set,in_stable_set,oracle_stable\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto& s = result.selection.scores[i];
      csv << i / result.cols << ',' << i % result.cols << ',' << format_number(s.action.x) << ','
          << format_number(s.action.y) << ',' << format_number(s.phi) << ','
          << (s.in_tau_set ? 1 : 0) << ',' << (s.in_stable_set ? 1 : 0) << ','
          << (result.oracle_stable[i] ? 1 : 0) << '\n';
    }
    write_text(options.out_dir / "heatmap.csv", csv.str());
  }
  write_timing(options, "heatmap", clock.seconds());
  return result;
}

// --- episode ------------------------------------------------------------------

world::EpisodeRecord run_policy_episode(const task::TaskState& initial,
                                        const ExperimentConfig& config, PolicyChoice which,
                                        std::uint64_t world_seed, std::size_t steps) {
  world::World w(initial, config.world_noise, world_seed);
  return world::run_episode(
      w, steps,
      [&](const task::Observation& obs, const physics::Block& queue_front, std::size_t k) {
        return choose(obs, queue_front, config, which,
                      derive_seed(world_seed, streams::kPolicyStep + k), nullptr);
      },
      world_seed);
}

EpisodeResult cmd_episode(const ExperimentConfig& raw_config, const RunOptions& options) {
  validate(raw_config);
  const Stopwatch clock;
  const ExperimentConfig config = effective_action_config(raw_config);
  const auto& e = config.episode;

  EpisodeResult result;
  result.initial = world::with_queue(
      world::random_tower(e.initial_blocks, e.offset_range, true,
                          stream_seed(config.seed, streams::kTowers, 0), block_spec(config)),
      e.steps, block_spec(config));
  const auto world_seed = stream_seed(config.seed, streams::kWorld, 0);
  const auto which = policies_of(config.action.policy);
  result.episodes.resize(which.size());
  parallel_for(which.size(), options.workers, [&](std::size_t k) {
    result.episodes[k] = {which[k],
                          run_policy_episode(result.initial, config, which[k], world_seed, e.steps)};
  });

  if (options.write_files) {
    result.artifacts = {"episode.json"};
    json report = report_header("episode", raw_config);
    report["initial_tower"] = to_json(result.initial.tower);
    json queue = json::array();
    for (const auto& b : result.initial.queue) queue.push_back(to_json(b));
    report["initial_queue"] = queue;
    json episodes = json::object();
    for (const auto& [p, record] : result.episodes) episodes[std::string(to_string(p))] = to_json(record);
    report["episodes"] = episodes;
    report["artifacts"] = result.artifacts;
    write_json(options.out_dir / "episode.json", report);
  }
  write_timing(options, "episode", clock.seconds());
  return result;
}

}  // namespace cobra::harness
