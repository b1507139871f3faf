#include "cobra/harness/config.hpp"

#include <fstream>
#include <sstream>

namespace cobra::harness {

using nlohmann::json;

namespace {

json axes_to_json(const world::AxisNoise3& axes) {
  return {{"mean", {axes[0].mean, axes[1].mean, axes[2].mean}},
          {"sigma", {axes[0].sigma, axes[1].sigma, axes[2].sigma}}};
}

world::AxisNoise3 axes_from_json(const json& j) {
  const auto mean = j.at("mean").get<std::array<double, 3>>();
  const auto sigma = j.at("sigma").get<std::array<double, 3>>();
  world::AxisNoise3 out;
  for (std::size_t i = 0; i < 3; ++i) out[i] = {mean[i], sigma[i]};
  return out;
}

/// Every key in `given` must exist in `known`, recursively through objects.
void check_known_keys(const json& given, const json& known, const std::string& path) {
  if (!given.is_object()) return;
  if (!known.is_object()) throw ConfigError("config key '" + path + "' must not be an object");
  for (const auto& [key, value] : given.items()) {
    const std::string child = path.empty() ? key : path + "." + key;
    if (!known.contains(key)) throw ConfigError("unknown config key '" + child + "'");
    check_known_keys(value, known.at(key), child);
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

bool probability(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

std::string_view to_string(PolicyChoice p) {
  switch (p) {
    case PolicyChoice::cobra:
      return "cobra";
    case PolicyChoice::baseline:
      return "baseline";
    case PolicyChoice::both:
      return "both";
  }
  return "both";
}

PolicyChoice parse_policy(std::string_view s) {
  if (s == "cobra") return PolicyChoice::cobra;
  if (s == "baseline") return PolicyChoice::baseline;
  if (s == "both") return PolicyChoice::both;
  throw ConfigError("policy must be one of cobra|baseline|both, got '" + std::string(s) + "'");
}

void validate(const ExperimentConfig& c) {
  for (double d : c.block.dims) require(d > 0.0, "block.dims must be positive");
  require(c.block.mass > 0.0, "block.mass must be positive");
  try {
    world::validate(c.world_noise);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  require(c.model_noise.sigma_z >= 0.0 && c.model_noise.sigma_a >= 0.0,
          "model_noise sigmas must be >= 0");
  require(c.samples_per_query >= 1, "inference.samples_per_query must be >= 1");
  require(probability(c.thresholds.tau_stable_z), "thresholds.tau_stable_z must lie in [0, 1]");
  require(probability(c.thresholds.tau_stable_a), "thresholds.tau_stable_a must lie in [0, 1]");
  require(probability(c.thresholds.tau_cluster), "thresholds.tau_cluster must lie in [0, 1]");
  require(c.characterize.observation_towers >= 1 && c.characterize.tower_blocks >= 1 &&
              c.characterize.placement_towers >= 1 && c.characterize.placement_trials >= 1,
          "characterize counts must be >= 1");
  require(c.prediction.towers >= 1 && c.prediction.blocks >= 1, "prediction counts must be >= 1");
  require(c.action.towers >= 1 && c.action.trials >= 1 && c.action.grid_rows >= 1 &&
              c.action.grid_cols >= 1,
          "action counts must be >= 1");
  require(c.heatmap.rows >= 1 && c.heatmap.cols >= 1, "heatmap grid must be >= 1x1");
  require(c.episode.initial_blocks >= 1 && c.episode.steps >= 1, "episode counts must be >= 1");
  for (double r : {c.characterize.offset_range, c.prediction.offset_range, c.action.offset_range,
                   c.episode.offset_range}) {
    require(r >= 0.0, "offset_range must be >= 0");
  }
}

json to_json(const ExperimentConfig& c) {
  return {
      {"schema_version", kSchemaVersion},
      {"seed", c.seed},
      {"block", {{"dims", c.block.dims}, {"mass", c.block.mass}}},
      {"world_noise",
       {{"observation", axes_to_json(c.world_noise.obs)},
        {"actuation", axes_to_json(c.world_noise.act)}}},
      {"model_noise", {{"sigma_z", c.model_noise.sigma_z}, {"sigma_a", c.model_noise.sigma_a}}},
      {"inference", {{"samples_per_query", c.samples_per_query}}},
      {"thresholds",
       {{"tau_stable_z", c.thresholds.tau_stable_z},
        {"tau_stable_a", c.thresholds.tau_stable_a},
        {"tau_cluster", c.thresholds.tau_cluster}}},
      {"characterize",
       {{"observation_towers", c.characterize.observation_towers},
        {"tower_blocks", c.characterize.tower_blocks},
        {"placement_towers", c.characterize.placement_towers},
        {"placement_trials", c.characterize.placement_trials},
        {"offset_range", c.characterize.offset_range}}},
      {"prediction",
       {{"towers", c.prediction.towers},
        {"blocks", c.prediction.blocks},
        {"offset_range", c.prediction.offset_range}}},
      {"action",
       {{"towers", c.action.towers},
        {"trials", c.action.trials},
        {"offset_range", c.action.offset_range},
        {"grid_rows", c.action.grid_rows},
        {"grid_cols", c.action.grid_cols},
        {"policy", std::string(to_string(c.action.policy))},
        {"no_actuation_noise", c.action.no_actuation_noise}}},
      {"heatmap", {{"rows", c.heatmap.rows}, {"cols", c.heatmap.cols}}},
      {"episode",
       {{"initial_blocks", c.episode.initial_blocks},
        {"steps", c.episode.steps},
        {"offset_range", c.episode.offset_range}}},
  };
}

ExperimentConfig config_from_json(const json& overrides) {
  if (!overrides.is_object()) throw ConfigError("config root must be a JSON object");
  const ExperimentConfig defaults;
  json j = to_json(defaults);
  check_known_keys(overrides, j, "");
  if (overrides.contains("schema_version") && overrides.at("schema_version") != kSchemaVersion) {
    throw ConfigError("unsupported schema_version " + overrides.at("schema_version").dump());
  }
  j.merge_patch(overrides);

  ExperimentConfig c;
  try {
    c.seed = j.at("seed").get<std::uint64_t>();
    c.block.dims = j.at("block").at("dims").get<Vec3>();
    c.block.mass = j.at("block").at("mass").get<double>();
    c.world_noise.obs = axes_from_json(j.at("world_noise").at("observation"));
    c.world_noise.act = axes_from_json(j.at("world_noise").at("actuation"));
    c.model_noise.sigma_z = j.at("model_noise").at("sigma_z").get<double>();
    c.model_noise.sigma_a = j.at("model_noise").at("sigma_a").get<double>();
    c.samples_per_query = j.at("inference").at("samples_per_query").get<std::size_t>();
    const auto& t = j.at("thresholds");
    c.thresholds = {t.at("tau_stable_z").get<double>(), t.at("tau_stable_a").get<double>(),
                    t.at("tau_cluster").get<double>()};
    const auto& ch = j.at("characterize");
    c.characterize = {ch.at("observation_towers").get<std::size_t>(),
                      ch.at("tower_blocks").get<std::size_t>(),
                      ch.at("placement_towers").get<std::size_t>(),
                      ch.at("placement_trials").get<std::size_t>(),
                      ch.at("offset_range").get<double>()};
    const auto& p = j.at("prediction");
    c.prediction = {p.at("towers").get<std::size_t>(), p.at("blocks").get<std::size_t>(),
                    p.at("offset_range").get<double>()};
    const auto& a = j.at("action");
    c.action.towers = a.at("towers").get<std::size_t>();
    c.action.trials = a.at("trials").get<std::size_t>();
    c.action.offset_range = a.at("offset_range").get<double>();
    c.action.grid_rows = a.at("grid_rows").get<std::size_t>();
    c.action.grid_cols = a.at("grid_cols").get<std::size_t>();
    c.action.policy = parse_policy(a.at("policy").get<std::string>());
    c.action.no_actuation_noise = a.at("no_actuation_noise").get<bool>();
    c.heatmap = {j.at("heatmap").at("rows").get<std::size_t>(),
                 j.at("heatmap").at("cols").get<std::size_t>()};
    const auto& e = j.at("episode");
    c.episode = {e.at("initial_blocks").get<std::size_t>(), e.at("steps").get<std::size_t>(),
                 e.at("offset_range").get<double>()};
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("config value has the wrong type: ") + ex.what());
  }
  validate(c);
  return c;
}

json parse_json_text(std::string_view text, const std::string& origin) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // byte is 1-based and points just past the offending character.
    const std::size_t offset = e.byte == 0 ? 0 : std::min<std::size_t>(e.byte - 1, text.size());
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < offset; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(column) +
                      ": parse error: " + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_json(parse_json_text(buffer.str(), path.string()));
}

}  // namespace cobra::harness
