#include "cobra/harness/report.hpp"

#include <fstream>
#include <stdexcept>

namespace cobra::harness {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json to_json(const physics::Block& b) {
  return {{"id", b.id}, {"center", b.center}, {"dims", b.dims}, {"mass", b.mass}};
}

json to_json(const physics::TowerState& tower) {
  json blocks = json::array();
  for (const auto& b : tower.blocks) blocks.push_back(to_json(b));
  return blocks;
}

json to_json(const physics::StabilityVerdict& v) {
  return {{"stable", v.stable},
          {"first_failing_interface",
           v.first_failing_interface ? json(*v.first_failing_interface) : json(nullptr)}};
}

json to_json(const task::Action& a) { return {{"x", a.x}, {"y", a.y}}; }

json to_json(const task::Observation& o) {
  json blocks = json::array();
  for (const auto& b : o.tower_estimate) blocks.push_back({{"id", b.id}, {"position", b.center}});
  return blocks;
}

json to_json(const metrics::ClassifierReport& r) {
  return {{"threshold", r.threshold},
          {"accuracy", r.accuracy},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"auc", optional_number(r.auc)},
          {"confusion",
           {{"tp", r.confusion.tp},
            {"fp", r.confusion.fp},
            {"tn", r.confusion.tn},
            {"fn", r.confusion.fn}}}};
}

json to_json(const metrics::NoiseCharacterization& n) {
  json axes = json::object();
  const char* names[] = {"x", "y", "z"};
  for (std::size_t i = 0; i < 3; ++i) {
    axes[names[i]] = {{"mean", n.axes[i].mean}, {"sigma", n.axes[i].sigma}};
  }
  return {{"n", n.n}, {"axes", axes}, {"average_sigma", n.isotropic_sigma}};
}

json to_json(const policy::SelectionResult& s) {
  json scores = json::array();
  for (const auto& c : s.scores) {
    scores.push_back({{"x", c.action.x},
                      {"y", c.action.y},
                      {"phi", c.phi},
                      {"in_tau_set", c.in_tau_set},
                      {"in_stable_set", c.in_stable_set}});
  }
  return {{"chosen", to_json(s.chosen)},
          {"best", to_json(s.best)},
          {"best_index", s.best_index},
          {"best_phi", s.best_phi},
          {"confidence", std::string(policy::to_string(s.confidence))},
          {"scores", scores}};
}

json to_json(const world::EpisodeRecord& r) {
  json steps = json::array();
  for (const auto& s : r.steps) {
    steps.push_back({{"observation", to_json(s.observation)},
                     {"action", to_json(s.action)},
                     {"realized", s.realized},
                     {"verdict", to_json(s.verdict)}});
  }
  return {{"seed", r.seed}, {"outcome", r.success ? "success" : "failure"}, {"steps", steps}};
}

physics::Block block_from_json(const json& j, int default_id) {
  physics::Block b;
  b.id = j.value("id", default_id);
  if (j.contains("center")) b.center = j.at("center").get<Vec3>();
  if (j.contains("dims")) b.dims = j.at("dims").get<Vec3>();
  if (j.contains("mass")) b.mass = j.at("mass").get<double>();
  physics::validate(b);
  return b;
}

json report_header(std::string_view command, const ExperimentConfig& config) {
  return {{"schema_version", kSchemaVersion},
          {"command", std::string(command)},
          {"config", to_json(config)}};
}

std::string csv_header(std::string_view command, const ExperimentConfig& config) {
  return "# schema_version=" + std::to_string(kSchemaVersion) + " command=" +
         std::string(command) + "\n# config=" + to_json(config).dump() + "\n";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

}  // namespace cobra::harness
