// cobra: command-line driver for the stability-prediction and placement
// experiments. Exit codes: 0 ok, 1 other error, 2 config error,
// 3 tower generation failure, 4 degenerate inference.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "cobra/harness/commands.hpp"
#include "cobra/harness/config.hpp"
#include "cobra/ppl.hpp"
#include "cobra/world.hpp"

namespace {

using namespace cobra;
using harness::ExperimentConfig;

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool no_actuation_noise = false;
  std::string policy;
  std::size_t threads = 1;
  std::string tower_path;
};

ExperimentConfig resolve(const Flags& f) {
  ExperimentConfig c = f.config_path.empty() ? ExperimentConfig{}
                                             : harness::load_config(f.config_path);
  if (!f.seed) throw harness::ConfigError("--seed is required");
  c.seed = *f.seed;
  if (f.no_actuation_noise) c.action.no_actuation_noise = true;
  if (!f.policy.empty()) c.action.policy = harness::parse_policy(f.policy);
  harness::validate(c);
  return c;
}

void print_rate(std::string_view name, const std::optional<harness::PolicyTally>& t) {
  if (!t) return;
  std::cout << name << ": " << t->successes << " successes, " << t->failures << " failures, "
            << 100.0 * t->success_rate() << "% success";
  if (t->low_confidence > 0) std::cout << " (" << t->low_confidence << " low-confidence selections)";
  std::cout << '\n';
}

int run(const std::string& command, const Flags& flags) {
  const ExperimentConfig config = resolve(flags);
  const harness::RunOptions options{flags.out_dir, flags.threads, true};

  if (command == "characterize") {
    const auto r = harness::cmd_characterize(config, options);
    std::cout << "measurement sigma (x, y, z, avg): " << r.observation.axes[0].sigma << ", "
              << r.observation.axes[1].sigma << ", " << r.observation.axes[2].sigma << ", "
              << r.observation.isotropic_sigma << '\n'
              << "placement sigma (x, y, z, avg):   " << r.placement.axes[0].sigma << ", "
              << r.placement.axes[1].sigma << ", " << r.placement.axes[2].sigma << ", "
              << r.placement.isotropic_sigma << '\n';
  } else if (command == "eval-prediction") {
    const auto r = harness::cmd_eval_prediction(config, options);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "towers: " << r.samples.size() << " (" << r.stable_count << " stable)\n";
    const auto print = [](std::string_view label, const metrics::ClassifierReport& rep) {
      std::cout << label << " tau=" << rep.threshold << " accuracy=" << rep.accuracy
                << " precision=" << rep.precision << " recall=" << rep.recall << " f1=" << rep.f1;
      if (rep.auc) std::cout << " auc=" << *rep.auc;
      std::cout << '\n';
    };
    print("configured:", r.at_configured);
    if (r.at_youden) print("youden:    ", *r.at_youden);
  } else if (command == "eval-action") {
    const auto r = harness::cmd_eval_action(config, options);
    print_rate("cobra", r.cobra);
    print_rate("baseline", r.baseline);
  } else if (command == "heatmap") {
    if (flags.tower_path.empty()) throw harness::ConfigError("heatmap requires --tower <path>");
    const auto spec = harness::load_tower_spec(flags.tower_path, config);
    const auto r = harness::cmd_heatmap(config, spec, options);
    std::cout << "chosen action: (" << r.selection.chosen.x << ", " << r.selection.chosen.y
              << ") confidence=" << policy::to_string(r.selection.confidence) << '\n';
  } else if (command == "episode") {
    const auto r = harness::cmd_episode(config, options);
    for (const auto& [p, record] : r.episodes) {
      std::cout << harness::to_string(p) << ": " << (record.success ? "success" : "failure")
                << " after " << record.steps.size() << " step(s)\n";
    }
  }
  std::cout << "wrote results to " << flags.out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal stability reasoning for block stacking under uncertainty"};
  app.require_subcommand(1);
  Flags flags;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config_path, "JSON config file (defaults apply otherwise)");
    sub->add_option("--seed", flags.seed, "Master seed (required)");
    sub->add_option("--out", flags.out_dir, "Output directory");
    sub->add_option("--threads", flags.threads, "Worker threads; results do not depend on it")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--no-actuation-noise", flags.no_actuation_noise,
                  "Zero actuation noise in world and model");
    sub->add_option("--policy", flags.policy, "cobra|baseline|both")
        ->check(CLI::IsMember({"cobra", "baseline", "both"}));
  };

  for (const char* name : {"characterize", "eval-prediction", "eval-action", "episode"}) {
    add_common(app.add_subcommand(name, std::string("Run ") + name));
  }
  auto* heatmap = app.add_subcommand("heatmap", "Candidate stability grid for one tower");
  add_common(heatmap);
  heatmap->add_option("--tower", flags.tower_path, "Tower spec JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, flags);
  } catch (const harness::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const world::GenerationFailed& e) {
    std::cerr << "generation failed: " << e.what() << '\n';
    return 3;
  } catch (const ppl::DegenerateWeights& e) {
    std::cerr << "degenerate inference: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
