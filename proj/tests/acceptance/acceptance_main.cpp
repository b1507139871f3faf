// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cobra/harness/commands.hpp"
#include "cobra/harness/config.hpp"
#include "cobra/metrics.hpp"
#include "cobra/physics.hpp"
#include "cobra/policy.hpp"
#include "cobra/ppl.hpp"
#include "cobra/world.hpp"

using namespace cobra;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string pct(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * r);
  return buf;
}

std::string num(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double normal_interval(double sigma, double half_width) {
  return std::erf(half_width / (sigma * std::sqrt(2.0)));
}

physics::TowerState cubes(std::vector<std::pair<double, double>> xy) {
  physics::TowerState t;
  int id = 0;
  for (auto [x, y] : xy) t.blocks.push_back(physics::Block{id++, {x, y, 0.0}});
  return physics::settle(t);
}

// 1 -------------------------------------------------------------------------
Outcome zero_actuation_noise() {
  harness::ExperimentConfig c;
  c.seed = 1;
  c.action.towers = 50;
  c.action.trials = 1;
  c.action.no_actuation_noise = true;
  const auto r = harness::cmd_eval_action(c, {".", 2, false});
  const double cobra = r.cobra->success_rate();
  return {cobra == 1.0, "cobra " + pct(cobra) + " (" + std::to_string(r.cobra->successes) + "/" +
                            std::to_string(r.cobra->successes + r.cobra->failures) +
                            "), baseline " + pct(r.baseline->success_rate())};
}

// 2 -------------------------------------------------------------------------
Outcome dominance_under_noise() {
  harness::ExperimentConfig c;
  c.seed = 1;
  const auto r = harness::cmd_eval_action(c, {".", 2, false});
  const double cobra = r.cobra->success_rate();
  const double baseline = r.baseline->success_rate();
  // Even a perfectly centered placement on a perfectly aligned base fails
  // whenever the actuation error leaves the half-width margin on either axis.
  const auto& act = c.world_noise.act;
  const double ceiling = normal_interval(act[0].sigma, 3.75) * normal_interval(act[1].sigma, 3.75);
  return {cobra >= 0.85 && cobra - baseline >= 0.10,
          "cobra " + pct(cobra) + ", baseline " + pct(baseline) + ", margin " +
              num(100.0 * (cobra - baseline), 1) + " pp; single-placement ceiling under this "
              "world's actuation noise is " + pct(ceiling)};
}

// 3 -------------------------------------------------------------------------
Outcome classifier_quality() {
  harness::ExperimentConfig c;
  c.seed = 1;
  c.world_noise.obs = world::zero_mean({0.469, 0.469, 0.469});
  c.model_noise.sigma_z = 0.469;
  const auto r = harness::cmd_eval_prediction(c, {".", 2, false});
  const double auc = r.at_configured.auc.value_or(0.0);
  const double youden_acc = r.at_youden ? r.at_youden->accuracy : 0.0;

  harness::ExperimentConfig d = c;
  d.prediction.towers = 500;
  const auto dataset = harness::make_prediction_dataset(d);
  std::vector<double> aucs;
  for (double s : {0.2, 1.0, 3.0}) {
    world::WorldNoise wn;
    wn.obs = world::zero_mean({s, s, s});
    const auto scored =
        harness::score_prediction_dataset(dataset, wn, {s, 0.0}, d.samples_per_query, 99, 2);
    aucs.push_back(metrics::evaluate_classifier(scored, 0.4).auc.value_or(0.0));
  }
  const bool monotone = aucs[0] >= aucs[1] && aucs[1] >= aucs[2];
  return {auc >= 0.90 && youden_acc >= 0.80 && monotone,
          "AUC " + num(auc) + ", accuracy at Youden tau " + num(r.youden_tau.value_or(-1), 3) +
              " = " + pct(youden_acc) + "; AUC at sigma 0.2/1.0/3.0 = " + num(aucs[0]) + "/" +
              num(aucs[1]) + "/" + num(aucs[2])};
}

// 4 -------------------------------------------------------------------------
Outcome noise_round_trip() {
  const harness::ExperimentConfig defaults;
  bool ok = true;
  std::string detail;
  for (const auto& [label, axes] :
       {std::pair{"measurement", defaults.world_noise.obs}, std::pair{"placement", defaults.world_noise.act}}) {
    world::WorldNoise noise;
    const bool measurement = std::string(label) == "measurement";
    (measurement ? noise.obs : noise.act) = axes;
    std::vector<std::pair<Vec3, Vec3>> pairs;
    for (std::uint64_t i = 0; i < 10'000; ++i) {
      task::TaskState s{cubes({{0.0, 0.0}}), {physics::Block{1}}};
      world::World w(s, noise, derive_seed(4, i));
      if (measurement) {
        pairs.push_back({w.observe().tower_estimate[0].center, w.state().tower.blocks[0].center});
      } else {
        w.execute_place({0.0, 0.0});
        pairs.push_back({w.last_release(), Vec3{0.0, 0.0, 7.5 + 3.75}});
      }
    }
    const auto m = metrics::characterize_noise(pairs);
    double worst = 0.0;
    for (std::size_t a = 0; a < 3; ++a) {
      worst = std::max(worst, std::abs(m.axes[a].sigma - axes[a].sigma) / axes[a].sigma);
    }
    const bool mean_exact =
        m.isotropic_sigma == (m.axes[0].sigma + m.axes[1].sigma + m.axes[2].sigma) / 3.0;
    ok = ok && worst <= 0.05 && mean_exact;
    detail += std::string(detail.empty() ? "" : "; ") + label + " worst rel. error " +
              pct(worst) + ", avg " + num(m.isotropic_sigma, 3);
  }
  return {ok, detail};
}

// 5 -------------------------------------------------------------------------
Outcome inference_correctness() {
  using namespace ppl;
  const SiteName u{"u"}, x{"x"}, y{"y"};
  const Model collider = [&](Context& ctx) {
    const double uv = ctx.sample_scalar(u, Bernoulli{0.5});
    const double xv = ctx.sample_scalar(x, Delta{uv});
    ctx.record(y, static_cast<double>(static_cast<int>(xv) ^ static_cast<int>(uv)));
  };
  const Query qy = [&](const Trace& t) { return t.scalar(y); };
  const double by_do =
      importance_query(collider, {{{x, 1.0}}}, {}, qy, 10'000, 5).estimate;
  const double by_cond =
      importance_query(collider, {}, {{{x, 1.0}}}, qy, 10'000, 5).estimate;
  const bool xor_ok = std::abs(by_do - 0.5) <= 0.02 && std::abs(by_cond) <= 0.02;

  // Random binary chains with conditioning and interventions.
  std::mt19937_64 rng(2);
  std::size_t worst_ok = 0;
  constexpr std::size_t n = 4000;
  const double tol = 3.0 / std::sqrt(static_cast<double>(n));
  constexpr int suites = 30;
  for (int rep = 0; rep < suites; ++rep) {
    const std::size_t k = 2 + rep % 11;
    std::vector<std::array<double, 2>> cpt(k);
    std::uniform_real_distribution<double> p(0.1, 0.9);
    for (auto& c : cpt) c = {p(rng), p(rng)};
    const Model m = [&, k](Context& ctx) {
      int prev = 0;
      for (std::size_t i = 0; i < k; ++i) {
        prev = static_cast<int>(ctx.sample_scalar(SiteName{"s"} / i, Bernoulli{cpt[i][prev]}));
      }
    };
    ConditionSet cond;
    cond.assignments.emplace(SiteName{"s"} / (k - 1), 1.0);
    InterventionSet inter;
    if (k > 2) inter.assignments.emplace(SiteName{"s"} / std::size_t{1}, 0.0);
    const SiteName q = SiteName{"s"} / std::size_t{0};
    const Query qq = [q](const Trace& t) { return t.scalar(q); };
    const double exact = enumerate_query(m, inter, cond, qq);
    const double approx = importance_query(m, inter, cond, qq, n, 100 + rep).estimate;
    if (std::abs(exact - approx) <= tol) ++worst_ok;
  }

  bool degenerate = false;
  try {
    importance_query(collider, {}, {{{x, 2.0}}}, qy, 100, 1);
  } catch (const DegenerateWeights&) {
    degenerate = true;
  }
  return {xor_ok && worst_ok == suites && degenerate,
          "do " + num(by_do, 3) + ", condition " + num(by_cond, 3) + "; " +
              std::to_string(worst_ok) + "/" + std::to_string(suites) +
              " models within 3/sqrt(n); DegenerateWeights " + (degenerate ? "raised" : "missing")};
}

// 6 -------------------------------------------------------------------------
Outcome physics_exactness() {
  std::size_t mismatches = 0;
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      const double ox = (i - 50) * 7.5 / 50.0;
      const double oy = (j - 50) * 7.5 / 50.0;
      const bool expected = std::abs(ox) <= 3.75 && std::abs(oy) <= 3.75;
      if (physics::is_stable(cubes({{0, 0}, {ox, oy}})).stable != expected) ++mismatches;
    }
  }
  using V = physics::StabilityVerdict;
  const bool cases = physics::is_stable(cubes({{0, 0}, {3.0, 0}})) == V{true, std::nullopt} &&
                     physics::is_stable(cubes({{0, 0}, {4.0, 0}})) == V{false, 1} &&
                     physics::is_stable(cubes({{0, 0}, {2.0, 0}, {5.0, 0}})) == V{true, std::nullopt} &&
                     physics::is_stable(cubes({{0, 0}, {3.0, 0}, {6.0, 0}})) == V{false, 1};

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> off(-5.0, 5.0);
  std::uniform_int_distribution<int> count(1, 5);
  std::size_t invariance_failures = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<std::pair<double, double>> xy{{off(rng), off(rng)}};
    const int n = count(rng);
    for (int i = 1; i < n; ++i) xy.push_back({xy.back().first + off(rng), xy.back().second + off(rng)});
    const auto v = physics::is_stable(cubes(xy));
    auto moved = xy, mx = xy, my = xy;
    const double dx = off(rng), dy = off(rng);
    for (auto& p : moved) p = {p.first + dx, p.second + dy};
    for (auto& p : mx) p.first = -p.first;
    for (auto& p : my) p.second = -p.second;
    if (!(physics::is_stable(cubes(moved)) == v) || !(physics::is_stable(cubes(mx)) == v) ||
        !(physics::is_stable(cubes(my)) == v)) {
      ++invariance_failures;
    }
  }
  return {mismatches == 0 && cases && invariance_failures == 0,
          std::to_string(mismatches) + " grid mismatches; hand cases " +
              (cases ? "match" : "DIFFER") + "; " + std::to_string(invariance_failures) +
              " invariance failures in 1000 towers"};
}

// 7 -------------------------------------------------------------------------
Outcome selection_rule() {
  using policy::CandidateScore;
  const auto make = [](std::vector<task::Action> a, std::vector<double> p) {
    std::vector<CandidateScore> s;
    for (std::size_t i = 0; i < a.size(); ++i) s.push_back({a[i], p[i], false, false});
    return s;
  };
  int passed = 0;
  int total = 0;
  const auto expect = [&](bool ok) {
    ++total;
    passed += ok;
  };

  const auto grid = policy::candidate_grid(physics::Block{0}, 5, 5);
  auto r = policy::select_action(make(grid, std::vector<double>(25, 1.0)), 0.8, 0.2);
  expect(std::abs(r.chosen.x) < 1e-12 && std::abs(r.chosen.y) < 1e-12 &&
         r.confidence == policy::Confidence::normal && r.best_index == 12);

  r = policy::select_action(make({{0, 0}, {2, 0}, {-1, -1}}, {0.95, 0.90, 0.60}), 0.8, 0.2);
  expect(r.chosen == task::Action{1.0, 0.0} && r.scores[0].in_stable_set &&
         r.scores[1].in_stable_set && !r.scores[2].in_tau_set);

  r = policy::select_action(make({{0, 0}, {2, 0}, {4, 0}}, {0.5, 0.5, 0.5}), 0.8, 0.2);
  expect(r.confidence == policy::Confidence::fallback_low_confidence && r.best_index == 1 &&
         r.chosen == task::Action{2.0, 0.0});

  const auto row = policy::candidate_grid(physics::Block{0}, 1, 4);
  r = policy::select_action(make(row, {0.2, 0.9, 0.9, 0.2}), 0.8, 0.0);
  expect(r.best_index == 1);

  r = policy::select_action(make({{0, 0}, {2, 0}}, {0.9, 0.7}), 0.5, 0.2);
  expect(r.scores[1].in_stable_set && r.chosen == task::Action{1.0, 0.0});

  expect(policy::baseline_action(physics::Block{0, {2.0, 0.5, 3.75}}) == task::Action{2.0, 0.5});
  return {passed == total, std::to_string(passed) + "/" + std::to_string(total) + " worked examples"};
}

// 8 -------------------------------------------------------------------------
std::map<std::string, std::string> data_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename() == "timing.json") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    out[e.path().filename().string()] = s.str();
  }
  return out;
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / ("cobra_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream(root / "tower.json")
      << R"({"tower": [{"center": [0, 0, 0]}, {"center": [1.5, -1.0, 0]}]})";

  const std::string cli = COBRA_CLI_PATH;
  std::size_t identical = 0;
  std::size_t commands = 0;
  std::string failures;
  for (const std::string cmd : {"characterize", "eval-prediction", "eval-action", "heatmap", "episode"}) {
    std::vector<std::map<std::string, std::string>> runs;
    bool ran = true;
    for (const char* threads : {"1", "4", "1"}) {
      const fs::path out = root / (cmd + "_" + threads + "_" + std::to_string(runs.size()));
      std::string line = cli + " " + cmd + " --seed 2024 --threads " + threads + " --out " +
                         out.string();
      if (cmd == "heatmap") line += " --tower " + (root / "tower.json").string();
      ran = ran && std::system((line + " > /dev/null 2>&1").c_str()) == 0;
      runs.push_back(ran ? data_files(out) : std::map<std::string, std::string>{});
    }
    ++commands;
    if (ran && !runs[0].empty() && runs[0] == runs[1] && runs[0] == runs[2]) {
      ++identical;
    } else {
      failures += " " + cmd;
    }
  }
  fs::remove_all(root);
  return {identical == commands, std::to_string(identical) + "/" + std::to_string(commands) +
                                     " commands byte-identical across reruns and 1 vs 4 threads" +
                                     (failures.empty() ? "" : "; differing:" + failures)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 zero-actuation-noise perfection", zero_actuation_noise},
      {"2 policy dominance under noise", dominance_under_noise},
      {"3 classifier quality", classifier_quality},
      {"4 noise characterization round-trip", noise_round_trip},
      {"5 inference correctness", inference_correctness},
      {"6 physics oracle exactness", physics_exactness},
      {"7 selection rule worked examples", selection_rule},
      {"8 determinism of every CLI command", cli_determinism},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << " ["
              << num(secs, 1) << " s]" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
