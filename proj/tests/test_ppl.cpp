#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cobra/ppl.hpp"

using namespace cobra;
using namespace cobra::ppl;

namespace {

const SiteName kX{"x"};
const SiteName kU{"u"};
const SiteName kY{"y"};

Model single_coin() {
  return [](Context& ctx) { ctx.sample(kX, Bernoulli{0.5}); };
}

// U ~ Bern(0.5); X := U; Y := XOR(X, U). Observing X=1 forces U=1 so Y=0;
// do(X=1) leaves U free, so Y = 1 - U ~ Bern(0.5).
Model xor_collider() {
  return [](Context& ctx) {
    const double u = ctx.sample_scalar(kU, Bernoulli{0.5});
    const double x = ctx.sample_scalar(kX, Delta{u});
    ctx.record(kY, static_cast<double>(static_cast<int>(x) ^ static_cast<int>(u)));
  };
}

double y_indicator(const Trace& t) { return t.scalar(kY); }

InterventionSet intervene(const SiteName& n, Value v) { return {{{n, v}}}; }
ConditionSet condition(const SiteName& n, Value v) { return {{{n, v}}}; }

}  // namespace

TEST_CASE("site names are structured paths") {
  const SiteName n = SiteName{"t1"} / "block" / std::size_t{2} / "wz" / "x";
  CHECK(n.str() == "t1/block/2/wz/x");
  CHECK(SiteName::parse("t1/block/2/wz/x") == n);
  CHECK_THROWS_AS(SiteName(std::vector<std::string>{}), std::invalid_argument);
  CHECK_THROWS_AS(SiteName::parse("a//b"), std::invalid_argument);
}

TEST_CASE("distribution parameters are validated") {
  CHECK_THROWS_AS(Distribution(GaussianScalar{0.0, -1.0}), std::invalid_argument);
  CHECK_THROWS_AS(Distribution(Bernoulli{1.5}), std::invalid_argument);
  CHECK_THROWS_AS(Distribution(Categorical{{0.0, 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(Distribution(Categorical{{1.0, -0.1}}), std::invalid_argument);
  CHECK_THROWS_AS(Distribution(UniformContinuous{1.0, 1.0}), std::invalid_argument);
  CHECK_NOTHROW(Distribution(GaussianScalar{0.0, 0.0}));
}

TEST_CASE("log densities") {
  CHECK(Distribution(Bernoulli{0.25}).log_density(1.0) == doctest::Approx(std::log(0.25)));
  CHECK(Distribution(Bernoulli{0.25}).log_density(0.0) == doctest::Approx(std::log(0.75)));
  CHECK(Distribution(Categorical{{1.0, 3.0}}).log_density(1.0) == doctest::Approx(std::log(0.75)));
  CHECK(std::isinf(Distribution(Categorical{{1.0, 3.0}}).log_density(2.0)));
  CHECK(Distribution(GaussianScalar{1.0, 2.0}).log_density(1.0) ==
        doctest::Approx(-std::log(2.0 * std::sqrt(2.0 * M_PI))));
  CHECK(Distribution(UniformContinuous{0.0, 4.0}).log_density(1.0) ==
        doctest::Approx(-std::log(4.0)));
  CHECK(Distribution(Delta{Vec2{1.0, 2.0}}).log_density(Vec2{1.0, 2.0}) == 0.0);
  CHECK(std::isinf(Distribution(Delta{Vec2{1.0, 2.0}}).log_density(Vec2{1.0, 2.5})));
  CHECK_THROWS_AS(Distribution(Delta{Vec2{1.0, 2.0}}).log_density(1.0), ValueTypeMismatch);
}

TEST_CASE("run_model: roles and log weights") {
  SUBCASE("unhandled sites are sampled with zero weight") {
    const Trace t = run_model(single_coin(), {}, {}, 7);
    REQUIRE(t.sites().size() == 1);
    CHECK(t.site(kX).role == Role::sampled);
    CHECK(t.log_weight() == 0.0);
  }
  SUBCASE("conditioned sites are scored") {
    const Trace t = run_model(single_coin(), {}, condition(kX, 1.0), 7);
    CHECK(t.scalar(kX) == 1.0);
    CHECK(t.site(kX).role == Role::observed);
    CHECK(t.log_weight() == doctest::Approx(std::log(0.5)));
  }
  SUBCASE("intervened sites carry no score") {
    const Trace t = run_model(single_coin(), intervene(kX, 1.0), {}, 7);
    CHECK(t.scalar(kX) == 1.0);
    CHECK(t.site(kX).role == Role::intervened);
    CHECK(t.site(kX).log_weight == 0.0);
    CHECK(t.log_weight() == 0.0);
    // The distribution is replaced by a point mass.
    CHECK(std::holds_alternative<Delta>(t.site(kX).distribution.kind()));
  }
}

TEST_CASE("run_model: handler errors") {
  const Model twice = [](Context& ctx) {
    ctx.sample(kX, Bernoulli{0.5});
    ctx.sample(kX, Bernoulli{0.5});
  };
  CHECK_THROWS_AS(run_model(twice, {}, {}, 1), DuplicateSite);

  InterventionSet i = intervene(kX, 1.0);
  ConditionSet c = condition(kX, 0.0);
  CHECK_THROWS_AS(run_model(single_coin(), i, c, 1), ConflictingHandler);

  const Trace t = run_model(single_coin(), intervene(SiteName{"nope"}, 1.0),
                            condition(SiteName{"missing"}, 0.0), 1);
  REQUIRE(t.warnings().size() == 2);
  CHECK(t.warnings()[0].find("nope") != std::string::npos);
  CHECK(t.warnings()[1].find("missing") != std::string::npos);
}

TEST_CASE("run_model is deterministic given the seed") {
  const Model m = [](Context& ctx) {
    ctx.sample(SiteName{"a"}, GaussianScalar{0.0, 1.0});
    ctx.sample(SiteName{"b"}, GaussianIsotropic3{{1.0, 2.0, 3.0}, 0.5});
    ctx.sample(SiteName{"c"}, Categorical{{0.2, 0.3, 0.5}});
  };
  const Trace a = run_model(m, {}, {}, 99);
  const Trace b = run_model(m, {}, {}, 99);
  for (const auto& [name, site] : a.sites()) CHECK(site.value == b.value(name));
  CHECK(a.order() == b.order());
}

TEST_CASE("importance_query on the XOR collider separates do from conditioning") {
  const auto model = xor_collider();
  const auto conditioned =
      importance_query(model, {}, condition(kX, 1.0), y_indicator, 10'000, 2024);
  const auto intervened =
      importance_query(model, intervene(kX, 1.0), {}, y_indicator, 10'000, 2024);
  CHECK(std::abs(conditioned.estimate - 0.0) <= 0.02);
  CHECK(std::abs(intervened.estimate - 0.5) <= 0.02);
  CHECK(intervened.effective_sample_size == doctest::Approx(10'000.0));
  // Roughly half the samples survive the observation.
  CHECK(conditioned.effective_sample_size == doctest::Approx(5'000.0).epsilon(0.05));
}

TEST_CASE("enumerate_query is exact on the XOR collider") {
  const auto model = xor_collider();
  CHECK(enumerate_query(model, {}, condition(kX, 1.0), y_indicator) == 0.0);
  CHECK(enumerate_query(model, intervene(kX, 1.0), {}, y_indicator) == doctest::Approx(0.5));
  CHECK(enumerate_query(model, {}, {}, [](const Trace& t) { return t.scalar(kU); }) ==
        doctest::Approx(0.5));
  const Model gaussian = [](Context& ctx) { ctx.sample(kX, GaussianScalar{0.0, 1.0}); };
  CHECK_THROWS_AS(enumerate_query(gaussian, {}, {}, [](const Trace&) { return 1.0; }),
                  NotEnumerable);
}

TEST_CASE("constant query normalizes to 1") {
  const Model m = [](Context& ctx) {
    ctx.sample(kX, GaussianScalar{0.0, 1.0});
    ctx.sample(kY, GaussianScalar{0.0, 1.0});
  };
  const auto one = [](const Trace&) { return 1.0; };
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (std::size_t n : {1u, 7u, 100u}) {
      CHECK(importance_query(m, {}, condition(kY, 0.3), one, n, seed).estimate ==
            doctest::Approx(1.0));
    }
  }
}

TEST_CASE("degenerate weights are reported, not hidden") {
  const auto model = xor_collider();
  // X := U, so X = 2 is impossible.
  CHECK_THROWS_AS(importance_query(model, {}, condition(kX, 2.0), y_indicator, 100, 1),
                  DegenerateWeights);
  CHECK_THROWS_AS(enumerate_query(model, {}, condition(kX, 2.0), y_indicator), DegenerateWeights);
  CHECK_THROWS_AS(importance_query(model, {}, {}, y_indicator, 0, 1), std::invalid_argument);

  // A single surviving sample out of many has ESS 1.
  std::vector<double> lw{0.0, -INFINITY, -INFINITY};
  std::vector<double> q{1.0, 0.0, 0.0};
  CHECK_THROWS_AS(weighted_estimate(lw, q), DegenerateWeights);
  CHECK(weighted_estimate({0.0}, {0.25}).estimate == 0.25);
}

TEST_CASE("weighted_estimate: weighted mean and ESS") {
  const auto r = weighted_estimate({std::log(1.0), std::log(3.0)}, {1.0, 0.0});
  CHECK(r.estimate == doctest::Approx(0.25));
  CHECK(r.effective_sample_size == doctest::Approx(16.0 / 10.0));
  // Shift invariance in log space.
  const auto s = weighted_estimate({-1000.0, -1000.0 + std::log(3.0)}, {1.0, 0.0});
  CHECK(s.estimate == doctest::Approx(0.25));
}

TEST_CASE("importance_query does not depend on the worker count") {
  const Model m = [](Context& ctx) {
    const double a = ctx.sample_scalar(SiteName{"a"}, GaussianScalar{0.0, 1.0});
    ctx.sample(SiteName{"obs"}, GaussianScalar{a, 0.5});
  };
  const auto q = [](const Trace& t) { return t.scalar(SiteName{"a"}); };
  const auto serial = importance_query(m, {}, condition(SiteName{"obs"}, 0.8), q, 2000, 5, 1);
  const auto parallel = importance_query(m, {}, condition(SiteName{"obs"}, 0.8), q, 2000, 5, 4);
  CHECK(serial.estimate == parallel.estimate);
  CHECK(serial.effective_sample_size == parallel.effective_sample_size);
  // Conjugate posterior mean: 0.8 * 1 / (1 + 0.25) = 0.64.
  CHECK(serial.estimate == doctest::Approx(0.64).epsilon(0.1));
}

// Random binary Bayesian networks: site i has up to 3 parents among 0..i-1
// and a Bernoulli CPT. The brute-force oracle enumerates all 2^k joint
// assignments directly from the CPTs, independently of the ppl machinery.
namespace {

struct RandomNet {
  std::size_t k = 0;
  std::vector<std::vector<std::size_t>> parents;
  std::vector<std::vector<double>> cpt;  // indexed by parent configuration
  std::map<std::size_t, double> observed;
  std::map<std::size_t, double> intervened;
  std::size_t query_site = 0;

  double p_true(std::size_t i, const std::vector<int>& v) const {
    std::size_t cfg = 0;
    for (std::size_t p : parents[i]) cfg = cfg * 2 + static_cast<std::size_t>(v[p]);
    return cpt[i][cfg];
  }

  Model model() const {
    return [this](Context& ctx) {
      std::vector<int> v(k, 0);
      for (std::size_t i = 0; i < k; ++i) {
        v[i] = static_cast<int>(ctx.sample_scalar(SiteName{"s"} / i, Bernoulli{p_true(i, v)}));
      }
    };
  }

  double brute_force() const {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
      std::vector<int> v(k);
      for (std::size_t i = 0; i < k; ++i) v[i] = static_cast<int>((mask >> i) & 1U);
      double w = 1.0;
      for (std::size_t i = 0; i < k; ++i) {
        const double p = p_true(i, v);
        const double pv = v[i] ? p : 1.0 - p;
        if (auto it = intervened.find(i); it != intervened.end()) {
          if (v[i] != static_cast<int>(it->second)) w = 0.0;
        } else {
          w *= pv;  // sampled and observed sites both enter the joint
          if (auto ot = observed.find(i); ot != observed.end() && v[i] != static_cast<int>(ot->second)) {
            w = 0.0;
          }
        }
      }
      num += w * v[query_site];
      den += w;
    }
    return num / den;
  }
};

RandomNet make_net(std::mt19937_64& rng) {
  RandomNet net;
  std::uniform_int_distribution<std::size_t> size(2, 12);
  std::uniform_real_distribution<double> prob(0.1, 0.9);
  net.k = size(rng);
  net.parents.resize(net.k);
  net.cpt.resize(net.k);
  for (std::size_t i = 0; i < net.k; ++i) {
    for (std::size_t p = 0; p < i && net.parents[i].size() < 3; ++p) {
      if (std::bernoulli_distribution(0.4)(rng)) net.parents[i].push_back(p);
    }
    net.cpt[i].resize(std::size_t{1} << net.parents[i].size());
    for (double& c : net.cpt[i]) c = prob(rng);
  }
  std::uniform_int_distribution<std::size_t> pick(0, net.k - 1);
  net.query_site = pick(rng);
  const std::size_t o = pick(rng);
  if (o != net.query_site) net.observed[o] = std::bernoulli_distribution(0.5)(rng) ? 1.0 : 0.0;
  const std::size_t d = pick(rng);
  if (d != net.query_site && !net.observed.contains(d)) {
    net.intervened[d] = std::bernoulli_distribution(0.5)(rng) ? 1.0 : 0.0;
  }
  return net;
}

}  // namespace

TEST_CASE("sampler and enumerator agree on random finite-support networks") {
  std::mt19937_64 rng(77);
  constexpr std::size_t n = 4000;
  const double tol = 3.0 / std::sqrt(static_cast<double>(n));
  for (int rep = 0; rep < 40; ++rep) {
    const RandomNet net = make_net(rng);
    InterventionSet inter;
    ConditionSet cond;
    for (auto [i, v] : net.intervened) inter.assignments.emplace(SiteName{"s"} / i, v);
    for (auto [i, v] : net.observed) cond.assignments.emplace(SiteName{"s"} / i, v);
    const SiteName q = SiteName{"s"} / net.query_site;
    const auto indicator = [q](const Trace& t) { return t.scalar(q); };
    const auto model = net.model();

    const double oracle = net.brute_force();
    const double exact = enumerate_query(model, inter, cond, indicator);
    const double sampled = importance_query(model, inter, cond, indicator, n, 1000 + rep).estimate;
    CAPTURE(rep);
    CAPTURE(net.k);
    CHECK(exact == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(std::abs(sampled - exact) <= tol);
  }
}
