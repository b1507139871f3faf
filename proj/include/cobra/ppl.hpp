#pragma once

// Trace-based probabilistic programs with do-interventions and conditioning.
//
// A model is an ordinary callable taking a Context&. Every random choice goes
// through Context::sample under a structured SiteName. The same model runs
// forward (generative sampling), under likelihood-weighted importance
// sampling, and under exhaustive enumeration when all sampled sites have
// finite support.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "cobra/common.hpp"

namespace cobra::ppl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DuplicateSite : public Error {
 public:
  using Error::Error;
};

class ConflictingHandler : public Error {
 public:
  using Error::Error;
};

class DegenerateWeights : public Error {
 public:
  using Error::Error;
};

class NotEnumerable : public Error {
 public:
  using Error::Error;
};

class ValueTypeMismatch : public Error {
 public:
  using Error::Error;
};

/// Hierarchical site address, e.g. t1/block/2/wz/x.
class SiteName {
 public:
  SiteName(std::initializer_list<std::string> segments);
  explicit SiteName(std::vector<std::string> segments);

  /// Splits on '/'.
  static SiteName parse(std::string_view path);

  SiteName operator/(std::string_view segment) const;
  SiteName operator/(std::size_t index) const;

  const std::vector<std::string>& segments() const { return segments_; }
  std::string str() const;

  friend auto operator<=>(const SiteName&, const SiteName&) = default;
  friend bool operator==(const SiteName&, const SiteName&) = default;

 private:
  std::vector<std::string> segments_;
};

using Value = std::variant<double, Vec2, Vec3>;

std::string to_string(const Value& v);

struct GaussianScalar {
  double mean = 0.0;
  double sigma = 1.0;
};

struct GaussianIsotropic3 {
  Vec3 mean{};
  double sigma = 1.0;
};

struct Bernoulli {
  double p = 0.5;
};

/// Values are category indices 0..k-1 stored as doubles.
struct Categorical {
  std::vector<double> weights;
};

struct UniformContinuous {
  double lo = 0.0;
  double hi = 1.0;
};

struct Delta {
  Value value;
};

class Distribution {
 public:
  using Kind = std::variant<GaussianScalar, GaussianIsotropic3, Bernoulli, Categorical,
                            UniformContinuous, Delta>;

  // Validates parameters; throws std::invalid_argument.
  Distribution(GaussianScalar d);
  Distribution(GaussianIsotropic3 d);
  Distribution(Bernoulli d);
  Distribution(Categorical d);
  Distribution(UniformContinuous d);
  Distribution(Delta d);

  const Kind& kind() const { return kind_; }

  Value draw(Rng& rng) const;
  double log_density(const Value& v) const;

  /// Atoms and their probabilities, or nullopt for continuous distributions.
  /// Zero-σ Gaussians count as a single atom.
  std::optional<std::vector<std::pair<Value, double>>> finite_support() const;

  std::string describe() const;

 private:
  Kind kind_;
};

enum class Role { sampled, observed, intervened };

std::string_view to_string(Role r);

struct Site {
  Distribution distribution;
  Value value;
  Role role;
  /// This site's contribution to Trace::log_weight.
  double log_weight = 0.0;
};

class Trace;
struct InterventionSet {
  std::map<SiteName, Value> assignments;
};

struct ConditionSet {
  std::map<SiteName, Value> assignments;
};

class Context;

namespace detail {
struct EnumerationCursor;
Trace execute(const std::function<void(Context&)>& model, const InterventionSet& interventions,
              const ConditionSet& conditions, std::uint64_t seed, EnumerationCursor* cursor);
}  // namespace detail

/// One completed execution. Immutable once returned from run_model.
class Trace {
 public:
  const std::map<SiteName, Site>& sites() const { return sites_; }
  /// Site names in execution order.
  const std::vector<SiteName>& order() const { return order_; }
  double log_weight() const { return log_weight_; }
  /// Non-fatal diagnostics such as unused handler names.
  const std::vector<std::string>& warnings() const { return warnings_; }

  bool contains(const SiteName& name) const { return sites_.contains(name); }
  const Site& site(const SiteName& name) const;
  const Value& value(const SiteName& name) const { return site(name).value; }
  double scalar(const SiteName& name) const;
  Vec2 vec2(const SiteName& name) const;
  Vec3 vec3(const SiteName& name) const;

 private:
  friend class Context;
  friend Trace detail::execute(const std::function<void(Context&)>&, const InterventionSet&,
                               const ConditionSet&, std::uint64_t, detail::EnumerationCursor*);
  std::map<SiteName, Site> sites_;
  std::vector<SiteName> order_;
  double log_weight_ = 0.0;
  std::vector<std::string> warnings_;
};

/// Handed to a model during one execution.
class Context {
 public:
  Value sample(const SiteName& name, const Distribution& dist);

  double sample_scalar(const SiteName& name, const Distribution& dist);
  Vec2 sample_vec2(const SiteName& name, const Distribution& dist);
  Vec3 sample_vec3(const SiteName& name, const Distribution& dist);

  /// Records a deterministic quantity as a Delta site.
  template <class T>
  T record(const SiteName& name, T value) {
    return std::get<T>(sample(name, Delta{Value{value}}));
  }

 private:
  friend Trace detail::execute(const std::function<void(Context&)>&, const InterventionSet&,
                               const ConditionSet&, std::uint64_t, detail::EnumerationCursor*);

  Context(const InterventionSet& interventions, const ConditionSet& conditions,
          std::uint64_t seed, detail::EnumerationCursor* cursor);

  const InterventionSet& interventions_;
  const ConditionSet& conditions_;
  Rng rng_;
  detail::EnumerationCursor* cursor_;
  Trace trace_;
};

using Model = std::function<void(Context&)>;
using Query = std::function<double(const Trace&)>;

Trace run_model(const Model& model, const InterventionSet& interventions,
                const ConditionSet& conditions, std::uint64_t seed);

struct QueryResult {
  double estimate = 0.0;
  double effective_sample_size = 0.0;
};

/// Likelihood-weighted importance sampling with the post-intervention prior
/// as proposal. Sample i runs on seed derive_seed(seed, i), so the result does
/// not depend on `workers`.
QueryResult importance_query(const Model& model, const InterventionSet& interventions,
                             const ConditionSet& conditions, const Query& query,
                             std::size_t n_samples, std::uint64_t seed, std::size_t workers = 1);

/// Exact expectation by exhaustive enumeration of finite-support sites.
double enumerate_query(const Model& model, const InterventionSet& interventions,
                       const ConditionSet& conditions, const Query& query);

/// Reduction shared by the sampler: normalized weighted mean and ESS of
/// (log_weight, query value) pairs. Throws DegenerateWeights.
QueryResult weighted_estimate(const std::vector<double>& log_weights,
                              const std::vector<double>& values);

}  // namespace cobra::ppl
