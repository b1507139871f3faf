#include "cobra/ppl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace cobra::ppl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

template <class T>
const T& expect(const Value& v, std::string_view dist) {
  const T* p = std::get_if<T>(&v);
  if (p == nullptr) {
    throw ValueTypeMismatch("value " + to_string(v) + " has the wrong shape for " +
                            std::string(dist));
  }
  return *p;
}

double gaussian_log_density(double x, double mean, double sigma) {
  if (sigma == 0.0) return x == mean ? 0.0 : kNegInf;
  const double z = (x - mean) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double gaussian_draw(Rng& rng, double mean, double sigma) {
  if (sigma == 0.0) return mean;
  return std::normal_distribution<double>(mean, sigma)(rng);
}

}  // namespace

// --- SiteName ---------------------------------------------------------------

SiteName::SiteName(std::initializer_list<std::string> segments)
    : SiteName(std::vector<std::string>(segments)) {}

SiteName::SiteName(std::vector<std::string> segments) : segments_(std::move(segments)) {
  require(!segments_.empty(), "site name must have at least one segment");
  for (const auto& s : segments_) require(!s.empty(), "site name segments must be non-empty");
}

SiteName SiteName::parse(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto slash = path.find('/', start);
    parts.emplace_back(path.substr(start, slash - start));
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  return SiteName(std::move(parts));
}

SiteName SiteName::operator/(std::string_view segment) const {
  auto parts = segments_;
  parts.emplace_back(segment);
  return SiteName(std::move(parts));
}

SiteName SiteName::operator/(std::size_t index) const { return *this / std::to_string(index); }

std::string SiteName::str() const {
  std::string out;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (i > 0) out += '/';
    out += segments_[i];
  }
  return out;
}

std::string to_string(const Value& v) {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, double>) {
          os << x;
        } else {
          os << '[';
          for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
          os << ']';
        }
      },
      v);
  return os.str();
}

std::string_view to_string(Role r) {
  switch (r) {
    case Role::sampled:
      return "sampled";
    case Role::observed:
      return "observed";
    case Role::intervened:
      return "intervened";
  }
  return "unknown";
}

// --- Distribution -----------------------------------------------------------

Distribution::Distribution(GaussianScalar d) : kind_(d) {
  require(d.sigma >= 0.0 && std::isfinite(d.sigma), "GaussianScalar: sigma must be >= 0");
}

Distribution::Distribution(GaussianIsotropic3 d) : kind_(d) {
  require(d.sigma >= 0.0 && std::isfinite(d.sigma), "GaussianIsotropic3: sigma must be >= 0");
}

Distribution::Distribution(Bernoulli d) : kind_(d) {
  require(d.p >= 0.0 && d.p <= 1.0, "Bernoulli: p must lie in [0, 1]");
}

Distribution::Distribution(Categorical d) : kind_(d) {
  require(!d.weights.empty(), "Categorical: no weights");
  double total = 0.0;
  for (double w : d.weights) {
    require(w >= 0.0 && std::isfinite(w), "Categorical: weights must be non-negative");
    total += w;
  }
  require(total > 0.0, "Categorical: weights must sum to a positive value");
}

Distribution::Distribution(UniformContinuous d) : kind_(d) {
  require(d.lo < d.hi, "UniformContinuous: lo must be < hi");
}

Distribution::Distribution(Delta d) : kind_(std::move(d)) {}

Value Distribution::draw(Rng& rng) const {
  return std::visit(
      [&](const auto& d) -> Value {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, GaussianScalar>) {
          return gaussian_draw(rng, d.mean, d.sigma);
        } else if constexpr (std::is_same_v<T, GaussianIsotropic3>) {
          Vec3 out{};
          for (std::size_t i = 0; i < 3; ++i) out[i] = gaussian_draw(rng, d.mean[i], d.sigma);
          return out;
        } else if constexpr (std::is_same_v<T, Bernoulli>) {
          return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < d.p ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, Categorical>) {
          std::discrete_distribution<std::size_t> pick(d.weights.begin(), d.weights.end());
          return static_cast<double>(pick(rng));
        } else if constexpr (std::is_same_v<T, UniformContinuous>) {
          return std::uniform_real_distribution<double>(d.lo, d.hi)(rng);
        } else {
          return d.value;
        }
      },
      kind_);
}

double Distribution::log_density(const Value& v) const {
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, GaussianScalar>) {
          return gaussian_log_density(expect<double>(v, "GaussianScalar"), d.mean, d.sigma);
        } else if constexpr (std::is_same_v<T, GaussianIsotropic3>) {
          const auto& x = expect<Vec3>(v, "GaussianIsotropic3");
          double lp = 0.0;
          for (std::size_t i = 0; i < 3; ++i) lp += gaussian_log_density(x[i], d.mean[i], d.sigma);
          return lp;
        } else if constexpr (std::is_same_v<T, Bernoulli>) {
          const double x = expect<double>(v, "Bernoulli");
          if (x == 1.0) return std::log(d.p);
          if (x == 0.0) return std::log1p(-d.p);
          return kNegInf;
        } else if constexpr (std::is_same_v<T, Categorical>) {
          const double x = expect<double>(v, "Categorical");
          if (x < 0.0 || x != std::floor(x) || x >= static_cast<double>(d.weights.size())) {
            return kNegInf;
          }
          const double total = std::accumulate(d.weights.begin(), d.weights.end(), 0.0);
          return std::log(d.weights[static_cast<std::size_t>(x)] / total);
        } else if constexpr (std::is_same_v<T, UniformContinuous>) {
          const double x = expect<double>(v, "UniformContinuous");
          return (x >= d.lo && x <= d.hi) ? -std::log(d.hi - d.lo) : kNegInf;
        } else {
          if (v.index() != d.value.index()) {
            throw ValueTypeMismatch("value " + to_string(v) + " has the wrong shape for Delta(" +
                                    to_string(d.value) + ")");
          }
          return v == d.value ? 0.0 : kNegInf;
        }
      },
      kind_);
}

std::optional<std::vector<std::pair<Value, double>>> Distribution::finite_support() const {
  using Support = std::vector<std::pair<Value, double>>;
  return std::visit(
      [&](const auto& d) -> std::optional<Support> {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, GaussianScalar>) {
          if (d.sigma == 0.0) return Support{{d.mean, 1.0}};
          return std::nullopt;
        } else if constexpr (std::is_same_v<T, GaussianIsotropic3>) {
          if (d.sigma == 0.0) return Support{{d.mean, 1.0}};
          return std::nullopt;
        } else if constexpr (std::is_same_v<T, Bernoulli>) {
          Support s;
          if (d.p < 1.0) s.emplace_back(0.0, 1.0 - d.p);
          if (d.p > 0.0) s.emplace_back(1.0, d.p);
          return s;
        } else if constexpr (std::is_same_v<T, Categorical>) {
          const double total = std::accumulate(d.weights.begin(), d.weights.end(), 0.0);
          Support s;
          for (std::size_t i = 0; i < d.weights.size(); ++i) {
            if (d.weights[i] > 0.0) s.emplace_back(static_cast<double>(i), d.weights[i] / total);
          }
          return s;
        } else if constexpr (std::is_same_v<T, UniformContinuous>) {
          return std::nullopt;
        } else {
          return Support{{d.value, 1.0}};
        }
      },
      kind_);
}

std::string Distribution::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, GaussianScalar>) {
          os << "GaussianScalar(" << d.mean << ", " << d.sigma << ")";
        } else if constexpr (std::is_same_v<T, GaussianIsotropic3>) {
          os << "GaussianIsotropic3(" << to_string(d.mean) << ", " << d.sigma << ")";
        } else if constexpr (std::is_same_v<T, Bernoulli>) {
          os << "Bernoulli(" << d.p << ")";
        } else if constexpr (std::is_same_v<T, Categorical>) {
          os << "Categorical(" << d.weights.size() << " categories)";
        } else if constexpr (std::is_same_v<T, UniformContinuous>) {
          os << "UniformContinuous(" << d.lo << ", " << d.hi << ")";
        } else {
          os << "Delta(" << to_string(d.value) << ")";
        }
      },
      kind_);
  return os.str();
}

// --- Trace ------------------------------------------------------------------

const Site& Trace::site(const SiteName& name) const {
  const auto it = sites_.find(name);
  if (it == sites_.end()) throw std::out_of_range("no site named " + name.str());
  return it->second;
}

double Trace::scalar(const SiteName& name) const { return expect<double>(value(name), name.str()); }
Vec2 Trace::vec2(const SiteName& name) const { return expect<Vec2>(value(name), name.str()); }
Vec3 Trace::vec3(const SiteName& name) const { return expect<Vec3>(value(name), name.str()); }

// --- Context ----------------------------------------------------------------

namespace detail {

/// Odometer over finite-support choices in execution order.
struct EnumerationCursor {
  std::vector<std::size_t> choices;
  std::vector<std::size_t> sizes;
  std::size_t depth = 0;
  double log_prior = 0.0;

  void begin_path() {
    depth = 0;
    log_prior = 0.0;
  }

  /// Moves to the next path; false once every path has been visited.
  bool advance() {
    choices.resize(depth);
    sizes.resize(depth);
    while (!choices.empty()) {
      if (++choices.back() < sizes.back()) return true;
      choices.pop_back();
      sizes.pop_back();
    }
    return false;
  }
};

}  // namespace detail

Context::Context(const InterventionSet& interventions, const ConditionSet& conditions,
                 std::uint64_t seed, detail::EnumerationCursor* cursor)
    : interventions_(interventions), conditions_(conditions), rng_(seed), cursor_(cursor) {}

Value Context::sample(const SiteName& name, const Distribution& dist) {
  if (trace_.sites_.contains(name)) {
    throw DuplicateSite("site " + name.str() + " sampled twice in one execution");
  }

  Site site{dist, 0.0, Role::sampled, 0.0};
  if (const auto it = interventions_.assignments.find(name);
      it != interventions_.assignments.end()) {
    site = Site{Delta{it->second}, it->second, Role::intervened, 0.0};
  } else if (const auto ct = conditions_.assignments.find(name);
             ct != conditions_.assignments.end()) {
    site = Site{dist, ct->second, Role::observed, dist.log_density(ct->second)};
  } else if (cursor_ != nullptr) {
    auto support = dist.finite_support();
    if (!support) {
      throw NotEnumerable("site " + name.str() + " has continuous support: " + dist.describe());
    }
    auto& c = *cursor_;
    if (c.depth == c.choices.size()) {
      c.choices.push_back(0);
      c.sizes.push_back(support->size());
    }
    const auto& [value, prob] = (*support)[c.choices[c.depth]];
    ++c.depth;
    c.log_prior += std::log(prob);
    site.value = value;
  } else {
    site.value = dist.draw(rng_);
  }

  trace_.log_weight_ += site.log_weight;
  trace_.order_.push_back(name);
  auto [it, inserted] = trace_.sites_.emplace(name, std::move(site));
  return it->second.value;
}

double Context::sample_scalar(const SiteName& name, const Distribution& dist) {
  return expect<double>(sample(name, dist), name.str());
}

Vec2 Context::sample_vec2(const SiteName& name, const Distribution& dist) {
  return expect<Vec2>(sample(name, dist), name.str());
}

Vec3 Context::sample_vec3(const SiteName& name, const Distribution& dist) {
  return expect<Vec3>(sample(name, dist), name.str());
}

// --- Execution and inference ------------------------------------------------

namespace detail {

Trace execute(const std::function<void(Context&)>& model, const InterventionSet& interventions,
              const ConditionSet& conditions, std::uint64_t seed, EnumerationCursor* cursor) {
  for (const auto& [name, value] : interventions.assignments) {
    if (conditions.assignments.contains(name)) {
      throw ConflictingHandler("site " + name.str() + " is both intervened on and conditioned");
    }
  }
  Context ctx(interventions, conditions, seed, cursor);
  model(ctx);
  Trace trace = std::move(ctx.trace_);
  for (const auto& [name, value] : interventions.assignments) {
    if (!trace.contains(name)) trace.warnings_.push_back("unused intervention: " + name.str());
  }
  for (const auto& [name, value] : conditions.assignments) {
    if (!trace.contains(name)) trace.warnings_.push_back("unused condition: " + name.str());
  }
  return trace;
}

}  // namespace detail

Trace run_model(const Model& model, const InterventionSet& interventions,
                const ConditionSet& conditions, std::uint64_t seed) {
  return detail::execute(model, interventions, conditions, seed, nullptr);
}

QueryResult weighted_estimate(const std::vector<double>& log_weights,
                              const std::vector<double>& values) {
  const std::size_t n = log_weights.size();
  double max_lw = kNegInf;
  for (double lw : log_weights) {
    if (!std::isnan(lw)) max_lw = std::max(max_lw, lw);
  }
  if (n == 0 || max_lw == kNegInf) {
    throw DegenerateWeights("all importance weights are zero");
  }
  double sum_w = 0.0;
  double sum_w2 = 0.0;
  double sum_wq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::isnan(log_weights[i]) ? 0.0 : std::exp(log_weights[i] - max_lw);
    sum_w += w;
    sum_w2 += w * w;
    sum_wq += w * values[i];
  }
  const double ess = sum_w * sum_w / sum_w2;
  if (n > 1 && ess < 1.0 + 1e-9) {
    throw DegenerateWeights("effective sample size " + std::to_string(ess) + " from " +
                            std::to_string(n) + " samples");
  }
  return {sum_wq / sum_w, ess};
}

QueryResult importance_query(const Model& model, const InterventionSet& interventions,
                             const ConditionSet& conditions, const Query& query,
                             std::size_t n_samples, std::uint64_t seed, std::size_t workers) {
  if (n_samples < 1) throw std::invalid_argument("importance_query: n_samples must be >= 1");
  std::vector<double> log_weights(n_samples);
  std::vector<double> values(n_samples);
  parallel_for(n_samples, workers, [&](std::size_t i) {
    const Trace trace = detail::execute(model, interventions, conditions, derive_seed(seed, i),
                                        nullptr);
    log_weights[i] = trace.log_weight();
    // Zero-weight samples never contribute; skip the query so it may assume
    // a consistent trace.
    values[i] = trace.log_weight() == kNegInf ? 0.0 : query(trace);
  });
  return weighted_estimate(log_weights, values);
}

double enumerate_query(const Model& model, const InterventionSet& interventions,
                       const ConditionSet& conditions, const Query& query) {
  constexpr std::size_t kMaxPaths = std::size_t{1} << 22;
  detail::EnumerationCursor cursor;
  std::vector<double> log_weights;
  std::vector<double> values;
  do {
    if (log_weights.size() >= kMaxPaths) {
      throw NotEnumerable("enumeration exceeds " + std::to_string(kMaxPaths) + " paths");
    }
    cursor.begin_path();
    const Trace trace = detail::execute(model, interventions, conditions, 0, &cursor);
    const double lw = cursor.log_prior + trace.log_weight();
    log_weights.push_back(lw);
    values.push_back(lw == kNegInf ? 0.0 : query(trace));
  } while (cursor.advance());

  double max_lw = kNegInf;
  for (double lw : log_weights) max_lw = std::max(max_lw, lw);
  if (max_lw == kNegInf) throw DegenerateWeights("every enumerated path has zero weight");
  double sum_w = 0.0;
  double sum_wq = 0.0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    const double w = std::exp(log_weights[i] - max_lw);
    sum_w += w;
    sum_wq += w * values[i];
  }
  return sum_wq / sum_w;
}

}  // namespace cobra::ppl
