#include "cobra/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "cobra/ppl.hpp"

namespace cobra::metrics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

struct ClassCounts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

ClassCounts count_classes(const std::vector<ScoredSample>& samples) {
  ClassCounts c;
  for (const auto& s : samples) (s.label ? c.positives : c.negatives)++;
  return c;
}

/// Distinct scores, descending.
std::vector<double> distinct_scores(const std::vector<ScoredSample>& samples) {
  std::set<double, std::greater<>> unique;
  for (const auto& s : samples) unique.insert(s.phi);
  return {unique.begin(), unique.end()};
}

}  // namespace

double predict_stability(const task::Observation& observation, const task::NoiseParams& noise,
                         std::size_t n_samples, std::uint64_t seed, std::size_t workers) {
  const auto model = task::latent_state_model(observation, noise);
  return ppl::importance_query(model, {}, {}, task::stable_indicator(task::sites::kLatentStep),
                               n_samples, seed, workers)
      .estimate;
}

bool classify(double phi, double tau) { return phi >= tau; }

Confusion confusion_at(const std::vector<ScoredSample>& samples, double tau) {
  Confusion c;
  for (const auto& s : samples) {
    const bool predicted = classify(s.phi, tau);
    if (predicted && s.label) ++c.tp;
    else if (predicted) ++c.fp;
    else if (s.label) ++c.fn;
    else ++c.tn;
  }
  return c;
}

ClassifierReport evaluate_classifier(const std::vector<ScoredSample>& samples, double tau) {
  for (const auto& s : samples) {
    if (!(s.phi >= 0.0 && s.phi <= 1.0)) throw std::invalid_argument("phi outside [0, 1]");
  }
  ClassifierReport r;
  r.threshold = tau;
  r.confusion = confusion_at(samples, tau);
  const auto& c = r.confusion;
  r.accuracy = ratio(c.tp + c.tn, samples.size());
  r.precision = ratio(c.tp, c.tp + c.fp);
  r.recall = ratio(c.tp, c.tp + c.fn);
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;

  const ClassCounts classes = count_classes(samples);
  if (classes.positives > 0) {
    r.pr_points.push_back({kInf, 0.0, 1.0});
    for (double t : distinct_scores(samples)) {
      const Confusion ct = confusion_at(samples, t);
      r.pr_points.push_back({t, ratio(ct.tp, classes.positives), ratio(ct.tp, ct.tp + ct.fp)});
    }
  }
  if (classes.positives == 0 || classes.negatives == 0) return r;

  // Each distinct score moves the operating point once; tied scores of both
  // classes move it diagonally, which the trapezoid rule scores as 1/2.
  r.roc_points.push_back({kInf, 0.0, 0.0});
  std::vector<ScoredSample> sorted = samples;
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredSample& a, const ScoredSample& b) { return a.phi > b.phi; });
  std::size_t tp = 0;
  std::size_t fp = 0;
  double area = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double t = sorted[i].phi;
    for (; i < sorted.size() && sorted[i].phi == t; ++i) (sorted[i].label ? tp : fp)++;
    const RocPoint prev = r.roc_points.back();
    const RocPoint next{t, ratio(fp, classes.negatives), ratio(tp, classes.positives)};
    area += (next.fpr - prev.fpr) * (next.tpr + prev.tpr) * 0.5;
    r.roc_points.push_back(next);
  }
  r.auc = area;
  return r;
}

double youden_threshold(const std::vector<ScoredSample>& samples) {
  const ClassCounts classes = count_classes(samples);
  if (classes.positives == 0 || classes.negatives == 0) {
    throw NoThreshold("Youden threshold needs both classes");
  }
  std::vector<double> ascending = distinct_scores(samples);
  std::reverse(ascending.begin(), ascending.end());
  std::vector<double> candidates{0.0};
  for (std::size_t i = 1; i < ascending.size(); ++i) {
    candidates.push_back(0.5 * (ascending[i - 1] + ascending[i]));
  }
  candidates.push_back(1.0);
  std::sort(candidates.begin(), candidates.end());

  double best_tau = candidates.front();
  double best_j = -kInf;
  for (double tau : candidates) {
    const Confusion c = confusion_at(samples, tau);
    const double j = ratio(c.tp, classes.positives) - ratio(c.fp, classes.negatives);
    if (j >= best_j) {
      best_j = j;
      best_tau = tau;
    }
  }
  return best_tau;
}

NoiseCharacterization characterize_noise(const std::vector<std::pair<Vec3, Vec3>>& pairs) {
  if (pairs.size() < 2) throw InsufficientData("noise characterization needs at least 2 pairs");
  NoiseCharacterization out;
  out.n = pairs.size();
  const double n = static_cast<double>(pairs.size());
  for (std::size_t axis = 0; axis < 3; ++axis) {
    double sum = 0.0;
    for (const auto& [estimate, truth] : pairs) sum += estimate[axis] - truth[axis];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& [estimate, truth] : pairs) {
      const double d = estimate[axis] - truth[axis] - mean;
      ss += d * d;
    }
    out.axes[axis] = {mean, std::sqrt(ss / (n - 1.0))};
  }
  out.isotropic_sigma = (out.axes[0].sigma + out.axes[1].sigma + out.axes[2].sigma) / 3.0;
  return out;
}

void write_roc_csv(std::ostream& os, const std::vector<RocPoint>& points) {
  os << "threshold,fpr,tpr\n";
  for (const auto& p : points) {
    os << format_number(p.threshold) << ',' << format_number(p.fpr) << ','
       << format_number(p.tpr) << '\n';
  }
}

void write_pr_csv(std::ostream& os, const std::vector<PrPoint>& points) {
  os << "threshold,recall,precision\n";
  for (const auto& p : points) {
    os << format_number(p.threshold) << ',' << format_number(p.recall) << ','
       << format_number(p.precision) << '\n';
  }
}

}  // namespace cobra::metrics
