#pragma once

// Stability prediction (Task 1) and its evaluation.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "cobra/common.hpp"
#include "cobra/task_model.hpp"

namespace cobra::metrics {

class NoThreshold : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InsufficientData : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ScoredSample {
  double phi = 0.0;
  bool label = false;
};

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct PrPoint {
  double threshold = 0.0;
  double recall = 0.0;
  double precision = 0.0;
};

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
};

struct ClassifierReport {
  double threshold = 0.0;
  Confusion confusion;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// Absent when only one class is present.
  std::optional<double> auc;
  std::vector<RocPoint> roc_points;
  std::vector<PrPoint> pr_points;
};

struct AxisStats {
  double mean = 0.0;
  double sigma = 0.0;
};

struct NoiseCharacterization {
  std::array<AxisStats, 3> axes{};
  double isotropic_sigma = 0.0;
  std::size_t n = 0;
};

/// Φ = P(latent tower stable | observation) by importance sampling.
double predict_stability(const task::Observation& observation, const task::NoiseParams& noise,
                         std::size_t n_samples, std::uint64_t seed, std::size_t workers = 1);

/// Inclusive threshold: phi >= tau predicts stable.
bool classify(double phi, double tau);

Confusion confusion_at(const std::vector<ScoredSample>& samples, double tau);

ClassifierReport evaluate_classifier(const std::vector<ScoredSample>& samples, double tau);

/// Threshold maximizing TPR - FPR over {0, 1} and midpoints between adjacent
/// distinct scores; ties go to the larger threshold. Throws NoThreshold on
/// single-class input.
double youden_threshold(const std::vector<ScoredSample>& samples);

/// Per-axis mean and sample standard deviation of estimate - truth.
NoiseCharacterization characterize_noise(const std::vector<std::pair<Vec3, Vec3>>& pairs);

void write_roc_csv(std::ostream& os, const std::vector<RocPoint>& points);
void write_pr_csv(std::ostream& os, const std::vector<PrPoint>& points);

}  // namespace cobra::metrics
