#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace mfl {

struct MetricsReport {
  double accuracy = 0.0;
  double recall = 0.0;
  double auc = 0.0;
  double ari = 0.0;
  std::size_t n_test = 0;
  double threshold_used = 0.5;
};

/// Mann-Whitney AUC: over all positive/negative pairs, credit 1 when the
/// positive scores higher, 0.5 on ties. Requires both classes.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Adjusted Rand index between two binary partitions via the 2x2
/// contingency table; 0 when the correction denominator vanishes.
double ari(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth);

/// (accuracy, recall). Recall requires at least one positive in truth.
std::pair<double, double> accuracy_recall(std::span<const std::uint8_t> pred,
                                          std::span<const std::uint8_t> truth);

/// All four metrics from scores, thresholding at `threshold` (ties go to 1).
MetricsReport evaluate(std::span<const double> scores,
                       std::span<const std::uint8_t> truth,
                       double threshold = 0.5);

}  // namespace mfl
