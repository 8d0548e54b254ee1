#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mfl/dataset.hpp"

namespace mfl {

struct IsoTreeNode {
  bool external = true;
  int feature = -1;      // internal
  double split = 0.0;    // internal; x < split routes left
  int left = -1;
  int right = -1;
  int size = 0;          // external: training samples that ended here
};

/// Isolation forest: random split feature, uniform random split value,
/// height limit ceil(log2(subsample_size)).
class IsoForestModel {
 public:
  IsoForestModel(std::vector<std::vector<IsoTreeNode>> trees, int subsample_size,
                 std::size_t n_features);

  const std::vector<std::vector<IsoTreeNode>>& trees() const { return trees_; }
  int subsample_size() const { return subsample_size_; }
  std::size_t n_features() const { return n_features_; }

  /// Anomaly score in (0, 1): 2^(-E[h(x)] / c(subsample_size)). Higher is
  /// more anomalous.
  double score(std::span<const double> x) const;

 private:
  std::vector<std::vector<IsoTreeNode>> trees_;
  int subsample_size_ = 0;
  std::size_t n_features_ = 0;
  std::vector<double> path_norm_;  // c(m) table for m in [0, subsample_size]
};

/// Average unsuccessful-search path length c(m) of a binary search tree
/// over m points: 2*H(m-1) - 2*(m-1)/m with exact harmonic numbers;
/// c(1) = c(0) = 0, c(2) = 1.
double average_path_length(int m);

IsoForestModel fit_iforest(const Dataset& d, int n_trees = 100,
                           int subsample_size = 256, std::uint64_t rng_seed = 0);

double score_iforest(const IsoForestModel& m, std::span<const double> x);

/// Fraction of the k nearest training points (standardized Euclidean
/// distance, ties by lower index) labeled 1.
double knn_predict_proba(const Dataset& train, std::span<const double> x, int k = 5);

/// L2-penalized logistic regression on standardized features.
class LogisticModel {
 public:
  LogisticModel(std::vector<double> coefficients, double intercept,
                std::vector<double> means, std::vector<double> stddevs);

  const std::vector<double>& coefficients() const { return coefficients_; }
  double intercept() const { return intercept_; }

  double predict_proba(std::span<const double> x) const;

 private:
  std::vector<double> coefficients_;
  double intercept_ = 0.0;
  std::vector<double> means_;
  std::vector<double> stddevs_;
};

/// Gradient descent with backtracking on the penalized negative
/// log-likelihood until the gradient infinity-norm drops below tol or
/// max_iter is reached. `nll_trace`, when set, records the accepted
/// objective values.
LogisticModel fit_logistic(const Dataset& d, double l2 = 1e-4, int max_iter = 500,
                           double tol = 1e-6, std::vector<double>* nll_trace = nullptr);

}  // namespace mfl
