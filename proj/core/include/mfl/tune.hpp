#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfl/dataset.hpp"

namespace mfl {

/// Hyperparameter search box over (alpha, gamma, n_trees).
struct SearchSpace {
  double alpha_lo = 0.5, alpha_hi = 0.99;
  double gamma_lo = 0.0, gamma_hi = 5.0;
  int trees_lo = 10, trees_hi = 200;
  int budget = 20;

  enum class Strategy { random, expected_improvement };
  Strategy strategy = Strategy::random;

  enum class Metric { auc, recall };
  Metric metric = Metric::auc;

  /// Throws ConfigError on empty ranges or budget < 1.
  void validate() const;
};

struct TrialRecord {
  double alpha = 0.0;
  double gamma = 0.0;
  int n_trees = 0;
  double validation_score = 0.0;
  double seconds = 0.0;
};

struct TuneResult {
  double alpha = 0.0;
  double gamma = 0.0;
  int n_trees = 0;
  double best_score = 0.0;
  std::vector<TrialRecord> trials;
};

/// Evaluates candidates on an internal stratified 80/20 split of `train`.
/// Trial 1 is always (0.95, 2, 20) clamped into the space; the remaining
/// candidates come from the configured strategy. Returns the argmax of the
/// validation metric, ties going to the earliest trial. Deterministic given
/// the seed.
TuneResult tune(const Dataset& train, const SearchSpace& space,
                std::uint64_t rng_seed);

/// Trial log as CSV: trial,alpha,gamma,M,val_auc,seconds.
std::string trials_csv(const TuneResult& result);
void write_trials_csv(const TuneResult& result, const std::string& path);

}  // namespace mfl
