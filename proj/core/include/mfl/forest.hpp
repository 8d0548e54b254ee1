#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfl/criterion.hpp"
#include "mfl/dataset.hpp"
#include "mfl/loss.hpp"
#include "mfl/tree.hpp"

namespace mfl {

enum class Aggregation { weighted, vote, mean };

const char* to_string(Aggregation a);

struct FitConfig {
  int n_trees = 20;
  TreeParams tree_params;
  LossSpec loss_spec = LossSpec::focal(0.95, 2.0);
  std::uint64_t rng_seed = 0;
  ComplexityMode complexity_mode = ComplexityMode::leaves;
  Aggregation aggregation = Aggregation::weighted;
  std::vector<double> init_weights;  // empty: uniform
  /// Use floor(sqrt(n_trees)) instead of floor(sqrt(p)) as the per-split
  /// feature subset size.
  bool sqrt_trees_features = false;
  OptimizeControls optimize = {};
};

/// Bagged ensemble of decision trees combined through a weight vector.
/// vote/mean models carry uniform weights.
class ForestModel {
 public:
  ForestModel(std::vector<TreeModel> trees, WeightVector weights,
              Aggregation aggregation, std::optional<LossSpec> loss_spec_used,
              ComplexityMode complexity_mode);

  const std::vector<TreeModel>& trees() const { return trees_; }
  const WeightVector& weights() const { return weights_; }
  Aggregation aggregation() const { return aggregation_; }
  const std::optional<LossSpec>& loss_spec_used() const { return loss_spec_used_; }
  ComplexityMode complexity_mode() const { return complexity_mode_; }
  std::size_t n_trees() const { return trees_.size(); }
  std::size_t n_features() const { return n_features_; }

 private:
  std::vector<TreeModel> trees_;
  WeightVector weights_;
  Aggregation aggregation_;
  std::optional<LossSpec> loss_spec_used_;
  ComplexityMode complexity_mode_;
  std::size_t n_features_ = 0;
};

/// Per-tree probabilities of the whole dataset plus labels and k_m counts.
PredictionMatrix build_prediction_matrix(std::span<const TreeModel> trees,
                                         const Dataset& d, ComplexityMode mode);

/// Fits cfg.n_trees trees on bootstrap samples (per-tree seeds derived from
/// cfg.rng_seed) and, for weighted aggregation, solves for the weights that
/// minimize the penalized criterion on the full training set.
ForestModel fit_forest(const Dataset& train, const FitConfig& cfg);

/// fit_forest with weighted aggregation enforced.
ForestModel fit_mfl_forest(const Dataset& train, const FitConfig& cfg);

/// weighted/mean: sum_m w_m * tree_m(x); vote: fraction of trees whose
/// 0.5-thresholded prediction is 1.
double predict_proba(const ForestModel& fm, std::span<const double> x);

std::vector<double> predict_matrix_proba(const ForestModel& fm,
                                         std::span<const double> rows,
                                         std::size_t n_cols);
std::vector<double> predict_matrix_proba(const ForestModel& fm, const Dataset& d);

/// Elementwise probability >= threshold -> 1 (ties included).
std::vector<std::uint8_t> predict_labels(const ForestModel& fm,
                                         std::span<const double> rows,
                                         std::size_t n_cols,
                                         double threshold = 0.5);
std::vector<std::uint8_t> predict_labels(const ForestModel& fm, const Dataset& d,
                                         double threshold = 0.5);

/// Binary model artifact: magic "MFLF", format version, tree records with
/// nodes flattened pre-order, the weight vector, and a trailing CRC-32.
void save_model(const ForestModel& fm, const std::string& path);
ForestModel load_model(const std::string& path);

}  // namespace mfl
