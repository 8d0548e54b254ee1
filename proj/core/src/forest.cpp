#include "mfl/forest.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mfl/errors.hpp"
#include "mfl/rng.hpp"

namespace mfl {

const char* to_string(Aggregation a) {
  switch (a) {
    case Aggregation::weighted: return "weighted";
    case Aggregation::vote: return "vote";
    case Aggregation::mean: return "mean";
  }
  return "unknown";
}

ForestModel::ForestModel(std::vector<TreeModel> trees, WeightVector weights,
                         Aggregation aggregation, std::optional<LossSpec> loss_spec_used,
                         ComplexityMode complexity_mode)
    : trees_(std::move(trees)),
      weights_(std::move(weights)),
      aggregation_(aggregation),
      loss_spec_used_(std::move(loss_spec_used)),
      complexity_mode_(complexity_mode) {
  if (trees_.empty()) throw std::invalid_argument("ForestModel: needs at least one tree");
  if (weights_.size() != trees_.size()) {
    throw std::invalid_argument("ForestModel: weights length does not match trees");
  }
  n_features_ = trees_.front().n_features();
  for (const auto& t : trees_) {
    if (t.n_features() != n_features_) {
      throw std::invalid_argument("ForestModel: trees disagree on feature arity");
    }
  }
}

PredictionMatrix build_prediction_matrix(std::span<const TreeModel> trees,
                                         const Dataset& d, ComplexityMode mode) {
  if (trees.empty()) throw std::invalid_argument("build_prediction_matrix: no trees");
  PredictionMatrix pm;
  pm.n_rows = d.n_rows();
  pm.n_models = trees.size();
  pm.values.resize(pm.n_rows * pm.n_models);
  pm.labels = d.labels();
  pm.complexities.resize(pm.n_models);
  for (std::size_t m = 0; m < trees.size(); ++m) {
    pm.complexities[m] = complexity(trees[m], mode);
    for (std::size_t i = 0; i < pm.n_rows; ++i) {
      pm.values[i * pm.n_models + m] = trees[m].predict_proba(d.row(i));
    }
  }
  return pm;
}

ForestModel fit_forest(const Dataset& train, const FitConfig& cfg) {
  if (cfg.n_trees < 1) throw std::invalid_argument("fit_forest: n_trees must be >= 1");
  cfg.loss_spec.validate();
  const std::size_t n1 = train.count_label(1);
  if (n1 == 0 || n1 == train.n_rows()) {
    throw DataError("fit_forest: training data has a single class");
  }

  TreeParams params = cfg.tree_params;
  if (cfg.sqrt_trees_features) {
    const auto by_trees = static_cast<int>(
        std::floor(std::sqrt(static_cast<double>(cfg.n_trees))));
    params.max_features =
        std::clamp(by_trees, 1, static_cast<int>(train.n_cols()));
  }

  const auto M = static_cast<std::size_t>(cfg.n_trees);
  std::vector<TreeModel> trees;
  trees.reserve(M);
  for (std::size_t m = 0; m < M; ++m) {
    const auto boot_seed = Rng::derive(cfg.rng_seed, 2 * m);
    const auto tree_seed = Rng::derive(cfg.rng_seed, 2 * m + 1);
    const auto indices = bootstrap_sample(train.n_rows(), boot_seed);
    trees.push_back(fit_tree(train, indices, params, tree_seed));
  }

  WeightVector weights = WeightVector::uniform(M);
  std::optional<LossSpec> loss_used;
  if (cfg.aggregation == Aggregation::weighted) {
    const PredictionMatrix pm =
        build_prediction_matrix(trees, train, cfg.complexity_mode);
    const WeightVector init = cfg.init_weights.empty()
                                  ? WeightVector::uniform(M)
                                  : WeightVector::checked(cfg.init_weights);
    weights = optimize_weights(pm, cfg.loss_spec, init, cfg.optimize);
    loss_used = cfg.loss_spec;
  }
  return ForestModel(std::move(trees), std::move(weights), cfg.aggregation,
                     std::move(loss_used), cfg.complexity_mode);
}

ForestModel fit_mfl_forest(const Dataset& train, const FitConfig& cfg) {
  FitConfig weighted_cfg = cfg;
  weighted_cfg.aggregation = Aggregation::weighted;
  return fit_forest(train, weighted_cfg);
}

double predict_proba(const ForestModel& fm, std::span<const double> x) {
  if (x.size() != fm.n_features()) {
    throw std::invalid_argument("predict_proba: feature vector arity mismatch");
  }
  const auto& trees = fm.trees();
  if (fm.aggregation() == Aggregation::vote) {
    std::size_t yes = 0;
    for (const auto& t : trees) {
      if (t.predict_proba(x) >= 0.5) ++yes;
    }
    return static_cast<double>(yes) / static_cast<double>(trees.size());
  }
  // weighted and mean share one code path; mean models carry uniform weights
  double f = 0.0;
  for (std::size_t m = 0; m < trees.size(); ++m) {
    f += fm.weights()[m] * trees[m].predict_proba(x);
  }
  return std::clamp(f, 0.0, 1.0);
}

std::vector<double> predict_matrix_proba(const ForestModel& fm,
                                         std::span<const double> rows,
                                         std::size_t n_cols) {
  if (n_cols != fm.n_features() || rows.size() % n_cols != 0) {
    throw std::invalid_argument("predict_matrix_proba: matrix arity mismatch");
  }
  const std::size_t n = rows.size() / n_cols;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = predict_proba(fm, rows.subspan(i * n_cols, n_cols));
  }
  return out;
}

std::vector<double> predict_matrix_proba(const ForestModel& fm, const Dataset& d) {
  return predict_matrix_proba(fm, d.features(), d.n_cols());
}

std::vector<std::uint8_t> predict_labels(const ForestModel& fm,
                                         std::span<const double> rows,
                                         std::size_t n_cols, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("predict_labels: threshold must be in (0, 1)");
  }
  const auto probs = predict_matrix_proba(fm, rows, n_cols);
  std::vector<std::uint8_t> labels(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    labels[i] = probs[i] >= threshold ? 1 : 0;
  }
  return labels;
}

std::vector<std::uint8_t> predict_labels(const ForestModel& fm, const Dataset& d,
                                         double threshold) {
  return predict_labels(fm, d.features(), d.n_cols(), threshold);
}

}  // namespace mfl
