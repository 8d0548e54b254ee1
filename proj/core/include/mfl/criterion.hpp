#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "mfl/loss.hpp"

namespace mfl {

/// Weights on the unit simplex: every entry in [0, 1], sum 1 within 1e-9.
class WeightVector {
 public:
  static WeightVector uniform(std::size_t size);
  /// Validates the simplex invariants; entries in [-1e-12, 0) are clamped
  /// to 0. Throws std::invalid_argument otherwise.
  static WeightVector checked(std::vector<double> w);

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t m) const { return w_[m]; }
  const std::vector<double>& values() const { return w_; }

 private:
  explicit WeightVector(std::vector<double> w) : w_(std::move(w)) {}
  std::vector<double> w_;
};

/// Per-sample probabilities of M base models on one dataset, plus the
/// labels and the per-model complexity counts k_m.
struct PredictionMatrix {
  std::size_t n_rows = 0;
  std::size_t n_models = 0;
  std::vector<double> values;         // row-major n x M, entries in [0, 1]
  std::vector<std::uint8_t> labels;   // length n, {0, 1}
  std::vector<int> complexities;      // length M, k_m >= 1

  double at(std::size_t row, std::size_t model) const {
    return values[row * n_models + model];
  }
  /// Throws std::invalid_argument on shape or range violations.
  void validate() const;
};

/// Variations of the weighting criterion. The default is the full
/// penalized form with the plug-in variance recomputed at every weight
/// vector. `freeze_sigma` holds the variance fixed at `frozen_sigma2`
/// (filled in from the solver's initial point when left NaN).
struct CriterionOptions {
  bool penalize = true;
  bool freeze_sigma = false;
  double frozen_sigma2 = std::numeric_limits<double>::quiet_NaN();
};

/// Blended probability of row i: sum_m w_m * pm(i, m).
double ensemble_prob(const PredictionMatrix& pm, std::span<const double> w,
                     std::size_t row);

/// S(w) = sum_i loss(y_i, f_i(w)) at the blended probabilities.
double sample_loss(const PredictionMatrix& pm, std::span<const double> w,
                   const LossSpec& spec);

/// Plug-in variance: S(w) / n.
double sigma_hat(const PredictionMatrix& pm, std::span<const double> w,
                 const LossSpec& spec);

/// C(w) = S(w) + 2*sigma^2(w)*(1 + sum_m w_m k_m). With the plug-in
/// variance this equals S(w) * (1 + 2*(1 + sum_m w_m k_m)/n).
double criterion(const PredictionMatrix& pm, std::span<const double> w,
                 const LossSpec& spec, const CriterionOptions& opts = {});

/// dC/dw_m; matches central finite differences for differentiable losses.
std::vector<double> criterion_grad(const PredictionMatrix& pm,
                                   std::span<const double> w,
                                   const LossSpec& spec,
                                   const CriterionOptions& opts = {});

/// Euclidean projection onto the unit simplex (sorted-threshold algorithm).
WeightVector project_simplex(std::span<const double> v);

struct OptimizeControls {
  int budget = 500;    // iteration cap per solver start / sweep cap
  double tol = 1e-8;   // stop when the relative criterion decrease drops below
  CriterionOptions criterion_opts = {};
  std::vector<double>* trace = nullptr;  // accepted criterion values, if set
};

/// Minimizes the criterion over the simplex. Differentiable losses run
/// projected gradient descent with Armijo backtracking from several
/// deterministic starts; zero_one/hamming run a derivative-free pairwise
/// mass-transfer search. The returned weights never score worse than the
/// best of {init, all vertices}.
WeightVector optimize_weights(const PredictionMatrix& pm, const LossSpec& spec,
                              const WeightVector& init,
                              const OptimizeControls& controls = {});

}  // namespace mfl
