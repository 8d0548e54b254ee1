#include "mfl/criterion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mfl {

namespace {

void check_weights_dim(const PredictionMatrix& pm, std::span<const double> w) {
  if (w.size() != pm.n_models) {
    throw std::invalid_argument("criterion: weight vector length does not match models");
  }
}

double penalty_factor_complexity(const PredictionMatrix& pm, std::span<const double> w) {
  double k_weighted = 0.0;
  for (std::size_t m = 0; m < pm.n_models; ++m) {
    k_weighted += w[m] * static_cast<double>(pm.complexities[m]);
  }
  return 1.0 + k_weighted;  // 1 + sum_m w_m k_m
}

double resolved_sigma2(const PredictionMatrix& pm, const CriterionOptions& opts,
                       double s) {
  if (!opts.freeze_sigma) return s / static_cast<double>(pm.n_rows);
  if (std::isnan(opts.frozen_sigma2)) {
    throw std::invalid_argument("criterion: freeze_sigma set without a frozen value");
  }
  return opts.frozen_sigma2;
}

}  // namespace

WeightVector WeightVector::uniform(std::size_t size) {
  if (size == 0) throw std::invalid_argument("WeightVector: size must be >= 1");
  return WeightVector(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

WeightVector WeightVector::checked(std::vector<double> w) {
  if (w.empty()) throw std::invalid_argument("WeightVector: size must be >= 1");
  double sum = 0.0;
  for (double& x : w) {
    if (x < 0.0) {
      if (x < -1e-12) throw std::invalid_argument("WeightVector: negative weight");
      x = 0.0;
    }
    if (x > 1.0 + 1e-9) throw std::invalid_argument("WeightVector: weight above 1");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("WeightVector: weights must sum to 1");
  }
  return WeightVector(std::move(w));
}

void PredictionMatrix::validate() const {
  if (n_rows == 0 || n_models == 0) {
    throw std::invalid_argument("PredictionMatrix: empty dimensions");
  }
  if (values.size() != n_rows * n_models) {
    throw std::invalid_argument("PredictionMatrix: values size mismatch");
  }
  if (labels.size() != n_rows) {
    throw std::invalid_argument("PredictionMatrix: labels size mismatch");
  }
  if (complexities.size() != n_models) {
    throw std::invalid_argument("PredictionMatrix: complexities size mismatch");
  }
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("PredictionMatrix: entry outside [0, 1]");
    }
  }
  for (std::uint8_t y : labels) {
    if (y > 1) throw std::invalid_argument("PredictionMatrix: labels must be 0 or 1");
  }
  for (int k : complexities) {
    if (k < 1) throw std::invalid_argument("PredictionMatrix: complexities must be >= 1");
  }
}

double ensemble_prob(const PredictionMatrix& pm, std::span<const double> w,
                     std::size_t row) {
  check_weights_dim(pm, w);
  if (row >= pm.n_rows) throw std::invalid_argument("ensemble_prob: row out of range");
  const double* r = pm.values.data() + row * pm.n_models;
  double f = 0.0;
  for (std::size_t m = 0; m < pm.n_models; ++m) f += w[m] * r[m];
  return std::clamp(f, 0.0, 1.0);
}

double sample_loss(const PredictionMatrix& pm, std::span<const double> w,
                   const LossSpec& spec) {
  check_weights_dim(pm, w);
  double s = 0.0;
  for (std::size_t i = 0; i < pm.n_rows; ++i) {
    s += loss_value(spec, pm.labels[i], ensemble_prob(pm, w, i));
  }
  return s;
}

double sigma_hat(const PredictionMatrix& pm, std::span<const double> w,
                 const LossSpec& spec) {
  return sample_loss(pm, w, spec) / static_cast<double>(pm.n_rows);
}

double criterion(const PredictionMatrix& pm, std::span<const double> w,
                 const LossSpec& spec, const CriterionOptions& opts) {
  const double s = sample_loss(pm, w, spec);
  if (!opts.penalize) return s;
  const double sigma2 = resolved_sigma2(pm, opts, s);
  return s + 2.0 * sigma2 * penalty_factor_complexity(pm, w);
}

std::vector<double> criterion_grad(const PredictionMatrix& pm,
                                   std::span<const double> w, const LossSpec& spec,
                                   const CriterionOptions& opts) {
  check_weights_dim(pm, w);
  if (!is_differentiable(spec)) {
    throw std::invalid_argument("criterion_grad: loss is not differentiable");
  }
  const std::size_t n = pm.n_rows;
  const std::size_t M = pm.n_models;

  // dS/dw_m = sum_i dloss/df(y_i, f_i) * pm(i, m)
  std::vector<double> grad_s(M, 0.0);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = ensemble_prob(pm, w, i);
    s += loss_value(spec, pm.labels[i], f);
    const double g = loss_grad_f(spec, pm.labels[i], f);
    const double* r = pm.values.data() + i * M;
    for (std::size_t m = 0; m < M; ++m) grad_s[m] += g * r[m];
  }
  if (!opts.penalize) return grad_s;

  std::vector<double> grad(M);
  if (opts.freeze_sigma) {
    const double sigma2 = resolved_sigma2(pm, opts, s);
    for (std::size_t m = 0; m < M; ++m) {
      grad[m] = grad_s[m] + 2.0 * sigma2 * static_cast<double>(pm.complexities[m]);
    }
    return grad;
  }
  // C = S * (1 + 2*(1 + K)/n) with K = sum w_m k_m:
  // dC/dw_m = dS/dw_m * (1 + 2*(1 + K)/n) + S * 2*k_m/n
  const double factor =
      1.0 + 2.0 * penalty_factor_complexity(pm, w) / static_cast<double>(n);
  for (std::size_t m = 0; m < M; ++m) {
    grad[m] = grad_s[m] * factor +
              s * (2.0 * static_cast<double>(pm.complexities[m]) / static_cast<double>(n));
  }
  return grad;
}

WeightVector project_simplex(std::span<const double> v) {
  const std::size_t M = v.size();
  if (M == 0) throw std::invalid_argument("project_simplex: empty vector");
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0;
  double theta = 0.0;
  std::size_t rho = 0;
  double rho_cumsum = 0.0;
  for (std::size_t j = 0; j < M; ++j) {
    cumsum += u[j];
    if (u[j] - (cumsum - 1.0) / static_cast<double>(j + 1) > 0.0) {
      rho = j + 1;
      rho_cumsum = cumsum;
    }
  }
  if (rho == 0) {
    // all mass below the threshold (can only happen with degenerate input);
    // fall back to the top coordinate
    rho = 1;
    rho_cumsum = u[0];
  }
  theta = (rho_cumsum - 1.0) / static_cast<double>(rho);
  std::vector<double> w(M);
  double sum = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    w[m] = std::max(v[m] - theta, 0.0);
    sum += w[m];
  }
  // large-magnitude inputs cancel against theta and can leave the sum a few
  // ulps-of-theta away from 1; rescale to restore feasibility exactly
  if (sum > 0.0) {
    for (double& x : w) x /= sum;
  } else {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(M));
  }
  return WeightVector::checked(std::move(w));
}

namespace {

struct SolveState {
  std::vector<double> w;
  double value = 0.0;  // unnormalized criterion at w
};

// Projected gradient descent with Armijo backtracking on the criterion
// normalized by its value at the start point. The normalization makes the
// iterate path invariant under positive rescaling of the loss.
SolveState projected_gradient_descent(const PredictionMatrix& pm, const LossSpec& spec,
                                      const CriterionOptions& opts,
                                      std::vector<double> start, int budget, double tol,
                                      std::vector<double>* trace) {
  // a NaN separates the accepted-value runs of consecutive solver starts
  if (trace) trace->push_back(std::numeric_limits<double>::quiet_NaN());
  const double start_value = criterion(pm, start, spec, opts);
  if (!(start_value > 0.0) || !std::isfinite(start_value)) {
    return SolveState{std::move(start), start_value};  // already at the floor
  }
  const double scale = start_value;
  std::vector<double> w = std::move(start);
  double value = 1.0;  // normalized

  for (int iter = 0; iter < budget; ++iter) {
    std::vector<double> g = criterion_grad(pm, w, spec, opts);
    for (double& x : g) x /= scale;

    double step = 1.0;
    bool accepted = false;
    std::vector<double> candidate;
    double candidate_value = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      std::vector<double> shifted(w.size());
      for (std::size_t m = 0; m < w.size(); ++m) shifted[m] = w[m] - step * g[m];
      candidate = project_simplex(shifted).values();
      candidate_value = criterion(pm, candidate, spec, opts) / scale;
      double along = 0.0;  // g . (w - candidate), >= 0 for projection steps
      for (std::size_t m = 0; m < w.size(); ++m) along += g[m] * (w[m] - candidate[m]);
      if (std::isfinite(candidate_value) &&
          candidate_value <= value - 1e-4 * along) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const double decrease = value - candidate_value;
    w = std::move(candidate);
    value = candidate_value;
    if (trace) trace->push_back(value * scale);
    if (decrease < tol) break;
  }
  return SolveState{std::move(w), value * scale};
}

// Derivative-free pairwise mass transfer with a shrinking step, for losses
// without a usable gradient.
SolveState mass_transfer_search(const PredictionMatrix& pm, const LossSpec& spec,
                                const CriterionOptions& opts, std::vector<double> start,
                                int budget, std::vector<double>* trace) {
  if (trace) trace->push_back(std::numeric_limits<double>::quiet_NaN());
  const std::size_t M = start.size();
  std::vector<double> w = std::move(start);
  double value = criterion(pm, w, spec, opts);
  for (double step = 0.25; step >= 1e-4; step *= 0.5) {
    bool improved = true;
    int sweeps = 0;
    while (improved && sweeps < budget) {
      improved = false;
      ++sweeps;
      for (std::size_t i = 0; i < M; ++i) {
        if (w[i] <= 0.0) continue;
        const double moved = std::min(step, w[i]);
        for (std::size_t j = 0; j < M; ++j) {
          if (j == i) continue;
          std::vector<double> candidate = w;
          candidate[i] -= moved;
          candidate[j] += moved;
          const double candidate_value = criterion(pm, candidate, spec, opts);
          if (candidate_value < value - 1e-12 * (1.0 + std::abs(value))) {
            w = std::move(candidate);
            value = candidate_value;
            if (trace) trace->push_back(value);
            improved = true;
            break;  // re-read w[i] after the transfer
          }
        }
      }
    }
  }
  return SolveState{std::move(w), value};
}

}  // namespace

WeightVector optimize_weights(const PredictionMatrix& pm, const LossSpec& spec,
                              const WeightVector& init,
                              const OptimizeControls& controls) {
  pm.validate();
  spec.validate();
  if (init.size() != pm.n_models) {
    throw std::invalid_argument("optimize_weights: init length does not match models");
  }
  CriterionOptions opts = controls.criterion_opts;
  if (opts.freeze_sigma && std::isnan(opts.frozen_sigma2)) {
    opts.frozen_sigma2 = sigma_hat(pm, init.values(), spec);
  }
  const std::size_t M = pm.n_models;
  const int budget = std::max(1, controls.budget);

  auto eval = [&](const std::vector<double>& w) {
    return criterion(pm, w, spec, opts);
  };

  // Candidate fallback: the init and every vertex are always evaluated, so
  // the result never loses to the best single model or the start point.
  std::vector<double> best_w = init.values();
  double best_value = eval(best_w);
  std::vector<double> vertex_values(M);
  for (std::size_t m = 0; m < M; ++m) {
    std::vector<double> vertex(M, 0.0);
    vertex[m] = 1.0;
    vertex_values[m] = eval(vertex);
    if (vertex_values[m] < best_value) {
      best_value = vertex_values[m];
      best_w = std::move(vertex);
    }
  }

  if (M == 1) return WeightVector::checked({1.0});

  auto consider = [&](SolveState s) {
    if (s.value < best_value) {
      best_value = s.value;
      best_w = std::move(s.w);
    }
  };

  if (is_differentiable(spec)) {
    // Deterministic multi-start: init, uniform, and vertex starts (all of
    // them while M is small, otherwise the most promising few).
    std::vector<std::vector<double>> starts;
    starts.push_back(init.values());
    const std::vector<double> uniform(M, 1.0 / static_cast<double>(M));
    if (uniform != init.values()) starts.push_back(uniform);
    std::vector<std::size_t> order(M);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (M > 8) {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return vertex_values[a] < vertex_values[b];
      });
      order.resize(3);
    }
    for (std::size_t m : order) {
      std::vector<double> vertex(M, 0.0);
      vertex[m] = 1.0;
      starts.push_back(std::move(vertex));
    }
    for (auto& start : starts) {
      consider(projected_gradient_descent(pm, spec, opts, std::move(start), budget,
                                          controls.tol, controls.trace));
    }
  } else {
    consider(mass_transfer_search(pm, spec, opts, best_w, budget, controls.trace));
  }

  return WeightVector::checked(std::move(best_w));
}

}  // namespace mfl
