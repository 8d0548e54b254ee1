#include "mfl/tune.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "mfl/errors.hpp"
#include "mfl/forest.hpp"
#include "mfl/metrics.hpp"
#include "mfl/rng.hpp"

namespace mfl {

namespace {

struct Params {
  double alpha;
  double gamma;
  int n_trees;
};

double clamp_into(double v, double lo, double hi) { return std::clamp(v, lo, hi); }

std::vector<double> normalized(const SearchSpace& s, const Params& p) {
  auto scale = [](double v, double lo, double hi) {
    return hi > lo ? (v - lo) / (hi - lo) : 0.0;
  };
  return {scale(p.alpha, s.alpha_lo, s.alpha_hi), scale(p.gamma, s.gamma_lo, s.gamma_hi),
          scale(p.n_trees, s.trees_lo, s.trees_hi)};
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.141592653589793238462643383);
}

// Gaussian-process surrogate with an RBF kernel on the normalized box and
// expected improvement over a random candidate pool.
Params propose_ei(const SearchSpace& space, const std::vector<Params>& seen,
                  const std::vector<double>& scores, Rng& rng) {
  const std::size_t n = seen.size();
  const double ell2 = 2.0 * 0.25 * 0.25;
  const double noise = 1e-4;

  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  double sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 1.0;
  if (sd < 1e-12) sd = 1.0;

  std::vector<std::vector<double>> x(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = normalized(space, seen[i]);
    y[i] = (scores[i] - mean) / sd;
  }

  // Cholesky of K + noise*I
  std::vector<double> chol(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double k = std::exp(-sq_dist(x[i], x[j]) / ell2);
      if (i == j) k += noise + 1e-8;
      double sum = k;
      for (std::size_t t = 0; t < j; ++t) sum -= chol[i * n + t] * chol[j * n + t];
      chol[i * n + j] = i == j ? std::sqrt(std::max(sum, 1e-12))
                               : sum / chol[j * n + j];
    }
  }
  // alpha = K^-1 y via two triangular solves
  std::vector<double> tmp(n), alpha_vec(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = y[i];
    for (std::size_t t = 0; t < i; ++t) sum -= chol[i * n + t] * tmp[t];
    tmp[i] = sum / chol[i * n + i];
  }
  for (std::size_t ii = n; ii > 0; --ii) {
    const std::size_t i = ii - 1;
    double sum = tmp[i];
    for (std::size_t t = i + 1; t < n; ++t) sum -= chol[t * n + i] * alpha_vec[t];
    alpha_vec[i] = sum / chol[i * n + i];
  }

  double best_y = y[0];
  for (double v : y) best_y = std::max(best_y, v);
  const double xi = 0.01;

  Params best_candidate{space.alpha_lo, space.gamma_lo, space.trees_lo};
  double best_ei = -1.0;
  std::vector<double> kvec(n), v(n);
  for (int c = 0; c < 256; ++c) {
    Params cand{rng.next_real(space.alpha_lo, space.alpha_hi),
                rng.next_real(space.gamma_lo, space.gamma_hi),
                static_cast<int>(rng.next_int(space.trees_lo, space.trees_hi))};
    const auto xc = normalized(space, cand);
    for (std::size_t i = 0; i < n; ++i) kvec[i] = std::exp(-sq_dist(x[i], xc) / ell2);
    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu += kvec[i] * alpha_vec[i];
    for (std::size_t i = 0; i < n; ++i) {
      double sum = kvec[i];
      for (std::size_t t = 0; t < i; ++t) sum -= chol[i * n + t] * v[t];
      v[i] = sum / chol[i * n + i];
    }
    double var_c = 1.0 + noise;
    for (std::size_t i = 0; i < n; ++i) var_c -= v[i] * v[i];
    const double sigma = std::sqrt(std::max(var_c, 1e-12));
    const double improve = mu - best_y - xi;
    const double zScore = improve / sigma;
    const double ei = improve * normal_cdf(zScore) + sigma * normal_pdf(zScore);
    if (ei > best_ei) {
      best_ei = ei;
      best_candidate = cand;
    }
  }
  return best_candidate;
}

}  // namespace

void SearchSpace::validate() const {
  if (!(alpha_lo > 0.0 && alpha_hi < 1.0 && alpha_lo <= alpha_hi)) {
    throw ConfigError("SearchSpace: alpha range must sit inside (0, 1)");
  }
  if (!(gamma_lo >= 0.0 && gamma_lo <= gamma_hi)) {
    throw ConfigError("SearchSpace: gamma range must be non-empty and >= 0");
  }
  if (!(trees_lo >= 1 && trees_lo <= trees_hi)) {
    throw ConfigError("SearchSpace: tree range must be non-empty and >= 1");
  }
  if (budget < 1) throw ConfigError("SearchSpace: budget must be >= 1");
}

TuneResult tune(const Dataset& train, const SearchSpace& space, std::uint64_t rng_seed) {
  space.validate();

  const SplitPair split =
      train_test_split(train, 0.8, Rng::derive(rng_seed, 1), /*stratified=*/true);

  // With alpha and gamma pinned to points the space is finite in n_trees.
  int n_trials = space.budget;
  const bool finite_space =
      space.alpha_lo == space.alpha_hi && space.gamma_lo == space.gamma_hi;
  if (finite_space) {
    n_trials = std::min(space.budget, space.trees_hi - space.trees_lo + 1);
  }

  std::vector<Params> params;
  params.reserve(static_cast<std::size_t>(n_trials));
  params.push_back({clamp_into(0.95, space.alpha_lo, space.alpha_hi),
                    clamp_into(2.0, space.gamma_lo, space.gamma_hi),
                    std::clamp(20, space.trees_lo, space.trees_hi)});

  Rng rng(Rng::derive(rng_seed, 2));
  if (finite_space) {
    // enumerate distinct tree counts, ascending, skipping the default trial
    for (int m = space.trees_lo;
         m <= space.trees_hi && params.size() < static_cast<std::size_t>(n_trials); ++m) {
      if (m == params[0].n_trees) continue;
      params.push_back({params[0].alpha, params[0].gamma, m});
    }
  } else if (space.strategy == SearchSpace::Strategy::random) {
    while (params.size() < static_cast<std::size_t>(n_trials)) {
      params.push_back({rng.next_real(space.alpha_lo, space.alpha_hi),
                        rng.next_real(space.gamma_lo, space.gamma_hi),
                        static_cast<int>(rng.next_int(space.trees_lo, space.trees_hi))});
    }
  }
  // expected_improvement proposals are generated lazily after each result

  TuneResult result;
  std::vector<double> scores;
  double best = -1.0;
  std::size_t best_trial = 0;

  for (std::size_t t = 0; t < static_cast<std::size_t>(n_trials); ++t) {
    if (t >= params.size()) {
      // surrogate-guided proposal from everything observed so far
      params.push_back(propose_ei(space, params, scores, rng));
    }
    const Params& p = params[t];

    const auto t0 = std::chrono::steady_clock::now();
    FitConfig cfg;
    cfg.n_trees = p.n_trees;
    cfg.loss_spec = LossSpec::focal(p.alpha, p.gamma);
    cfg.rng_seed = Rng::derive(rng_seed, 100 + t);
    const ForestModel model = fit_mfl_forest(split.train, cfg);
    const auto probs = predict_matrix_proba(model, split.test);

    double score = 0.0;
    if (space.metric == SearchSpace::Metric::auc) {
      score = auc(probs, split.test.labels());
    } else {
      std::vector<std::uint8_t> pred(probs.size());
      for (std::size_t i = 0; i < probs.size(); ++i) pred[i] = probs[i] >= 0.5 ? 1 : 0;
      score = accuracy_recall(pred, split.test.labels()).second;
    }
    const auto t1 = std::chrono::steady_clock::now();
    const double seconds = std::chrono::duration<double>(t1 - t0).count();

    result.trials.push_back({p.alpha, p.gamma, p.n_trees, score, seconds});
    scores.push_back(score);
    if (score > best) {  // strictly greater: ties go to the earliest trial
      best = score;
      best_trial = t;
    }
  }

  const Params& winner = params[best_trial];
  result.alpha = winner.alpha;
  result.gamma = winner.gamma;
  result.n_trees = winner.n_trees;
  result.best_score = best;
  return result;
}

std::string trials_csv(const TuneResult& result) {
  std::string out = "trial,alpha,gamma,M,val_auc,seconds\n";
  char buf[256];
  for (std::size_t t = 0; t < result.trials.size(); ++t) {
    const auto& r = result.trials[t];
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%d,%.17g,%.6f\n", t + 1, r.alpha,
                  r.gamma, r.n_trees, r.validation_score, r.seconds);
    out += buf;
  }
  return out;
}

void write_trials_csv(const TuneResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write trial log: " + path);
  out << trials_csv(result);
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace mfl
