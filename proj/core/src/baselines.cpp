#include "mfl/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mfl/errors.hpp"
#include "mfl/rng.hpp"

namespace mfl {

namespace {

struct Standardization {
  std::vector<double> mean;
  std::vector<double> sd;
};

Standardization standardize_stats(const Dataset& d) {
  const std::size_t n = d.n_rows(), p = d.n_cols();
  Standardization s;
  s.mean.assign(p, 0.0);
  s.sd.assign(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) s.mean[j] += d.at(i, j);
  }
  for (double& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const double dv = d.at(i, j) - s.mean[j];
      s.sd[j] += dv * dv;
    }
  }
  for (double& v : s.sd) {
    v = std::sqrt(v / static_cast<double>(n));
    if (v < 1e-12) v = 1.0;  // constant feature
  }
  return s;
}

double sigmoid(double z) {
  if (z >= 0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow
double log1pexp(double z) {
  if (z > 35.0) return z;
  if (z < -35.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

}  // namespace

double average_path_length(int m) {
  if (m <= 1) return 0.0;
  double harmonic = 0.0;  // H(m-1), exact
  for (int i = 1; i <= m - 1; ++i) harmonic += 1.0 / static_cast<double>(i);
  return 2.0 * harmonic - 2.0 * static_cast<double>(m - 1) / static_cast<double>(m);
}

IsoForestModel::IsoForestModel(std::vector<std::vector<IsoTreeNode>> trees,
                               int subsample_size, std::size_t n_features)
    : trees_(std::move(trees)),
      subsample_size_(subsample_size),
      n_features_(n_features) {
  if (trees_.empty()) throw std::invalid_argument("IsoForestModel: no trees");
  path_norm_.resize(static_cast<std::size_t>(subsample_size_) + 1);
  for (int m = 0; m <= subsample_size_; ++m) {
    path_norm_[static_cast<std::size_t>(m)] = average_path_length(m);
  }
}

double IsoForestModel::score(std::span<const double> x) const {
  if (x.size() != n_features_) {
    throw std::invalid_argument("score_iforest: feature vector arity mismatch");
  }
  double total_path = 0.0;
  for (const auto& tree : trees_) {
    int at = 0;
    int depth = 0;
    while (!tree[static_cast<std::size_t>(at)].external) {
      const auto& node = tree[static_cast<std::size_t>(at)];
      at = x[static_cast<std::size_t>(node.feature)] < node.split ? node.left
                                                                  : node.right;
      ++depth;
    }
    const int size = tree[static_cast<std::size_t>(at)].size;
    total_path += static_cast<double>(depth) +
                  path_norm_[static_cast<std::size_t>(std::min(size, subsample_size_))];
  }
  const double mean_path = total_path / static_cast<double>(trees_.size());
  return std::pow(2.0, -mean_path / path_norm_[static_cast<std::size_t>(subsample_size_)]);
}

IsoForestModel fit_iforest(const Dataset& d, int n_trees, int subsample_size,
                           std::uint64_t rng_seed) {
  if (d.n_rows() < 2) throw DataError("fit_iforest: needs at least two samples");
  if (n_trees < 1) throw std::invalid_argument("fit_iforest: n_trees must be >= 1");
  if (subsample_size < 2) {
    throw std::invalid_argument("fit_iforest: subsample_size must be >= 2");
  }
  const std::size_t n = d.n_rows();
  const std::size_t p = d.n_cols();
  const auto psi = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(subsample_size), n));
  const int height_limit = static_cast<int>(
      std::ceil(std::log2(static_cast<double>(psi))));

  std::vector<std::vector<IsoTreeNode>> trees;
  trees.reserve(static_cast<std::size_t>(n_trees));
  for (int t = 0; t < n_trees; ++t) {
    Rng rng(Rng::derive(rng_seed, static_cast<std::uint64_t>(t)));
    auto sample = rng.sample_without_replacement(n, static_cast<std::size_t>(psi));

    std::vector<IsoTreeNode> nodes;
    struct Frame {
      std::size_t lo, hi;
      int depth;
      int parent;
      bool is_left;
    };
    std::vector<Frame> stack{{0, sample.size(), 0, -1, false}};
    while (!stack.empty()) {
      const Frame fr = stack.back();
      stack.pop_back();
      const int slot = static_cast<int>(nodes.size());
      nodes.emplace_back();
      if (fr.parent >= 0) {
        auto& parent = nodes[static_cast<std::size_t>(fr.parent)];
        (fr.is_left ? parent.left : parent.right) = slot;
      }
      const std::size_t size = fr.hi - fr.lo;

      auto make_external = [&] {
        IsoTreeNode& node = nodes[static_cast<std::size_t>(slot)];
        node.external = true;
        node.size = static_cast<int>(size);
      };
      if (fr.depth >= height_limit || size <= 1) {
        make_external();
        continue;
      }

      // features with a non-degenerate value range in this node
      std::vector<std::size_t> candidates;
      std::vector<std::pair<double, double>> ranges(p);
      for (std::size_t j = 0; j < p; ++j) {
        double lo = d.at(sample[fr.lo], j), hi = lo;
        for (std::size_t i = fr.lo + 1; i < fr.hi; ++i) {
          const double v = d.at(sample[i], j);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        ranges[j] = {lo, hi};
        if (hi > lo) candidates.push_back(j);
      }
      if (candidates.empty()) {
        make_external();
        continue;
      }

      const std::size_t feature =
          candidates[static_cast<std::size_t>(rng.next_below(candidates.size()))];
      const auto [lo, hi] = ranges[feature];
      const double split = lo + rng.next_unit() * (hi - lo);
      auto mid = std::stable_partition(
          sample.begin() + static_cast<std::ptrdiff_t>(fr.lo),
          sample.begin() + static_cast<std::ptrdiff_t>(fr.hi),
          [&](std::size_t i) { return d.at(i, feature) < split; });
      const auto split_at = static_cast<std::size_t>(mid - sample.begin());
      if (split_at == fr.lo || split_at == fr.hi) {
        make_external();  // degenerate draw at the range edge
        continue;
      }

      IsoTreeNode& node = nodes[static_cast<std::size_t>(slot)];
      node.external = false;
      node.feature = static_cast<int>(feature);
      node.split = split;
      stack.push_back({split_at, fr.hi, fr.depth + 1, slot, false});
      stack.push_back({fr.lo, split_at, fr.depth + 1, slot, true});
    }
    trees.push_back(std::move(nodes));
  }
  return IsoForestModel(std::move(trees), psi, p);
}

double score_iforest(const IsoForestModel& m, std::span<const double> x) {
  return m.score(x);
}

double knn_predict_proba(const Dataset& train, std::span<const double> x, int k) {
  if (k < 1) throw std::invalid_argument("knn_predict_proba: k must be >= 1");
  if (static_cast<std::size_t>(k) > train.n_rows()) {
    throw std::invalid_argument("knn_predict_proba: k exceeds training size");
  }
  if (x.size() != train.n_cols()) {
    throw std::invalid_argument("knn_predict_proba: feature vector arity mismatch");
  }
  const auto stats = standardize_stats(train);
  const std::size_t n = train.n_rows(), p = train.n_cols();
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double dv = (train.at(i, j) - x[j]) / stats.sd[j];
      d2 += dv * dv;
    }
    dist[i] = {d2, i};
  }
  // ties on distance break toward the lower index
  std::sort(dist.begin(), dist.end());
  std::size_t positives = 0;
  for (int i = 0; i < k; ++i) {
    positives += train.label(dist[static_cast<std::size_t>(i)].second);
  }
  return static_cast<double>(positives) / static_cast<double>(k);
}

LogisticModel::LogisticModel(std::vector<double> coefficients, double intercept,
                             std::vector<double> means, std::vector<double> stddevs)
    : coefficients_(std::move(coefficients)),
      intercept_(intercept),
      means_(std::move(means)),
      stddevs_(std::move(stddevs)) {
  for (double c : coefficients_) {
    if (!std::isfinite(c)) throw std::invalid_argument("LogisticModel: non-finite coefficient");
  }
  if (!std::isfinite(intercept_)) {
    throw std::invalid_argument("LogisticModel: non-finite intercept");
  }
}

double LogisticModel::predict_proba(std::span<const double> x) const {
  if (x.size() != coefficients_.size()) {
    throw std::invalid_argument("LogisticModel: feature vector arity mismatch");
  }
  double z = intercept_;
  for (std::size_t j = 0; j < x.size(); ++j) {
    z += coefficients_[j] * (x[j] - means_[j]) / stddevs_[j];
  }
  return sigmoid(z);
}

LogisticModel fit_logistic(const Dataset& d, double l2, int max_iter, double tol,
                           std::vector<double>* nll_trace) {
  const std::size_t n1 = d.count_label(1);
  if (n1 == 0 || n1 == d.n_rows()) {
    throw DataError("fit_logistic: training data has a single class");
  }
  if (l2 < 0) throw std::invalid_argument("fit_logistic: l2 must be >= 0");
  const std::size_t n = d.n_rows(), p = d.n_cols();
  const auto stats = standardize_stats(d);

  std::vector<double> z(n * p);  // standardized features
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      z[i * p + j] = (d.at(i, j) - stats.mean[j]) / stats.sd[j];
    }
  }

  std::vector<double> beta(p, 0.0);
  double intercept = 0.0;

  auto objective = [&](const std::vector<double>& b, double b0) {
    double nll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = b0;
      for (std::size_t j = 0; j < p; ++j) s += b[j] * z[i * p + j];
      nll += log1pexp(s) - static_cast<double>(d.label(i)) * s;
    }
    double penalty = 0.0;
    for (double bj : b) penalty += bj * bj;
    return nll + 0.5 * l2 * penalty;
  };

  double value = objective(beta, intercept);
  if (nll_trace) nll_trace->push_back(value);

  std::vector<double> grad(p);
  for (int iter = 0; iter < max_iter; ++iter) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = intercept;
      for (std::size_t j = 0; j < p; ++j) s += beta[j] * z[i * p + j];
      const double residual = sigmoid(s) - static_cast<double>(d.label(i));
      grad0 += residual;
      for (std::size_t j = 0; j < p; ++j) grad[j] += residual * z[i * p + j];
    }
    for (std::size_t j = 0; j < p; ++j) grad[j] += l2 * beta[j];

    double gmax = std::abs(grad0);
    for (double g : grad) gmax = std::max(gmax, std::abs(g));
    if (gmax < tol) break;

    double gnorm2 = grad0 * grad0;
    for (double g : grad) gnorm2 += g * g;

    double step = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      std::vector<double> b2(p);
      for (std::size_t j = 0; j < p; ++j) b2[j] = beta[j] - step * grad[j];
      const double b02 = intercept - step * grad0;
      const double v2 = objective(b2, b02);
      if (std::isfinite(v2) && v2 <= value - 1e-4 * step * gnorm2) {
        beta = std::move(b2);
        intercept = b02;
        value = v2;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    if (nll_trace) nll_trace->push_back(value);
  }
  return LogisticModel(std::move(beta), intercept, stats.mean, stats.sd);
}

}  // namespace mfl
