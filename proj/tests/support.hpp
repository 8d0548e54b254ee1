#pragma once

// Shared fixtures and independent oracles for the test suites. Everything
// here must stay independent of the library code paths it checks.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <unistd.h>
#include <vector>

#include "mfl/dataset.hpp"
#include "mfl/rng.hpp"

namespace testsupport {

inline mfl::Dataset make_dataset(const std::vector<std::vector<double>>& rows,
                                 const std::vector<int>& labels) {
  std::vector<double> features;
  for (const auto& r : rows) features.insert(features.end(), r.begin(), r.end());
  std::vector<std::uint8_t> y(labels.begin(), labels.end());
  std::vector<std::string> names;
  for (std::size_t j = 0; j < rows.front().size(); ++j) {
    names.push_back("f" + std::to_string(j));
  }
  return mfl::Dataset(std::move(features), std::move(y), std::move(names));
}

/// Two well-separated Gaussian blobs, labels by blob.
inline mfl::Dataset make_blobs(std::size_t n_per_class, double gap,
                               std::uint64_t seed, std::size_t p = 2) {
  mfl::Rng rng(seed);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
    const int label = i < n_per_class ? 0 : 1;
    std::vector<double> x(p);
    for (auto& v : x) v = 0.5 * rng.next_gaussian();
    if (label == 1) x[0] += gap;
    rows.push_back(std::move(x));
    labels.push_back(label);
  }
  return make_dataset(rows, labels);
}

/// Imbalanced dataset with the given minority fraction; cluster on x0.
inline mfl::Dataset make_imbalanced(std::size_t n, double minority_frac,
                                    std::uint64_t seed, std::size_t p = 4) {
  mfl::Rng rng(seed);
  const auto n_min = std::max<std::size_t>(
      1, static_cast<std::size_t>(minority_frac * static_cast<double>(n) + 0.5));
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = i < n_min ? 1 : 0;
    std::vector<double> x(p);
    for (auto& v : x) v = rng.next_gaussian();
    if (label == 1) x[0] += 3.0;
    rows.push_back(std::move(x));
    labels.push_back(label);
  }
  return make_dataset(rows, labels);
}

/// The directional-reproduction fixture: n rows drawn from a finite pool of
/// distinct Gaussian points (duplicate-heavy, like network-intrusion data),
/// minority cluster shifted on feature 0, and `noise` of the rows carrying
/// the other class's features (label noise).
inline mfl::Dataset make_cluster_pool_dataset(std::uint64_t seed, std::size_t n = 1069,
                                              double minority = 0.029,
                                              double noise = 0.10, std::size_t p = 8,
                                              std::size_t pool_major = 200,
                                              std::size_t pool_minor = 10,
                                              double shift = 3.0) {
  mfl::Rng rng(seed);
  const auto n_min = static_cast<std::size_t>(minority * static_cast<double>(n) + 0.5);
  std::vector<std::vector<double>> major_pool(pool_major), minor_pool(pool_minor);
  for (auto& x : major_pool) {
    x.resize(p);
    for (auto& t : x) t = rng.next_gaussian();
  }
  for (auto& x : minor_pool) {
    x.resize(p);
    for (auto& t : x) t = rng.next_gaussian();
    x[0] += shift;
  }
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const bool minority_label = i < n_min;
    const bool swap = rng.next_unit() < noise;
    const auto& pool = (swap ? !minority_label : minority_label) ? minor_pool : major_pool;
    rows.push_back(pool[static_cast<std::size_t>(rng.next_below(pool.size()))]);
    labels.push_back(minority_label ? 1 : 0);
  }
  return make_dataset(rows, labels);
}

/// Exhaustive best-split search over every feature and every midpoint
/// between consecutive distinct values (Gini reduction), mirroring the
/// contract but via an independent, simple enumeration.
struct BruteSplit {
  bool found = false;
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

inline BruteSplit best_split_bruteforce(const mfl::Dataset& d,
                                        std::span<const std::size_t> idx,
                                        int min_samples_leaf = 1) {
  const auto n = idx.size();
  auto gini = [](double pos, double total) {
    const double q = pos / total;
    return 2.0 * q * (1.0 - q);
  };
  double total_pos = 0;
  for (auto i : idx) total_pos += d.label(i);
  const double parent = gini(total_pos, static_cast<double>(n));
  BruteSplit best;
  for (std::size_t f = 0; f < d.n_cols(); ++f) {
    std::vector<std::pair<double, int>> vals;
    for (auto i : idx) vals.push_back({d.at(i, f), d.label(i)});
    std::sort(vals.begin(), vals.end());
    double left_pos = 0;
    for (std::size_t k = 1; k < n; ++k) {
      left_pos += vals[k - 1].second;
      if (vals[k].first == vals[k - 1].first) continue;
      const auto nl = static_cast<double>(k);
      const auto nr = static_cast<double>(n - k);
      if (k < static_cast<std::size_t>(min_samples_leaf) ||
          n - k < static_cast<std::size_t>(min_samples_leaf)) {
        continue;
      }
      const double child =
          (nl * gini(left_pos, nl) + nr * gini(total_pos - left_pos, nr)) /
          static_cast<double>(n);
      const double gain = parent - child;
      if (gain > best.gain + 1e-15) {
        best = {true, gain, static_cast<int>(f),
                vals[k - 1].first + (vals[k].first - vals[k - 1].first) / 2.0};
      }
    }
  }
  return best;
}

/// O(n^2) pairwise AUC with the 0.5 tie rule.
inline double auc_bruteforce(std::span<const double> scores,
                             std::span<const std::uint8_t> labels) {
  double credit = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) credit += 1.0;
      else if (scores[i] == scores[j]) credit += 0.5;
    }
  }
  return credit / static_cast<double>(pairs);
}

/// ARI by enumerating all C(n,2) pairs and applying the adjusted-index
/// formula to the pair counts (exact integer arithmetic, one division).
inline double ari_bruteforce(std::span<const std::uint8_t> pred,
                             std::span<const std::uint8_t> truth) {
  const std::size_t n = pred.size();
  std::int64_t both = 0, in_pred = 0, in_truth = 0, total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      ++total;
      const bool same_pred = pred[i] == pred[j];
      const bool same_truth = truth[i] == truth[j];
      in_pred += same_pred;
      in_truth += same_truth;
      both += same_pred && same_truth;
    }
  }
  const __int128 numerator = 2 * (static_cast<__int128>(total) * both -
                                  static_cast<__int128>(in_pred) * in_truth);
  const __int128 denominator = static_cast<__int128>(total) * (in_pred + in_truth) -
                               2 * static_cast<__int128>(in_pred) * in_truth;
  if (denominator == 0) return 0.0;
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

/// Uniform random point on the simplex (normalized exponentials).
inline std::vector<double> random_simplex_point(mfl::Rng& rng, std::size_t m) {
  std::vector<double> w(m);
  double sum = 0.0;
  for (auto& x : w) {
    x = -std::log(1.0 - rng.next_unit());
    sum += x;
  }
  for (auto& x : w) x /= sum;
  return w;
}

/// Temp file that cleans up after itself.
class TempFile {
 public:
  explicit TempFile(const std::string& stem) {
    static std::atomic<unsigned> counter{0};
    path_ = (std::filesystem::temp_directory_path() /
             (stem + "." + std::to_string(::getpid()) + "." +
              std::to_string(counter.fetch_add(1)) + ".tmp"))
                .string();
  }
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  const std::string& path() const { return path_; }
  void write(const std::string& content) const {
    std::ofstream out(path_, std::ios::binary);
    out << content;
  }

 private:
  std::string path_;
};

}  // namespace testsupport
