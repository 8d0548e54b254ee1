#include "mfl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "mfl/errors.hpp"

namespace mfl {

namespace {

void check_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
}

std::int64_t pairs2(std::int64_t x) { return x * (x - 1) / 2; }

}  // namespace

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_same_length(scores.size(), labels.size(), "auc");
  const std::size_t n = scores.size();
  if (n == 0) throw std::invalid_argument("auc: empty input");
  std::size_t n_pos = 0;
  for (std::uint8_t y : labels) {
    if (y > 1) throw std::invalid_argument("auc: labels must be 0 or 1");
    n_pos += y;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DataError("auc: needs both classes");
  for (double s : scores) {
    if (std::isnan(s)) throw std::invalid_argument("auc: NaN score");
  }

  // Rank statistic with average ranks on ties; equals pairwise
  // win/half-tie counting exactly (all quantities are half-integers).
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

double ari(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth) {
  check_same_length(pred.size(), truth.size(), "ari");
  const std::size_t n = pred.size();
  if (n < 2) throw std::invalid_argument("ari: needs at least two samples");

  std::int64_t table[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < n; ++i) {
    if (pred[i] > 1 || truth[i] > 1) {
      throw std::invalid_argument("ari: labels must be 0 or 1");
    }
    ++table[pred[i]][truth[i]];
  }
  const std::int64_t a0 = table[0][0] + table[0][1];
  const std::int64_t a1 = table[1][0] + table[1][1];
  const std::int64_t b0 = table[0][0] + table[1][0];
  const std::int64_t b1 = table[0][1] + table[1][1];

  // All terms are exact integers; the single division keeps the result
  // bit-identical to brute-force pair enumeration.
  const std::int64_t index = pairs2(table[0][0]) + pairs2(table[0][1]) +
                             pairs2(table[1][0]) + pairs2(table[1][1]);
  const std::int64_t sum_a = pairs2(a0) + pairs2(a1);
  const std::int64_t sum_b = pairs2(b0) + pairs2(b1);
  const std::int64_t total = pairs2(static_cast<std::int64_t>(n));

  const __int128 numerator =
      2 * (static_cast<__int128>(total) * index - static_cast<__int128>(sum_a) * sum_b);
  const __int128 denominator = static_cast<__int128>(total) * (sum_a + sum_b) -
                               2 * static_cast<__int128>(sum_a) * sum_b;
  if (denominator == 0) return 0.0;
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

std::pair<double, double> accuracy_recall(std::span<const std::uint8_t> pred,
                                          std::span<const std::uint8_t> truth) {
  check_same_length(pred.size(), truth.size(), "accuracy_recall");
  const std::size_t n = pred.size();
  if (n == 0) throw std::invalid_argument("accuracy_recall: empty input");
  std::size_t matches = 0, true_pos = 0, actual_pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    matches += pred[i] == truth[i];
    actual_pos += truth[i] == 1;
    true_pos += (pred[i] == 1 && truth[i] == 1);
  }
  if (actual_pos == 0) {
    throw DataError("accuracy_recall: recall undefined without positive samples");
  }
  return {static_cast<double>(matches) / static_cast<double>(n),
          static_cast<double>(true_pos) / static_cast<double>(actual_pos)};
}

MetricsReport evaluate(std::span<const double> scores,
                       std::span<const std::uint8_t> truth, double threshold) {
  check_same_length(scores.size(), truth.size(), "evaluate");
  std::vector<std::uint8_t> pred(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    pred[i] = scores[i] >= threshold ? 1 : 0;
  }
  MetricsReport report;
  report.n_test = scores.size();
  report.threshold_used = threshold;
  auto [acc, rec] = accuracy_recall(pred, truth);
  report.accuracy = acc;
  report.recall = rec;
  report.auc = auc(scores, truth);
  report.ari = ari(pred, truth);
  return report;
}

}  // namespace mfl
