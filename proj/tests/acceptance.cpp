// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Returns the number of failures.
//
// Environment:
//   MFL_CLI           path to the mfl binary (required for criterion 11)
//   MFL_KDD_CSV       optional path to the kddcup.data_10_percent CSV;
//                     criterion 9 is skipped when unset
//   MFL_KDD_POSITIVE  label value treated as positive (default "normal.")

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "mfl/baselines.hpp"
#include "mfl/bench.hpp"
#include "mfl/criterion.hpp"
#include "mfl/dataset.hpp"
#include "mfl/forest.hpp"
#include "mfl/metrics.hpp"
#include "mfl/rng.hpp"
#include "support.hpp"

using namespace mfl;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int criterion, const char* name, bool pass, double seconds,
            const std::string& detail = "") {
  std::printf("[%s] criterion %2d: %-38s (%.2fs)%s%s\n", pass ? "PASS" : "FAIL",
              criterion, name, seconds, detail.empty() ? "" : " - ",
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void skip(int criterion, const char* name, const std::string& why) {
  std::printf("[SKIP] criterion %2d: %-38s - %s\n", criterion, name, why.c_str());
  std::fflush(stdout);
}

double elapsed(const Clock::time_point& t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

PredictionMatrix random_matrix(Rng& rng, std::size_t n, std::size_t m) {
  PredictionMatrix pm;
  pm.n_rows = n;
  pm.n_models = m;
  pm.values.resize(n * m);
  for (auto& v : pm.values) v = rng.next_real(0.02, 0.98);
  pm.labels.resize(n);
  bool has0 = false, has1 = false;
  for (auto& y : pm.labels) {
    y = rng.next_below(2) ? 1 : 0;
    (y ? has1 : has0) = true;
  }
  if (!has0) pm.labels[0] = 0;
  if (!has1) pm.labels[n - 1] = 1;
  pm.complexities.resize(m);
  for (auto& k : pm.complexities) k = static_cast<int>(rng.next_int(1, 50));
  return pm;
}

const LossSpec kSpecs[] = {LossSpec::focal(0.95, 2.0), LossSpec::focal(0.5, 0.0),
                           LossSpec::cross_entropy(), LossSpec::hinge()};

// ---- criterion 1: algebraic identity -------------------------------------
void criterion_identity() {
  const auto t0 = Clock::now();
  Rng rng(1001);
  bool pass = true;
  for (int trial = 0; trial < 1000 && pass; ++trial) {
    const auto n = static_cast<std::size_t>(rng.next_int(1, 100));
    const auto m = static_cast<std::size_t>(rng.next_int(1, 10));
    const PredictionMatrix pm = random_matrix(rng, n, m);
    const auto w = testsupport::random_simplex_point(rng, m);
    const LossSpec spec = kSpecs[trial % 4];
    const double s = sample_loss(pm, w, spec);
    double k_weighted = 0.0;
    for (std::size_t j = 0; j < m; ++j) k_weighted += w[j] * pm.complexities[j];
    const double product =
        s * (1.0 + 2.0 * (1.0 + k_weighted) / static_cast<double>(n));
    const double c = criterion(pm, w, spec);
    if (std::abs(c - product) > 1e-12 * std::max(1.0, std::abs(c))) pass = false;
  }
  const double secs = elapsed(t0);
  report(1, "criterion identity", pass && secs < 1.0, secs);
}

// ---- criterion 2: gradient vs central differences ------------------------
void criterion_gradient() {
  const auto t0 = Clock::now();
  Rng rng(1002);
  bool pass = true;
  for (const auto& spec : kSpecs) {
    for (int trial = 0; trial < 100 && pass; ++trial) {
      const auto n = static_cast<std::size_t>(rng.next_int(5, 40));
      const auto m = static_cast<std::size_t>(rng.next_int(2, 8));
      const PredictionMatrix pm = random_matrix(rng, n, m);
      // interior simplex point
      std::vector<double> w = testsupport::random_simplex_point(rng, m);
      for (auto& x : w) x = 0.9 * x + 0.1 / static_cast<double>(m);
      const auto grad = criterion_grad(pm, w, spec);
      for (std::size_t j = 0; j < m; ++j) {
        const double h = 1e-6;
        auto wp = w, wm = w;
        wp[j] += h;
        wm[j] -= h;
        const double numeric =
            (criterion(pm, wp, spec) - criterion(pm, wm, spec)) / (2.0 * h);
        if (std::abs(grad[j] - numeric) > 1e-5 * std::max(1.0, std::abs(numeric))) {
          pass = false;
        }
      }
    }
  }
  const double secs = elapsed(t0);
  report(2, "gradient correctness", pass && secs < 5.0, secs);
}

// ---- criterion 3: optimizer soundness -------------------------------------
void criterion_optimizer() {
  const auto t0 = Clock::now();
  Rng rng(1003);
  bool pass = true;
  std::string detail;
  for (int trial = 0; trial < 200 && pass; ++trial) {
    const auto n = static_cast<std::size_t>(rng.next_int(5, 100));
    const auto m = static_cast<std::size_t>(rng.next_int(1, 10));
    const PredictionMatrix pm = random_matrix(rng, n, m);
    const LossSpec spec = kSpecs[trial % 4];
    const auto init = WeightVector::uniform(m);
    const auto w = optimize_weights(pm, spec, init);

    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (w[j] < 0.0) pass = false;
      sum += w[j];
    }
    if (std::abs(sum - 1.0) > 1e-9) pass = false;

    const double c = criterion(pm, w.values(), spec);
    double reference = criterion(pm, init.values(), spec);
    for (std::size_t j = 0; j < m; ++j) {
      std::vector<double> vertex(m, 0.0);
      vertex[j] = 1.0;
      reference = std::min(reference, criterion(pm, vertex, spec));
    }
    for (int probe = 0; probe < 100; ++probe) {
      reference = std::min(
          reference, criterion(pm, testsupport::random_simplex_point(rng, m), spec));
    }
    if (c > reference + 1e-9) {
      pass = false;
      detail = "lost to a candidate point on trial " + std::to_string(trial);
    }

    if (m <= 3) {
      double grid_best = std::numeric_limits<double>::infinity();
      const int steps = 100;
      if (m == 1) {
        grid_best = criterion(pm, std::vector<double>{1.0}, spec);
      } else if (m == 2) {
        for (int a = 0; a <= steps; ++a) {
          const double w0 = static_cast<double>(a) / steps;
          grid_best = std::min(grid_best,
                               criterion(pm, std::vector<double>{w0, 1.0 - w0}, spec));
        }
      } else {
        for (int a = 0; a <= steps; ++a) {
          for (int b = 0; b <= steps - a; ++b) {
            const double w0 = static_cast<double>(a) / steps;
            const double w1 = static_cast<double>(b) / steps;
            grid_best = std::min(
                grid_best,
                criterion(pm, std::vector<double>{w0, w1, 1.0 - w0 - w1}, spec));
          }
        }
      }
      if (c > grid_best + 1e-6) {
        pass = false;
        detail = "lost to the 0.01 grid on trial " + std::to_string(trial);
      }
    }
  }
  const double secs = elapsed(t0);
  report(3, "optimizer soundness", pass && secs < 30.0, secs, detail);
}

// ---- criterion 4: scale/argmin invariance ---------------------------------
void criterion_scale_invariance() {
  const auto t0 = Clock::now();
  Rng rng(1004);
  bool pass = true;
  for (int trial = 0; trial < 50 && pass; ++trial) {
    const auto n = static_cast<std::size_t>(rng.next_int(5, 60));
    const auto m = static_cast<std::size_t>(rng.next_int(2, 8));
    const PredictionMatrix pm = random_matrix(rng, n, m);
    const auto init = WeightVector::uniform(m);
    const auto wf = optimize_weights(pm, LossSpec::focal(0.5, 0.0), init);
    const auto wce = optimize_weights(pm, LossSpec::cross_entropy(), init);
    for (std::size_t j = 0; j < m; ++j) {
      if (std::abs(wf[j] - wce[j]) > 1e-6) pass = false;
    }
  }
  report(4, "scale/argmin invariance", pass, elapsed(t0));
}

// ---- criterion 5: metric oracles ------------------------------------------
void criterion_metric_oracles() {
  const auto t0 = Clock::now();
  Rng rng(1005);
  bool pass = true;
  for (int trial = 0; trial < 1000 && pass; ++trial) {
    const auto n = static_cast<std::size_t>(rng.next_int(2, 50));
    std::vector<double> scores(n);
    std::vector<std::uint8_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng.next_int(0, 10)) / 10.0;
      labels[i] = rng.next_below(2) ? 1 : 0;
    }
    labels[0] = 0;
    labels[n - 1] = 1;
    if (auc(scores, labels) != testsupport::auc_bruteforce(scores, labels)) {
      pass = false;
    }
  }
  for (std::size_t n = 2; n <= 8 && pass; ++n) {
    for (std::uint32_t a = 0; a < (1u << n) && pass; ++a) {
      for (std::uint32_t b = 0; b < (1u << n); ++b) {
        std::vector<std::uint8_t> pred(n), truth(n);
        for (std::size_t i = 0; i < n; ++i) {
          pred[i] = (a >> i) & 1;
          truth[i] = (b >> i) & 1;
        }
        if (ari(pred, truth) != testsupport::ari_bruteforce(pred, truth)) {
          pass = false;
          break;
        }
      }
    }
  }
  for (int fixture = 0; fixture < 20 && pass; ++fixture) {
    const auto n = static_cast<std::size_t>(rng.next_int(3, 30));
    std::vector<std::uint8_t> pred(n), truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = rng.next_below(2) ? 1 : 0;
      truth[i] = rng.next_below(2) ? 1 : 0;
    }
    truth[0] = 1;
    std::size_t match = 0, tp = 0, pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      match += pred[i] == truth[i];
      pos += truth[i] == 1;
      tp += pred[i] == 1 && truth[i] == 1;
    }
    const auto [acc, rec] = accuracy_recall(pred, truth);
    if (acc != double(match) / double(n) || rec != double(tp) / double(pos)) {
      pass = false;
    }
  }
  report(5, "metric oracles", pass, elapsed(t0));
}

// ---- criterion 6: zero_one == hamming per run ------------------------------
void criterion_zero_one_hamming() {
  const auto t0 = Clock::now();
  const Dataset d = testsupport::make_cluster_pool_dataset(313, 500, 0.06, 0.10, 5,
                                                           100, 6);
  ExperimentConfig cfg;
  cfg.minority_frac = 0.0;
  cfg.runs = 5;
  cfg.n_trees = 8;
  cfg.master_seed = 7;
  cfg.methods = {Method::zero_one, Method::hamming};
  const BenchmarkReport report_zh = run_benchmark(d, cfg);
  bool pass = !report_zh.any_failure;
  for (int run = 1; run <= cfg.runs && pass; ++run) {
    const RunResult *z = nullptr, *h = nullptr;
    for (const auto& r : report_zh.results) {
      if (r.run != run) continue;
      (r.method == Method::zero_one ? z : h) = &r;
    }
    pass = z && h && z->metrics.accuracy == h->metrics.accuracy &&
           z->metrics.recall == h->metrics.recall && z->metrics.auc == h->metrics.auc &&
           z->metrics.ari == h->metrics.ari;
  }
  report(6, "zero_one == hamming", pass, elapsed(t0));
}

// ---- criterion 7: corrupted-tree downweighting -----------------------------
void criterion_downweighting() {
  const auto t0 = Clock::now();
  bool pass = true;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 20 && pass; ++seed) {
    const Dataset d = testsupport::make_imbalanced(600, 0.05, 9000 + seed, 4);
    std::vector<double> features = d.features();
    std::vector<std::uint8_t> flipped_labels = d.labels();
    for (auto& y : flipped_labels) y = 1 - y;
    const Dataset flipped(std::move(features), std::move(flipped_labels),
                          d.feature_names());

    std::vector<TreeModel> trees;
    for (int m = 0; m < 10; ++m) {
      const auto idx = bootstrap_sample(d.n_rows(), Rng::derive(seed, 2 * m));
      trees.push_back(fit_tree(d, idx, TreeParams{}, Rng::derive(seed, 2 * m + 1)));
    }
    for (int m = 10; m < 20; ++m) {
      const auto idx = bootstrap_sample(d.n_rows(), Rng::derive(seed, 2 * m));
      trees.push_back(
          fit_tree(flipped, idx, TreeParams{}, Rng::derive(seed, 2 * m + 1)));
    }
    const PredictionMatrix pm =
        build_prediction_matrix(trees, d, ComplexityMode::leaves);
    const auto w = optimize_weights(pm, LossSpec::focal(0.95, 2.0),
                                    WeightVector::uniform(20));
    double clean_mass = 0.0;
    for (std::size_t m = 0; m < 10; ++m) clean_mass += w[m];
    if (clean_mass < 0.8) {
      pass = false;
      detail = "clean mass " + std::to_string(clean_mass) + " on seed " +
               std::to_string(seed);
    }
  }
  const double secs = elapsed(t0);
  report(7, "corrupted-tree downweighting", pass && secs < 10.0, secs, detail);
}

// ---- criterion 8: directional desk-scale reproduction ----------------------
void criterion_directional() {
  const auto t0 = Clock::now();
  // duplicate-heavy Gaussian clusters, n = 1069, minority 2.9%, 10% label noise
  const Dataset d = testsupport::make_cluster_pool_dataset(2025);
  ExperimentConfig cfg;
  cfg.minority_frac = 0.05;
  cfg.train_frac = 0.7;
  cfg.runs = 60;
  cfg.n_trees = 20;
  cfg.alpha = 0.95;
  cfg.gamma = 2.0;
  cfg.master_seed = 42;
  cfg.jobs = 4;
  cfg.methods = {Method::mfl, Method::vote, Method::mean};
  const BenchmarkReport rep = run_benchmark(d, cfg);
  double mfl_auc = -1, vote_auc = -1, mean_auc = -1;
  for (const auto& s : rep.summary) {
    if (s.metric != "auc") continue;
    if (s.method == Method::mfl) mfl_auc = s.mean;
    if (s.method == Method::vote) vote_auc = s.mean;
    if (s.method == Method::mean) mean_auc = s.mean;
  }
  const bool pass =
      !rep.any_failure && mfl_auc >= vote_auc && mfl_auc >= mean_auc;
  const double secs = elapsed(t0);
  char detail[160];
  std::snprintf(detail, sizeof(detail), "mfl=%.4f vote=%.4f mean=%.4f", mfl_auc,
                vote_auc, mean_auc);
  report(8, "directional desk-scale ordering", pass && secs < 300.0, secs, detail);
}

// ---- criterion 9: KDDCup soft target (opt-in) -------------------------------
void criterion_kdd() {
  const char* path = std::getenv("MFL_KDD_CSV");
  if (!path || !*path) {
    skip(9, "KDDCup soft target", "set MFL_KDD_CSV to the kddcup 10% file to enable");
    return;
  }
  const auto t0 = Clock::now();
  const char* positive = std::getenv("MFL_KDD_POSITIVE");
  Dataset raw = load_csv(path, std::getenv("MFL_KDD_LABEL") ? std::getenv("MFL_KDD_LABEL")
                                                            : "41",
                         positive && *positive ? positive : "normal.");
  // anomaly must be the minority class labeled 1
  if (raw.count_label(1) * 2 > raw.n_rows()) {
    std::vector<std::uint8_t> inverted = raw.labels();
    for (auto& y : inverted) y = 1 - y;
    std::vector<double> features = raw.features();
    raw = Dataset(std::move(features), std::move(inverted), raw.feature_names());
  }

  // 60 runs of: draw 1038 normal + 31 anomalies, split 70/30, fit, score
  Rng rng(4242);
  double auc_sum = 0.0, recall_sum = 0.0;
  const int runs = 60;
  for (int run = 0; run < runs; ++run) {
    std::vector<std::size_t> normals, anomalies;
    for (std::size_t i = 0; i < raw.n_rows(); ++i) {
      (raw.label(i) == 1 ? anomalies : normals).push_back(i);
    }
    Rng draw(Rng::derive(4242, static_cast<std::uint64_t>(run)));
    auto pick_norm = draw.sample_without_replacement(normals.size(), 1038);
    auto pick_anom = draw.sample_without_replacement(anomalies.size(), 31);
    std::vector<std::size_t> rows;
    for (auto i : pick_norm) rows.push_back(normals[i]);
    for (auto i : pick_anom) rows.push_back(anomalies[i]);
    std::sort(rows.begin(), rows.end());
    const Dataset subset = raw.select_rows(rows);
    const SplitPair split = train_test_split(
        subset, 0.7, Rng::derive(999, static_cast<std::uint64_t>(run)), true);
    FitConfig fc;
    fc.n_trees = 20;
    fc.loss_spec = LossSpec::focal(0.95, 2.0);
    fc.rng_seed = Rng::derive(31415, static_cast<std::uint64_t>(run));
    const ForestModel model = fit_mfl_forest(split.train, fc);
    const auto probs = predict_matrix_proba(model, split.test);
    const MetricsReport m = evaluate(probs, split.test.labels());
    auc_sum += m.auc;
    recall_sum += m.recall;
  }
  const double mean_auc = auc_sum / runs;
  const double mean_recall = recall_sum / runs;
  const bool pass =
      std::abs(mean_auc - 0.9040) <= 0.05 && std::abs(mean_recall - 0.8083) <= 0.08;
  char detail[120];
  std::snprintf(detail, sizeof(detail), "mean AUC %.4f (target 0.9040 +- 0.05), recall %.4f (0.8083 +- 0.08)",
                mean_auc, mean_recall);
  report(9, "KDDCup soft target", pass, elapsed(t0), detail);
}

// ---- criterion 10: isolation forest sanity ----------------------------------
void criterion_iforest() {
  const auto t0 = Clock::now();
  bool pass = average_path_length(2) == 1.0;

  // score exactly 0.5 when the average path length equals c(psi): a forest
  // of single-external-node trees realizes E[h] = c(psi)
  std::vector<std::vector<double>> rows(16, std::vector<double>{1.0, 2.0});
  std::vector<int> labels(16, 0);
  labels[0] = 1;
  const auto constant = testsupport::make_dataset(rows, labels);
  const IsoForestModel degenerate = fit_iforest(constant, 25, 16, 3);
  if (std::abs(degenerate.score(rows[0]) - 0.5) > 1e-12) pass = false;

  int hits = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto blob = testsupport::make_blobs(150, 0.0, seed + 5000);
    const IsoForestModel m = fit_iforest(blob, 100, 256, seed);
    if (m.score(std::vector<double>{25.0, -25.0}) >
        m.score(std::vector<double>{0.0, 0.0})) {
      ++hits;
    }
  }
  if (hits < 48) pass = false;
  char detail[64];
  std::snprintf(detail, sizeof(detail), "outlier>centroid in %d/50 trials", hits);
  report(10, "isolation forest sanity", pass, elapsed(t0), detail);
}

// ---- criterion 11: CLI determinism ------------------------------------------
void criterion_cli_determinism() {
  const char* cli = std::getenv("MFL_CLI");
  if (!cli || !*cli) {
    report(11, "bench determinism (CLI)", false, 0.0, "MFL_CLI not set");
    return;
  }
  const auto t0 = Clock::now();
  const Dataset d = testsupport::make_cluster_pool_dataset(12, 420, 0.07, 0.10, 5,
                                                           90, 6);
  testsupport::TempFile data("accept_data");
  save_csv(d, data.path());
  testsupport::TempFile out1("accept_r1"), out2("accept_r2"), out3("accept_r3");

  auto run_cli = [&](const std::string& out, int jobs) {
    const std::string cmd =
        std::string(cli) + " bench --data " + data.path() +
        " --label-col label --positive-label 1 --minority-frac 0" +
        " --runs 4 --trees 6 --seed 77 --methods mfl,vote,zero_one,iforest" +
        " --format json --jobs " + std::to_string(jobs) + " --out " + out +
        " > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  };

  bool pass = run_cli(out1.path(), 1) == 0 && run_cli(out2.path(), 1) == 0 &&
              run_cli(out3.path(), 4) == 0;
  std::string detail;
  if (pass) {
    const std::string a = slurp(out1.path());
    pass = !a.empty() && a == slurp(out2.path()) && a == slurp(out3.path());
    if (!pass) detail = "report bodies differ";
  } else {
    detail = "cli invocation failed";
  }
  report(11, "bench determinism (CLI)", pass, elapsed(t0), detail);
}

}  // namespace

int main() {
  std::printf("acceptance suite\n================\n");
  criterion_identity();
  criterion_gradient();
  criterion_optimizer();
  criterion_scale_invariance();
  criterion_metric_oracles();
  criterion_zero_one_hamming();
  criterion_downweighting();
  criterion_directional();
  criterion_kdd();
  criterion_iforest();
  criterion_cli_determinism();
  std::printf("================\n%s (%d failure%s)\n",
              failures == 0 ? "ALL CRITERIA SATISFIED" : "FAILURES PRESENT", failures,
              failures == 1 ? "" : "s");
  return failures == 0 ? 0 : 1;
}
