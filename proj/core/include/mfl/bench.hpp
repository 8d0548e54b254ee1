#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfl/dataset.hpp"
#include "mfl/metrics.hpp"

namespace mfl {

enum class Method {
  mfl,
  focal_nopenalty,
  vote,
  mean,
  zero_one,
  hamming,
  hinge,
  cross_entropy,
  iforest,
  knn,
  logistic,
};

const char* to_string(Method m);
Method method_from_string(const std::string& name);
std::vector<Method> all_methods();

struct ExperimentConfig {
  std::string data_path;
  std::string label_column;
  std::string positive_label;
  double minority_frac = 0.05;  // <= 0 disables subsampling
  double train_frac = 0.7;
  int runs = 60;
  std::vector<Method> methods = all_methods();
  int n_trees = 20;
  double alpha = 0.95;
  double gamma = 2.0;
  std::uint64_t master_seed = 42;
  std::string output_path;
  bool fixed_subsample = false;  // subsample once, reuse across runs
  double threshold = 0.5;
  int jobs = 1;

  /// Throws ConfigError on out-of-range values or an empty method set.
  void validate() const;
};

struct RunResult {
  Method method;
  int run = 0;            // 1-based
  std::uint64_t seed = 0; // the run's data seed (master_seed + run)
  bool ok = false;
  MetricsReport metrics;
  std::string error;
};

struct SummaryRow {
  Method method;
  std::string metric;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over runs
};

struct BenchmarkReport {
  ExperimentConfig config;
  std::string version;
  std::vector<RunResult> results;   // ordered by run, then method
  std::vector<SummaryRow> summary;  // ordered by method, then metric
  bool any_failure = false;
};

/// Runs the full protocol: for run r in 1..runs with seed master_seed + r,
/// stratified-subsample, split, fit every configured method and evaluate
/// all four metrics on the test fold. Data seeds are shared across methods
/// within a run; method seeds are independent, so adding a method never
/// changes another method's numbers. A failing method is recorded per run
/// and does not abort the others.
BenchmarkReport run_benchmark(const ExperimentConfig& cfg);
BenchmarkReport run_benchmark(const Dataset& d, const ExperimentConfig& cfg);

enum class ReportFormat { json, csv, markdown };

ReportFormat report_format_from_string(const std::string& name);

/// json: full fidelity; csv: method,run,accuracy,recall,auc,ari rows;
/// markdown: method x metric grid of means with the best cell per column
/// bolded (ties to the first method).
std::string render_report(const BenchmarkReport& report, ReportFormat format);
void write_report(const BenchmarkReport& report, const std::string& path,
                  ReportFormat format);

}  // namespace mfl
