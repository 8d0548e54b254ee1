#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfl/baselines.hpp"
#include "mfl/bench.hpp"
#include "mfl/errors.hpp"
#include "mfl/forest.hpp"
#include "mfl/tune.hpp"
#include "mfl/version.hpp"

namespace {

// 0 success, 1 data error, 2 config error, 3 partial method failure
constexpr int kExitOk = 0;
constexpr int kExitDataError = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitPartialFailure = 3;

std::vector<mfl::Method> parse_methods(const std::string& csv) {
  std::vector<mfl::Method> methods;
  std::string token;
  std::stringstream ss(csv);
  while (std::getline(ss, token, ',')) {
    if (!token.empty()) methods.push_back(mfl::method_from_string(token));
  }
  if (methods.empty()) throw mfl::ConfigError("--methods: empty method list");
  return methods;
}

int env_jobs_override(int jobs) {
  const char* env = std::getenv("MFL_JOBS");
  if (!env || !*env) return jobs;
  int value = 0;
  const auto* end = env + std::string_view(env).size();
  auto [ptr, ec] = std::from_chars(env, end, value);
  if (ec != std::errc{} || ptr != end || value < 1) {
    throw mfl::ConfigError("MFL_JOBS must be a positive integer");
  }
  return value;
}

struct BenchArgs {
  mfl::ExperimentConfig cfg;
  std::string methods_csv =
      "mfl,focal_nopenalty,vote,mean,zero_one,hamming,hinge,cross_entropy,"
      "iforest,knn,logistic";
  std::string format = "json";
};

struct TrainArgs {
  std::string data, label_col, positive_label, out = "model.mflf";
  double minority_frac = 0.0;  // off by default for train
  int trees = 20;
  double alpha = 0.95, gamma = 2.0;
  std::uint64_t seed = 42;
};

struct PredictArgs {
  std::string model, data, label_col, out = "predictions.csv";
  double threshold = 0.5;
};

struct TuneArgs {
  std::string data, label_col, positive_label, out = "trials.csv";
  double minority_frac = 0.0;
  int budget = 20;
  std::uint64_t seed = 42;
  std::string strategy = "random";
  mfl::SearchSpace space;
};

int run_bench(BenchArgs& args) {
  args.cfg.methods = parse_methods(args.methods_csv);
  args.cfg.jobs = env_jobs_override(args.cfg.jobs);
  const auto format = mfl::report_format_from_string(args.format);

  const mfl::BenchmarkReport report = mfl::run_benchmark(args.cfg);
  if (!args.cfg.output_path.empty()) {
    mfl::write_report(report, args.cfg.output_path, format);
    std::cout << "report written to " << args.cfg.output_path << "\n";
  } else {
    std::cout << mfl::render_report(report, format);
  }
  if (report.any_failure) {
    std::size_t failures = 0;
    for (const auto& r : report.results) failures += !r.ok;
    std::cerr << failures << " method run(s) failed; see the report for details\n";
    return kExitPartialFailure;
  }
  return kExitOk;
}

int run_train(const TrainArgs& args) {
  mfl::Dataset d = mfl::load_csv(args.data, args.label_col, args.positive_label);
  if (args.minority_frac > 0) {
    d = mfl::stratified_subsample(d, args.minority_frac, args.seed);
  }
  mfl::FitConfig cfg;
  cfg.n_trees = args.trees;
  cfg.loss_spec = mfl::LossSpec::focal(args.alpha, args.gamma);
  cfg.rng_seed = args.seed;
  const mfl::ForestModel model = mfl::fit_mfl_forest(d, cfg);
  mfl::save_model(model, args.out);
  std::cout << "model with " << model.n_trees() << " trees written to " << args.out
            << "\n";
  return kExitOk;
}

int run_predict(const PredictArgs& args) {
  const mfl::ForestModel model = mfl::load_model(args.model);
  const mfl::FeatureTable table = mfl::load_csv_features(args.data, args.label_col);
  if (table.n_cols != model.n_features()) {
    throw mfl::DataError("predict: CSV has " + std::to_string(table.n_cols) +
                         " feature columns, model expects " +
                         std::to_string(model.n_features()));
  }
  const auto scores = mfl::predict_matrix_proba(model, table.features, table.n_cols);

  std::ofstream out(args.out, std::ios::binary);
  if (!out) throw mfl::DataError("cannot write predictions: " + args.out);
  out << "row,score,label\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%d\n", i, scores[i],
                  scores[i] >= args.threshold ? 1 : 0);
    out << buf;
  }
  if (!out) throw mfl::DataError("write failed: " + args.out);
  std::cout << scores.size() << " predictions written to " << args.out << "\n";
  return kExitOk;
}

int run_tune(TuneArgs& args) {
  if (args.strategy == "random") {
    args.space.strategy = mfl::SearchSpace::Strategy::random;
  } else if (args.strategy == "ei") {
    args.space.strategy = mfl::SearchSpace::Strategy::expected_improvement;
  } else {
    throw mfl::ConfigError("--strategy must be 'random' or 'ei'");
  }
  args.space.budget = args.budget;

  mfl::Dataset d = mfl::load_csv(args.data, args.label_col, args.positive_label);
  if (args.minority_frac > 0) {
    d = mfl::stratified_subsample(d, args.minority_frac, args.seed);
  }
  const mfl::TuneResult result = mfl::tune(d, args.space, args.seed);
  mfl::write_trials_csv(result, args.out);
  std::cout << "best: alpha=" << result.alpha << " gamma=" << result.gamma
            << " trees=" << result.n_trees << " score=" << result.best_score << "\n"
            << result.trials.size() << " trials written to " << args.out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"model-averaged random forests for anomaly detection"};
  app.set_version_flag("--version", std::string("mfl ") + mfl::kVersion);
  app.require_subcommand(1);

  BenchArgs bench;
  auto* cmd_bench = app.add_subcommand(
      "bench", "run the repeated-benchmark protocol on a CSV dataset");
  cmd_bench->add_option("--data", bench.cfg.data_path, "input CSV path")->required();
  cmd_bench->add_option("--label-col", bench.cfg.label_column, "label column (name or index)")
      ->required();
  cmd_bench->add_option("--positive-label", bench.cfg.positive_label,
                        "label value mapped to 1 (anomaly)")
      ->required();
  cmd_bench->add_option("--minority-frac", bench.cfg.minority_frac,
                        "target minority fraction for subsampling; <= 0 disables");
  cmd_bench->add_option("--train-frac", bench.cfg.train_frac, "train fraction");
  cmd_bench->add_option("--runs", bench.cfg.runs, "number of seeded runs");
  cmd_bench->add_option("--methods", bench.methods_csv, "comma-separated method list");
  cmd_bench->add_option("--trees", bench.cfg.n_trees, "trees per forest");
  cmd_bench->add_option("--alpha", bench.cfg.alpha, "focal alpha");
  cmd_bench->add_option("--gamma", bench.cfg.gamma, "focal gamma");
  cmd_bench->add_option("--seed", bench.cfg.master_seed, "master seed");
  cmd_bench->add_option("--out", bench.cfg.output_path, "report path (stdout if omitted)");
  cmd_bench->add_option("--format", bench.format, "json|csv|markdown");
  cmd_bench->add_option("--jobs", bench.cfg.jobs, "parallel runs (MFL_JOBS overrides)");
  cmd_bench->add_flag("--fixed-subsample", bench.cfg.fixed_subsample,
                      "subsample once and reuse it across runs");

  TrainArgs train;
  auto* cmd_train = app.add_subcommand("train", "fit a weighted forest and save it");
  cmd_train->add_option("--data", train.data, "input CSV path")->required();
  cmd_train->add_option("--label-col", train.label_col, "label column")->required();
  cmd_train->add_option("--positive-label", train.positive_label, "positive label value")
      ->required();
  cmd_train->add_option("--minority-frac", train.minority_frac,
                        "subsample before fitting; <= 0 disables");
  cmd_train->add_option("--trees", train.trees, "number of trees");
  cmd_train->add_option("--alpha", train.alpha, "focal alpha");
  cmd_train->add_option("--gamma", train.gamma, "focal gamma");
  cmd_train->add_option("--seed", train.seed, "rng seed");
  cmd_train->add_option("--out", train.out, "model output path");

  PredictArgs predict;
  auto* cmd_predict = app.add_subcommand("predict", "score a CSV with a saved model");
  cmd_predict->add_option("--model", predict.model, "model file")->required();
  cmd_predict->add_option("--data", predict.data, "input CSV path")->required();
  cmd_predict->add_option("--label-col", predict.label_col,
                          "column to drop before scoring, if present");
  cmd_predict->add_option("--threshold", predict.threshold, "label threshold");
  cmd_predict->add_option("--out", predict.out, "predictions CSV path");

  TuneArgs tune;
  auto* cmd_tune = app.add_subcommand("tune", "search (alpha, gamma, trees)");
  cmd_tune->add_option("--data", tune.data, "input CSV path")->required();
  cmd_tune->add_option("--label-col", tune.label_col, "label column")->required();
  cmd_tune->add_option("--positive-label", tune.positive_label, "positive label value")
      ->required();
  cmd_tune->add_option("--minority-frac", tune.minority_frac,
                       "subsample before tuning; <= 0 disables");
  cmd_tune->add_option("--budget", tune.budget, "number of trials");
  cmd_tune->add_option("--seed", tune.seed, "rng seed");
  cmd_tune->add_option("--strategy", tune.strategy, "random|ei");
  cmd_tune->add_option("--alpha-lo", tune.space.alpha_lo, "alpha lower bound");
  cmd_tune->add_option("--alpha-hi", tune.space.alpha_hi, "alpha upper bound");
  cmd_tune->add_option("--gamma-lo", tune.space.gamma_lo, "gamma lower bound");
  cmd_tune->add_option("--gamma-hi", tune.space.gamma_hi, "gamma upper bound");
  cmd_tune->add_option("--trees-lo", tune.space.trees_lo, "tree count lower bound");
  cmd_tune->add_option("--trees-hi", tune.space.trees_hi, "tree count upper bound");
  cmd_tune->add_option("--out", tune.out, "trial log CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  try {
    if (cmd_bench->parsed()) return run_bench(bench);
    if (cmd_train->parsed()) return run_train(train);
    if (cmd_predict->parsed()) return run_predict(predict);
    if (cmd_tune->parsed()) return run_tune(tune);
    return kExitConfigError;
  } catch (const mfl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const mfl::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataError;
  }
}
