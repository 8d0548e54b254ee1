#include "mfl/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "mfl/baselines.hpp"
#include "mfl/errors.hpp"
#include "mfl/forest.hpp"
#include "mfl/rng.hpp"
#include "mfl/version.hpp"

namespace mfl {

namespace {

constexpr std::uint64_t kSubsampleSalt = 0x5375425341u;  // data-stage salts
constexpr std::uint64_t kSplitSalt = 0x53504c4954u;

std::uint64_t fnv1a(const char* s) {
  std::uint64_t h = 1469598103934665603ull;
  for (; *s; ++s) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(*s));
    h *= 1099511628211ull;
  }
  return h;
}

// zero_one and hamming are pointwise-identical losses; they share one seed
// stream so their runs come out identical under a shared data seed.
std::uint64_t method_salt(Method m) {
  if (m == Method::hamming) return fnv1a(to_string(Method::zero_one));
  return fnv1a(to_string(m));
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<double> method_scores(Method method, const Dataset& train,
                                  const Dataset& test, const ExperimentConfig& cfg,
                                  std::uint64_t seed) {
  auto forest_scores = [&](LossSpec spec, Aggregation agg, bool penalize) {
    FitConfig fc;
    fc.n_trees = cfg.n_trees;
    fc.loss_spec = spec;
    fc.rng_seed = seed;
    fc.aggregation = agg;
    fc.optimize.criterion_opts.penalize = penalize;
    const ForestModel model = fit_forest(train, fc);
    return predict_matrix_proba(model, test);
  };

  switch (method) {
    case Method::mfl:
      return forest_scores(LossSpec::focal(cfg.alpha, cfg.gamma), Aggregation::weighted,
                           true);
    case Method::focal_nopenalty:
      return forest_scores(LossSpec::focal(cfg.alpha, cfg.gamma), Aggregation::weighted,
                           false);
    case Method::vote:
      return forest_scores(LossSpec::focal(cfg.alpha, cfg.gamma), Aggregation::vote,
                           true);
    case Method::mean:
      return forest_scores(LossSpec::focal(cfg.alpha, cfg.gamma), Aggregation::mean,
                           true);
    case Method::zero_one:
      return forest_scores(LossSpec::zero_one(), Aggregation::weighted, true);
    case Method::hamming:
      return forest_scores(LossSpec::hamming(), Aggregation::weighted, true);
    case Method::hinge:
      return forest_scores(LossSpec::hinge(), Aggregation::weighted, true);
    case Method::cross_entropy:
      return forest_scores(LossSpec::cross_entropy(), Aggregation::weighted, true);
    case Method::iforest: {
      const IsoForestModel model = fit_iforest(train, 100, 256, seed);
      std::vector<double> scores(test.n_rows());
      for (std::size_t i = 0; i < test.n_rows(); ++i) scores[i] = model.score(test.row(i));
      return scores;
    }
    case Method::knn: {
      std::vector<double> scores(test.n_rows());
      for (std::size_t i = 0; i < test.n_rows(); ++i) {
        scores[i] = knn_predict_proba(train, test.row(i), 5);
      }
      return scores;
    }
    case Method::logistic: {
      const LogisticModel model = fit_logistic(train);
      std::vector<double> scores(test.n_rows());
      for (std::size_t i = 0; i < test.n_rows(); ++i) {
        scores[i] = model.predict_proba(test.row(i));
      }
      return scores;
    }
  }
  throw ConfigError("unknown method");
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::mfl: return "mfl";
    case Method::focal_nopenalty: return "focal_nopenalty";
    case Method::vote: return "vote";
    case Method::mean: return "mean";
    case Method::zero_one: return "zero_one";
    case Method::hamming: return "hamming";
    case Method::hinge: return "hinge";
    case Method::cross_entropy: return "cross_entropy";
    case Method::iforest: return "iforest";
    case Method::knn: return "knn";
    case Method::logistic: return "logistic";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  for (Method m : all_methods()) {
    if (name == to_string(m)) return m;
  }
  throw ConfigError("unknown method: " + name);
}

std::vector<Method> all_methods() {
  return {Method::mfl,      Method::focal_nopenalty, Method::vote,
          Method::mean,     Method::zero_one,        Method::hamming,
          Method::hinge,    Method::cross_entropy,   Method::iforest,
          Method::knn,      Method::logistic};
}

void ExperimentConfig::validate() const {
  if (runs < 1) throw ConfigError("config: runs must be >= 1");
  if (methods.empty()) throw ConfigError("config: method set is empty");
  if (minority_frac > 0 && !(minority_frac < 0.5)) {
    throw ConfigError("config: minority fraction must be below 0.5 (or <= 0 to disable)");
  }
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw ConfigError("config: train fraction must be in (0, 1)");
  }
  if (n_trees < 1) throw ConfigError("config: trees must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("config: alpha must be in (0, 1)");
  if (!(gamma >= 0.0)) throw ConfigError("config: gamma must be >= 0");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("config: threshold must be in (0, 1)");
  }
}

BenchmarkReport run_benchmark(const ExperimentConfig& cfg) {
  cfg.validate();
  const Dataset d = load_csv(cfg.data_path, cfg.label_column, cfg.positive_label);
  return run_benchmark(d, cfg);
}

BenchmarkReport run_benchmark(const Dataset& d, const ExperimentConfig& cfg) {
  cfg.validate();

  std::optional<Dataset> fixed;
  if (cfg.fixed_subsample && cfg.minority_frac > 0) {
    fixed = stratified_subsample(d, cfg.minority_frac,
                                 Rng::derive(cfg.master_seed, kSubsampleSalt));
  }

  const std::size_t n_methods = cfg.methods.size();
  const auto runs = static_cast<std::size_t>(cfg.runs);
  std::vector<RunResult> results(runs * n_methods);

  auto execute_run = [&](std::size_t r) {
    const std::uint64_t run_seed = cfg.master_seed + r + 1;
    try {
      const Dataset* base = &d;
      std::optional<Dataset> resampled;
      if (fixed) {
        base = &*fixed;
      } else if (cfg.minority_frac > 0) {
        resampled = stratified_subsample(d, cfg.minority_frac,
                                         Rng::derive(run_seed, kSubsampleSalt));
        base = &*resampled;
      }
      const SplitPair split = train_test_split(
          *base, cfg.train_frac, Rng::derive(run_seed, kSplitSalt), /*stratified=*/true);

      for (std::size_t mi = 0; mi < n_methods; ++mi) {
        const Method method = cfg.methods[mi];
        RunResult& slot = results[r * n_methods + mi];
        slot.method = method;
        slot.run = static_cast<int>(r + 1);
        slot.seed = run_seed;
        try {
          const auto scores = method_scores(method, split.train, split.test, cfg,
                                            Rng::derive(run_seed, method_salt(method)));
          slot.metrics = evaluate(scores, split.test.labels(), cfg.threshold);
          slot.ok = true;
        } catch (const std::exception& e) {
          slot.ok = false;
          slot.error = e.what();
        }
      }
    } catch (const std::exception& e) {
      // data-stage failure: every method of this run inherits the error
      for (std::size_t mi = 0; mi < n_methods; ++mi) {
        RunResult& slot = results[r * n_methods + mi];
        slot.method = cfg.methods[mi];
        slot.run = static_cast<int>(r + 1);
        slot.seed = run_seed;
        slot.ok = false;
        slot.error = e.what();
      }
    }
  };

  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1 || runs == 1) {
    for (std::size_t r = 0; r < runs; ++r) execute_run(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const auto workers = static_cast<std::size_t>(
        std::min<std::size_t>(static_cast<std::size_t>(jobs), runs));
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t r = next.fetch_add(1);
          if (r >= runs) return;
          execute_run(r);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  BenchmarkReport report;
  report.config = cfg;
  report.version = kVersion;
  report.results = std::move(results);
  report.any_failure =
      std::any_of(report.results.begin(), report.results.end(),
                  [](const RunResult& r) { return !r.ok; });

  const char* metric_names[] = {"accuracy", "recall", "auc", "ari"};
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    for (int metric = 0; metric < 4; ++metric) {
      std::vector<double> xs;
      for (std::size_t r = 0; r < runs; ++r) {
        const RunResult& rr = report.results[r * n_methods + mi];
        if (!rr.ok) continue;
        const double v = metric == 0   ? rr.metrics.accuracy
                         : metric == 1 ? rr.metrics.recall
                         : metric == 2 ? rr.metrics.auc
                                       : rr.metrics.ari;
        xs.push_back(v);
      }
      SummaryRow row;
      row.method = cfg.methods[mi];
      row.metric = metric_names[metric];
      if (!xs.empty()) {
        double mean = 0.0;
        for (double v : xs) mean += v;
        mean /= static_cast<double>(xs.size());
        double ss = 0.0;
        for (double v : xs) ss += (v - mean) * (v - mean);
        row.mean = mean;
        row.stddev = xs.size() > 1
                         ? std::sqrt(ss / static_cast<double>(xs.size() - 1))
                         : 0.0;
      }
      report.summary.push_back(row);
    }
  }
  return report;
}

ReportFormat report_format_from_string(const std::string& name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  if (name == "markdown" || name == "markdown-table" || name == "md") {
    return ReportFormat::markdown;
  }
  throw ConfigError("unknown report format: " + name);
}

std::string render_report(const BenchmarkReport& report, ReportFormat format) {
  const auto& cfg = report.config;
  switch (format) {
    case ReportFormat::json: {
      nlohmann::json j;
      nlohmann::json jc;
      jc["data"] = cfg.data_path;
      jc["label_column"] = cfg.label_column;
      jc["positive_label"] = cfg.positive_label;
      jc["minority_frac"] = cfg.minority_frac;
      jc["train_frac"] = cfg.train_frac;
      jc["runs"] = cfg.runs;
      nlohmann::json jm = nlohmann::json::array();
      for (Method m : cfg.methods) jm.push_back(to_string(m));
      jc["methods"] = jm;
      jc["trees"] = cfg.n_trees;
      jc["alpha"] = cfg.alpha;
      jc["gamma"] = cfg.gamma;
      jc["seed"] = cfg.master_seed;
      jc["fixed_subsample"] = cfg.fixed_subsample;
      jc["threshold"] = cfg.threshold;
      j["config"] = jc;
      j["version"] = report.version;

      nlohmann::json jr = nlohmann::json::array();
      for (const auto& r : report.results) {
        nlohmann::json e;
        e["method"] = to_string(r.method);
        e["run"] = r.run;
        e["seed"] = r.seed;
        if (r.ok) {
          e["accuracy"] = r.metrics.accuracy;
          e["recall"] = r.metrics.recall;
          e["auc"] = r.metrics.auc;
          e["ari"] = r.metrics.ari;
        } else {
          e["error"] = r.error;
        }
        jr.push_back(e);
      }
      j["results"] = jr;

      nlohmann::json js = nlohmann::json::array();
      for (const auto& s : report.summary) {
        nlohmann::json e;
        e["method"] = to_string(s.method);
        e["metric"] = s.metric;
        e["mean"] = s.mean;
        e["std"] = s.stddev;
        js.push_back(e);
      }
      j["summary"] = js;
      return j.dump(2) + "\n";
    }
    case ReportFormat::csv: {
      std::string out = "method,run,accuracy,recall,auc,ari\n";
      for (const auto& r : report.results) {
        if (!r.ok) continue;
        out += to_string(r.method);
        out += ',';
        out += std::to_string(r.run);
        out += ',';
        out += format_double(r.metrics.accuracy);
        out += ',';
        out += format_double(r.metrics.recall);
        out += ',';
        out += format_double(r.metrics.auc);
        out += ',';
        out += format_double(r.metrics.ari);
        out += '\n';
      }
      return out;
    }
    case ReportFormat::markdown: {
      const char* metric_names[] = {"accuracy", "recall", "auc", "ari"};
      // means laid out method x metric, taken from the summary rows
      const std::size_t n_methods = cfg.methods.size();
      std::vector<std::array<double, 4>> means(n_methods, {0, 0, 0, 0});
      std::vector<std::array<bool, 4>> has(n_methods, {false, false, false, false});
      for (const auto& s : report.summary) {
        for (std::size_t mi = 0; mi < n_methods; ++mi) {
          if (cfg.methods[mi] != s.method) continue;
          for (int k = 0; k < 4; ++k) {
            if (s.metric == metric_names[k]) {
              means[mi][static_cast<std::size_t>(k)] = s.mean;
              has[mi][static_cast<std::size_t>(k)] = true;
            }
          }
        }
      }
      std::array<std::size_t, 4> best{0, 0, 0, 0};
      for (int k = 0; k < 4; ++k) {
        double top = -2.0;
        for (std::size_t mi = 0; mi < n_methods; ++mi) {
          if (has[mi][static_cast<std::size_t>(k)] &&
              means[mi][static_cast<std::size_t>(k)] > top) {
            top = means[mi][static_cast<std::size_t>(k)];
            best[static_cast<std::size_t>(k)] = mi;
          }
        }
      }
      std::string out = "| method | accuracy | recall | auc | ari |\n";
      out += "|---|---|---|---|---|\n";
      char buf[64];
      for (std::size_t mi = 0; mi < n_methods; ++mi) {
        out += "| ";
        out += to_string(cfg.methods[mi]);
        for (int k = 0; k < 4; ++k) {
          out += " | ";
          if (!has[mi][static_cast<std::size_t>(k)]) {
            out += "-";
            continue;
          }
          std::snprintf(buf, sizeof(buf), "%.4f", means[mi][static_cast<std::size_t>(k)]);
          if (best[static_cast<std::size_t>(k)] == mi) {
            out += "**";
            out += buf;
            out += "**";
          } else {
            out += buf;
          }
        }
        out += " |\n";
      }
      return out;
    }
  }
  throw ConfigError("unknown report format");
}

void write_report(const BenchmarkReport& report, const std::string& path,
                  ReportFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write report: " + path);
  out << render_report(report, format);
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace mfl
