#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "mfl/errors.hpp"
#include "mfl/tune.hpp"
#include "support.hpp"

using namespace mfl;

namespace {

Dataset tune_fixture() { return testsupport::make_imbalanced(160, 0.15, 404, 3); }

SearchSpace small_space() {
  SearchSpace s;
  s.trees_lo = 3;
  s.trees_hi = 8;
  s.budget = 4;
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("tune");

TEST_CASE("budget 1 returns the default configuration") {
  SearchSpace s = small_space();
  s.trees_lo = 10;
  s.trees_hi = 40;
  s.budget = 1;
  const TuneResult r = tune(tune_fixture(), s, 7);
  REQUIRE(r.trials.size() == 1);
  CHECK(r.alpha == 0.95);
  CHECK(r.gamma == 2.0);
  CHECK(r.n_trees == 20);
}

TEST_CASE("the default trial is clamped into a narrowed space") {
  SearchSpace s;
  s.alpha_lo = 0.6;
  s.alpha_hi = 0.9;
  s.gamma_lo = 3.0;
  s.gamma_hi = 4.0;
  s.trees_lo = 3;
  s.trees_hi = 6;
  s.budget = 1;
  const TuneResult r = tune(tune_fixture(), s, 7);
  CHECK(r.alpha == 0.9);
  CHECK(r.gamma == 3.0);
  CHECK(r.n_trees == 6);
}

TEST_CASE("returned parameters lie inside the space and match the log argmax") {
  const SearchSpace s = small_space();
  const TuneResult r = tune(tune_fixture(), s, 11);
  CHECK(r.trials.size() == 4);
  double best = -1.0;
  for (const auto& t : r.trials) {
    CHECK(t.alpha >= s.alpha_lo);
    CHECK(t.alpha <= s.alpha_hi);
    CHECK(t.gamma >= s.gamma_lo);
    CHECK(t.gamma <= s.gamma_hi);
    CHECK(t.n_trees >= s.trees_lo);
    CHECK(t.n_trees <= s.trees_hi);
    CHECK(t.validation_score >= 0.0);
    CHECK(t.validation_score <= 1.0);
    best = std::max(best, t.validation_score);
  }
  CHECK(r.best_score == best);
  // ties go to the earliest trial
  for (const auto& t : r.trials) {
    if (t.validation_score == r.best_score) {
      CHECK(t.alpha == r.alpha);
      CHECK(t.gamma == r.gamma);
      CHECK(t.n_trees == r.n_trees);
      break;
    }
  }
}

TEST_CASE("point alpha and gamma ranges cap the log at the tree-range cardinality") {
  SearchSpace s;
  s.alpha_lo = s.alpha_hi = 0.9;
  s.gamma_lo = s.gamma_hi = 1.0;
  s.trees_lo = 3;
  s.trees_hi = 5;
  s.budget = 50;
  const TuneResult r = tune(tune_fixture(), s, 3);
  CHECK(r.trials.size() == 3);  // min(budget, cardinality)
  // every distinct tree count appears exactly once
  std::set<int> seen;
  for (const auto& t : r.trials) seen.insert(t.n_trees);
  CHECK(seen == std::set<int>{3, 4, 5});
}

TEST_CASE("same seed reproduces the identical trial sequence") {
  const SearchSpace s = small_space();
  const TuneResult a = tune(tune_fixture(), s, 21);
  const TuneResult b = tune(tune_fixture(), s, 21);
  REQUIRE(a.trials.size() == b.trials.size());
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    CHECK(a.trials[i].alpha == b.trials[i].alpha);
    CHECK(a.trials[i].gamma == b.trials[i].gamma);
    CHECK(a.trials[i].n_trees == b.trials[i].n_trees);
    CHECK(a.trials[i].validation_score == b.trials[i].validation_score);
  }
}

TEST_CASE("expected-improvement mode stays deterministic and in-space") {
  SearchSpace s = small_space();
  s.strategy = SearchSpace::Strategy::expected_improvement;
  s.budget = 6;
  const TuneResult a = tune(tune_fixture(), s, 5);
  const TuneResult b = tune(tune_fixture(), s, 5);
  REQUIRE(a.trials.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(a.trials[i].alpha == b.trials[i].alpha);
    CHECK(a.trials[i].n_trees == b.trials[i].n_trees);
    CHECK(a.trials[i].alpha >= s.alpha_lo);
    CHECK(a.trials[i].alpha <= s.alpha_hi);
    CHECK(a.trials[i].n_trees >= s.trees_lo);
    CHECK(a.trials[i].n_trees <= s.trees_hi);
  }
}

TEST_CASE("trial log exports the documented CSV columns") {
  SearchSpace s = small_space();
  s.budget = 2;
  const TuneResult r = tune(tune_fixture(), s, 9);
  const std::string csv = trials_csv(r);
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "trial,alpha,gamma,M,val_auc,seconds");
  int rows = 0;
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 2);

  testsupport::TempFile f("trials");
  write_trials_csv(r, f.path());
  std::ifstream in(f.path());
  std::string from_file((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  CHECK(from_file == csv);
}

TEST_CASE("invalid spaces and unsplittable data are rejected") {
  SearchSpace bad;
  bad.budget = 0;
  CHECK_THROWS_AS(tune(tune_fixture(), bad, 1), ConfigError);
  SearchSpace inverted;
  inverted.alpha_lo = 0.9;
  inverted.alpha_hi = 0.6;
  CHECK_THROWS_AS(tune(tune_fixture(), inverted, 1), ConfigError);

  std::vector<std::vector<double>> rows{{1.0}, {2.0}, {3.0}};
  const auto single = testsupport::make_dataset(rows, {0, 0, 0});
  CHECK_THROWS_AS(tune(single, small_space(), 1), DataError);
}

TEST_SUITE_END();
