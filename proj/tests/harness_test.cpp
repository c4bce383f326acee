#include <doctest.h>

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "dams/errors.hpp"
#include "dams/harness.hpp"
#include "dams/json_io.hpp"
#include "dams/table.hpp"

using dams::ExperimentConfig;
using dams::ExperimentResult;
using dams::Method;
using dams::RateMode;

namespace fs = std::filesystem;

TEST_CASE("mse over variance worked examples") {
  Eigen::VectorXd y(4);
  y << 1, 2, 3, 4;

  CHECK(dams::mse_over_var(y, y) == 0.0);

  // Predicting the label mean scores exactly 1 under population variance.
  Eigen::VectorXd mean_pred = Eigen::VectorXd::Constant(4, y.mean());
  CHECK(dams::mse_over_var(mean_pred, y) == 1.0);

  Eigen::VectorXd y3(3);
  y3 << 0, 1, 2;
  CHECK(dams::mse_over_var(Eigen::VectorXd::Zero(3), y3) == doctest::Approx(2.5));
}

TEST_CASE("mse over variance error paths") {
  Eigen::VectorXd one(1);
  one << 3;
  CHECK_THROWS_AS(dams::mse_over_var(one, one), dams::UsageError);

  Eigen::VectorXd constant = Eigen::VectorXd::Constant(5, 2.0);
  CHECK_THROWS_AS(dams::mse_over_var(constant, constant), dams::NumericalError);

  Eigen::VectorXd y2(2);
  y2 << 0, 1;
  CHECK_THROWS_AS(dams::mse_over_var(Eigen::VectorXd::Zero(3), y2),
                  dams::UsageError);
}

TEST_CASE("bootstrap interval basics") {
  // Constant sample: the interval collapses onto the mean.
  std::vector<double> flat(10, 2.5);
  auto [flo, fhi] = dams::bootstrap_ci(flat, 500, 1);
  CHECK(flo == 2.5);
  CHECK(fhi == 2.5);

  auto [slo, shi] = dams::bootstrap_ci({7.0}, 100, 2);
  CHECK(slo == 7.0);
  CHECK(shi == 7.0);

  // Determinism in the seed.
  std::vector<double> values{1, 5, 2, 8, 3, 9, 4, 2, 6, 7};
  auto a = dams::bootstrap_ci(values, 1000, 11);
  auto b = dams::bootstrap_ci(values, 1000, 11);
  CHECK(a == b);

  CHECK_THROWS_AS(dams::bootstrap_ci(values, 0, 1), dams::UsageError);
}

TEST_CASE("bootstrap interval matches the normal-theory width") {
  // 400 standard normal draws: the 95% bootstrap CI of the mean should be
  // close to mean +- 1.96/sqrt(400) = mean +- 0.098.
  std::mt19937 rng(99);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> values(400);
  for (double& v : values) v = normal(rng);
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / values.size();

  auto [lo, hi] = dams::bootstrap_ci(values, 2000, 5);
  CHECK(lo <= mean);
  CHECK(hi >= mean);
  CHECK((hi - lo) / 2 == doctest::Approx(0.098).epsilon(0.25));

  // Continuous values make quantile collisions across seeds implausible.
  auto other = dams::bootstrap_ci(values, 2000, 6);
  CHECK(std::pair(lo, hi) != other);
}

TEST_CASE("experiment config json parsing and validation") {
  nlohmann::json j{{"scenario", "example2"},
                   {"n", 500},
                   {"m_source", {0.0, 0.0}},
                   {"m_target", {0.0, 0.0}},
                   {"methods", {"oracle", "source"}},
                   {"trials", 3},
                   {"seed", 42},
                   {"alpha", 0.5},
                   {"ridge", 1e-10},
                   {"bootstrap", 200}};
  ExperimentConfig cfg = dams::experiment_config_from_json(j);
  CHECK(cfg.scenario == dams::ScenarioKind::example2);
  CHECK(cfg.rate_mode == RateMode::explicit_rates);
  CHECK(cfg.n == 500);
  CHECK(cfg.trials == 3);
  CHECK(cfg.seed == 42);
  REQUIRE(cfg.alpha_override.has_value());
  CHECK(*cfg.alpha_override == 0.5);
  CHECK(cfg.methods == std::vector<Method>{Method::oracle, Method::source});

  // Scenario with no rate specification defaults to the epsilon grid.
  ExperimentConfig grid = dams::experiment_config_from_json(
      nlohmann::json{{"scenario", "redundant"}});
  CHECK(grid.rate_mode == RateMode::epsilon_grid);
  CHECK(dams::default_epsilon_grid().size() == 19);
  CHECK(dams::default_epsilon_grid().front() == doctest::Approx(0.05));
  CHECK(dams::default_epsilon_grid().back() == doctest::Approx(0.95));

  // Dataset with no rate specification defaults to ordered regime draws.
  ExperimentConfig ds = dams::experiment_config_from_json(
      nlohmann::json{{"dataset", "covariates.csv"}});
  CHECK(ds.rate_mode == RateMode::regime);
  CHECK(ds.regime == dams::RegimeKind::ordered);

  const auto bad = [](nlohmann::json patch) {
    CHECK_THROWS_AS(dams::experiment_config_from_json(patch), dams::UsageError);
  };
  bad(nlohmann::json{{"scenario", "redundant"}, {"dataset", "x.csv"}});
  bad(nlohmann::json::object());  // neither scenario nor dataset
  bad(nlohmann::json{{"scenario", "redundant"}, {"bogus_key", 1}});
  bad(nlohmann::json{{"scenario", "redundant"}, {"n", 5}});
  bad(nlohmann::json{{"scenario", "redundant"}, {"trials", 0}});
  bad(nlohmann::json{{"scenario", "redundant"}, {"epsilon_grid", {0.5}}, {"regime", "ordered"}});
  bad(nlohmann::json{{"scenario", "redundant"}, {"m_source", {0.1, 0.1}}});
  bad(nlohmann::json{{"scenario", "redundant"}, {"epsilon_grid", {0.0, 0.5}}});
  bad(nlohmann::json{{"scenario", "redundant"}, {"methods", {"oracle", "oracle"}}});
  bad(nlohmann::json{{"scenario", "redundant"}, {"alpha", 1.5}});
  bad(nlohmann::json{{"dataset", "x.csv"}, {"epsilon_grid", {0.5}}});

  // Config serialization round-trips.
  ExperimentConfig back = dams::experiment_config_from_json(dams::to_json(cfg));
  CHECK(back.rate_mode == RateMode::explicit_rates);
  CHECK(back.n == cfg.n);
  CHECK(back.seed == cfg.seed);
  CHECK(back.methods == cfg.methods);
  CHECK((back.m_source.array() == cfg.m_source.array()).all());
}

TEST_CASE("matched domains score all methods alike") {
  // With m_s = m_t = 0 every method sees the same distribution; continuous
  // covariates give exact nonzero rates of 1, so the estimated relative
  // missingness is exactly zero and the non-parametric filter keeps every
  // cell.  The methods then differ only through which split they train on,
  // so their scores agree up to sampling noise (well within 0.02).
  ExperimentConfig cfg;
  cfg.scenario = dams::ScenarioKind::example2;
  cfg.n = 5000;
  cfg.rate_mode = RateMode::explicit_rates;
  cfg.m_source = Eigen::Vector2d(0, 0);
  cfg.m_target = Eigen::Vector2d(0, 0);
  cfg.trials = 1;
  cfg.seed = 7;
  cfg.bootstrap_resamples = 200;

  ExperimentResult result = dams::run_experiment(cfg);
  REQUIRE(result.trials.size() == 1);
  CHECK(result.pooling == "explicit-rates");
  const auto& rec = result.trials[0];
  REQUIRE(rec.metrics.size() == 4);
  CHECK(rec.skipped.empty());
  CHECK(rec.r_hat.norm() == 0.0);

  const double oracle = rec.metrics.at(Method::oracle);
  const double source = rec.metrics.at(Method::source);
  const double closed = rec.metrics.at(Method::closed_form);
  const double nonparam = rec.metrics.at(Method::nonparam);
  // Population value is 1/(b^2 + 2abc + a^2 c^2 + c^2 + 1) = 1/11.
  CHECK(oracle == doctest::Approx(1.0 / 11).epsilon(0.35));
  CHECK(std::abs(oracle - source) < 0.02);
  CHECK(std::abs(oracle - closed) < 0.02);
  // Zero filter rates leave the source rows untouched, so the
  // non-parametric fit coincides with the source fit exactly.
  CHECK(nonparam == source);

  for (const auto& s : result.summary) {
    CHECK(s.n_trials == 1);
    CHECK(s.ci_lo <= s.mean);
    CHECK(s.mean <= s.ci_hi);
  }
}

TEST_CASE("epsilon grid trials record rates and skip bookkeeping") {
  ExperimentConfig cfg;
  cfg.scenario = dams::ScenarioKind::example1;
  cfg.n = 2000;
  cfg.rate_mode = RateMode::epsilon_grid;
  cfg.epsilon_grid = {0.1, 0.9};
  cfg.trials = 2;
  cfg.seed = 21;
  cfg.bootstrap_resamples = 100;

  ExperimentResult result = dams::run_experiment(cfg);
  REQUIRE(result.trials.size() == 4);
  CHECK(result.pooling == "epsilon-grid");

  for (const auto& rec : result.trials) {
    // Rates follow m_s = [1-eps, eps], m_t = [eps, 1-eps].
    CHECK(rec.m_source[0] == doctest::Approx(1 - rec.epsilon));
    CHECK(rec.m_source[1] == doctest::Approx(rec.epsilon));
    CHECK(rec.m_target[0] == doctest::Approx(rec.epsilon));
    CHECK(rec.m_target[1] == doctest::Approx(1 - rec.epsilon));

    // Both grid points reverse the dominant masking direction on one
    // feature, so some estimated relative missingness is deeply negative
    // and the non-parametric method must be skipped — exactly when
    // min_j r_hat_j < -1e-9.
    CHECK(rec.r_hat.minCoeff() < -1e-9);
    REQUIRE(rec.skipped.size() == 1);
    CHECK(rec.skipped[0] == Method::nonparam);
    CHECK(rec.metrics.count(Method::nonparam) == 0);
    CHECK(rec.metrics.count(Method::oracle) == 1);

    // Oracle trains on the evaluation distribution.
    CHECK(rec.metrics.at(Method::oracle) <=
          rec.metrics.at(Method::source) + 0.02);
  }

  // Closed-form adaptation beats the unadjusted source model at eps = 0.1,
  // where the source-optimal coefficients are badly misaligned.
  double closed_sum = 0, source_sum = 0;
  for (const auto& rec : result.trials) {
    if (rec.epsilon != 0.1) continue;
    closed_sum += rec.metrics.at(Method::closed_form);
    source_sum += rec.metrics.at(Method::source);
  }
  CHECK(closed_sum / 2 + 0.1 < source_sum / 2);

  // Nonparam was skipped everywhere: its summary is empty.
  for (const auto& s : result.summary) {
    if (s.method == Method::nonparam) {
      CHECK(s.n_trials == 0);
      CHECK(std::isnan(s.mean));
    } else {
      CHECK(s.n_trials == 4);
    }
  }

  // The sweep averages the per-epsilon repetitions: 2 grid values times
  // 3 methods with metrics.
  auto rows = dams::epsilon_sweep(result);
  REQUIRE(rows.size() == 6);
  CHECK(rows.front().epsilon == doctest::Approx(0.1));
  CHECK(rows.back().epsilon == doctest::Approx(0.9));
  for (const auto& row : rows) CHECK(row.metric > 0);
}

TEST_CASE("experiments are bit-identical given the seed") {
  ExperimentConfig cfg;
  cfg.scenario = dams::ScenarioKind::redundant;
  cfg.n = 400;
  cfg.rate_mode = RateMode::epsilon_grid;
  cfg.epsilon_grid = {0.25};
  cfg.trials = 2;
  cfg.seed = 5;
  cfg.bootstrap_resamples = 50;
  cfg.methods = {Method::oracle, Method::source, Method::closed_form};

  const std::string a = dams::to_json(dams::run_experiment(cfg)).dump();
  const std::string b = dams::to_json(dams::run_experiment(cfg)).dump();
  CHECK(a == b);

  cfg.seed = 6;
  const std::string c = dams::to_json(dams::run_experiment(cfg)).dump();
  CHECK(a != c);
}

TEST_CASE("dataset mode crosses beta draws with regime draws") {
  const fs::path dir = fs::temp_directory_path() / "dams_harness_ds";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string csv = (dir / "cov.csv").string();

  // 40 rows, 3 numeric covariates.
  std::mt19937 rng(3);
  std::normal_distribution<double> normal(1.0, 1.0);
  dams::UnlabeledTable cov;
  cov.x.resize(40, 3);
  for (Eigen::Index i = 0; i < cov.x.size(); ++i)
    cov.x(i / 3, i % 3) = normal(rng);
  cov.columns = dams::default_columns(3);
  dams::write_csv(csv, cov);

  ExperimentConfig cfg;
  cfg.dataset_path = csv;
  cfg.rate_mode = RateMode::regime;
  cfg.regime = dams::RegimeKind::ordered;
  cfg.regime_draws = 3;
  cfg.beta_draws = 2;
  cfg.seed = 17;
  cfg.bootstrap_resamples = 100;
  cfg.methods = {Method::oracle, Method::source};
  cfg.add_const_column = true;

  ExperimentResult result = dams::run_experiment(cfg);
  REQUIRE(result.trials.size() == 6);
  CHECK(result.pooling == "regime-draws");

  // Crossed design: trial t and trial t+3 share the same regime draw but use
  // different synthetic labels.
  for (int g = 0; g < 3; ++g) {
    const auto& first = result.trials[g];
    const auto& second = result.trials[g + 3];
    CHECK((first.m_source.array() == second.m_source.array()).all());
    CHECK((first.m_target.array() == second.m_target.array()).all());
    CHECK(first.metrics.at(Method::oracle) != second.metrics.at(Method::oracle));
    // Ordered regime: target masks at least as much as the source.
    CHECK((first.m_target.array() >= first.m_source.array()).all());
    CHECK(first.m_source.size() == 3);  // the forced-constant column is extra
    CHECK(first.r_hat.size() == 4);
    // The appended constant column is never masked: its relative
    // missingness estimate is exactly zero.
    CHECK(first.r_hat[3] == 0.0);
  }
  fs::remove_all(dir);
}

TEST_CASE("result files have the promised shapes") {
  ExperimentConfig cfg;
  cfg.scenario = dams::ScenarioKind::example2;
  cfg.n = 300;
  cfg.rate_mode = RateMode::epsilon_grid;
  cfg.epsilon_grid = {0.3, 0.7};
  cfg.trials = 1;
  cfg.seed = 9;
  cfg.bootstrap_resamples = 50;
  cfg.methods = {Method::oracle, Method::source, Method::closed_form};

  ExperimentResult result = dams::run_experiment(cfg);
  const fs::path dir = fs::temp_directory_path() / "dams_harness_files";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const std::string results_json = (dir / "results.json").string();
  const std::string results_csv = (dir / "results.csv").string();
  const std::string sweep_csv = (dir / "sweep.csv").string();
  dams::write_results_json(results_json, cfg, result);
  dams::write_results_csv(results_csv, result);
  dams::write_sweep_csv(sweep_csv, dams::epsilon_sweep(result));

  nlohmann::json loaded = dams::read_json_file(results_json);
  CHECK(loaded.at("pooling") == "epsilon-grid");
  CHECK(loaded.at("trials").size() == 2);
  CHECK(loaded.at("summary").size() == 3);
  CHECK(loaded.at("trials")[0].contains("epsilon"));
  CHECK(loaded.at("trials")[0].at("metrics").size() == 3);
  // The embedded config parses back into a valid configuration.
  ExperimentConfig back = dams::experiment_config_from_json(loaded.at("config"));
  CHECK(back.n == cfg.n);
  CHECK(back.epsilon_grid == cfg.epsilon_grid);

  const std::string csv_text = dams::read_text(results_csv);
  CHECK(csv_text.rfind("method,mean,ci_lo,ci_hi,n_trials\n", 0) == 0);
  CHECK(std::count(csv_text.begin(), csv_text.end(), '\n') == 4);

  const std::string sweep_text = dams::read_text(sweep_csv);
  CHECK(sweep_text.rfind("epsilon,method,metric\n", 0) == 0);
  CHECK(std::count(sweep_text.begin(), sweep_text.end(), '\n') == 7);
  fs::remove_all(dir);
}

TEST_CASE("explicit-rate validation catches shape errors at run time") {
  ExperimentConfig cfg;
  cfg.scenario = dams::ScenarioKind::redundant;
  cfg.rate_mode = RateMode::explicit_rates;
  cfg.m_source = Eigen::VectorXd::Zero(3);  // scenarios have two covariates
  cfg.m_target = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(dams::run_experiment(cfg), dams::UsageError);

  cfg.m_source = Eigen::Vector2d(0.2, 1.3);
  cfg.m_target = Eigen::Vector2d(0.2, 0.4);
  CHECK_THROWS_AS(dams::run_experiment(cfg), dams::UsageError);
}
