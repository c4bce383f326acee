// Experiment orchestration: runs the oracle/source/closed-form/non-parametric
// predictors over missingness-rate grids or random regimes, scores them by
// MSE/Var(Y) on the target test split, and aggregates with bootstrap
// confidence intervals.  Every trial derives its randomness from
// (seed, trial index), so results are bit-identical across reruns.
#ifndef DAMS_HARNESS_HPP
#define DAMS_HARNESS_HPP

#include <json.hpp>
#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dams/adapt.hpp"
#include "dams/datagen.hpp"
#include "dams/table.hpp"

namespace dams {

// Mean squared error divided by the population variance of y (computed on
// the same rows).  Requires n >= 2; zero label variance is an error.
double mse_over_var(const Eigen::VectorXd& preds, const Eigen::VectorXd& y);

// How each trial's missingness rates are chosen.
//   epsilon_grid:   m_s = [1-eps, eps], m_t = [eps, 1-eps] per grid value
//                   (two-covariate scenarios only)
//   regime:         random (m_s, m_t) draws from a RegimeKind sampler
//   explicit_rates: one fixed (m_s, m_t) pair from the config
enum class RateMode { epsilon_grid, regime, explicit_rates };

struct ExperimentConfig {
  // Data source: a generator scenario, or a CSV of numeric covariates whose
  // labels are redrawn synthetically per beta draw.
  std::optional<ScenarioKind> scenario;
  std::string dataset_path;
  std::int64_t n = 10000;  // rows per trial (scenario mode)
  double sigma_z = 1.0;
  double sigma_y = 1.0;
  double a = 1.0;
  double b = 1.0;
  double c = 1.0;

  RateMode rate_mode = RateMode::epsilon_grid;
  std::vector<double> epsilon_grid;  // empty -> 0.05, 0.10, ..., 0.95
  std::optional<RegimeKind> regime;
  Eigen::VectorXd m_source;  // explicit_rates mode
  Eigen::VectorXd m_target;

  std::vector<Method> methods{Method::oracle, Method::source,
                              Method::closed_form, Method::nonparam};
  int trials = 1;         // repetitions per epsilon / explicit-rate draws
  int regime_draws = 50;  // number of regime draws (regime mode)
  int beta_draws = 10;    // synthetic label redraws (dataset mode)
  std::uint64_t seed = 0;
  std::optional<double> alpha_override;
  double ridge_eps = 0.0;
  int bootstrap_resamples = 1000;
  bool add_const_column = false;  // append an always-observed 1s column
};

// Reads the JSON experiment description; unknown keys are usage errors.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
void validate(const ExperimentConfig& cfg);

// The default 0.05..0.95 step 0.05 grid.
std::vector<double> default_epsilon_grid();

struct TrialRecord {
  int trial = 0;
  // Grid position in epsilon_grid mode; NaN otherwise.
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd m_source;
  Eigen::VectorXd m_target;
  Eigen::VectorXd r_hat;  // NaN components when inestimable
  std::map<Method, double> metrics;  // skipped methods have no entry
  std::vector<Method> skipped;
};

struct MethodSummary {
  Method method = Method::oracle;
  double mean = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  int n_trials = 0;
};

struct ExperimentResult {
  std::vector<TrialRecord> trials;
  std::vector<MethodSummary> summary;
  std::string pooling;  // "epsilon-grid", "regime-draws", or "explicit-rates"
  double wall_time_seconds = 0.0;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// 95% percentile bootstrap interval for the mean (interval clamped to
// contain the sample mean).
std::pair<double, double> bootstrap_ci(const std::vector<double>& values,
                                       int resamples, std::uint64_t seed);

struct SweepRow {
  double epsilon = 0.0;
  Method method = Method::oracle;
  double metric = 0.0;
};

// Per-epsilon mean metric for each method; requires epsilon_grid records.
std::vector<SweepRow> epsilon_sweep(const ExperimentResult& result);

nlohmann::json to_json(const ExperimentConfig& cfg);
nlohmann::json to_json(const ExperimentResult& result);

// results.json: config + pooling + summary + per-trial records.  Wall time
// is deliberately left out so identical (config, seed) runs are
// byte-identical.
void write_results_json(const std::string& path, const ExperimentConfig& cfg,
                        const ExperimentResult& result);
// results.csv: method,mean,ci_lo,ci_hi,n_trials
void write_results_csv(const std::string& path, const ExperimentResult& result);
// sweep.csv: epsilon,method,metric
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

}  // namespace dams

#endif  // DAMS_HARNESS_HPP
