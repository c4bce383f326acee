#include "dams/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include "dams/errors.hpp"
#include "dams/json_io.hpp"
#include "dams/moments.hpp"
#include "dams/rng.hpp"

namespace dams {
namespace {

// Sub-seed purposes: every random ingredient of a trial draws from its own
// derived seed, so trials are independent and order-insensitive.
enum : std::uint64_t {
  kPurposeClean = 1,
  kPurposeSplit = 2,
  kPurposeMaskSource = 3,
  kPurposeMaskTargetTrain = 4,
  kPurposeMaskTargetTest = 5,
  kPurposeFilter = 6,
  kPurposeRegime = 7,
  kPurposeLabels = 8,
  kPurposeBootstrap = 9,
};

std::uint64_t sub_seed(std::uint64_t master, std::uint64_t index,
                       std::uint64_t purpose) {
  return mix64(cell_key(master, RngStream::kDerive, index, purpose));
}

void append_const_column(LabeledTable& table) {
  table.x.conservativeResize(Eigen::NoChange, table.x.cols() + 1);
  table.x.col(table.x.cols() - 1).setOnes();
  table.columns.push_back("const");
}

struct TrialPlan {
  int trial = 0;
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd m_source;
  Eigen::VectorXd m_target;
  int beta_index = 0;  // dataset mode: which synthetic label draw
};

TrialRecord run_one_trial(const ExperimentConfig& cfg, const LabeledTable& clean,
                          const TrialPlan& plan) {
  const auto t = static_cast<std::uint64_t>(plan.trial);
  SplitParts parts = split_4141(clean, sub_seed(cfg.seed, t, kPurposeSplit));
  LabeledTable src_train =
      apply_mask(parts.source_train, plan.m_source,
                 sub_seed(cfg.seed, t, kPurposeMaskSource));
  LabeledTable tgt_train =
      apply_mask(parts.target_train, plan.m_target,
                 sub_seed(cfg.seed, t, kPurposeMaskTargetTrain));
  LabeledTable tgt_test =
      apply_mask(parts.target_test, plan.m_target,
                 sub_seed(cfg.seed, t, kPurposeMaskTargetTest));
  if (cfg.add_const_column) {
    append_const_column(src_train);
    append_const_column(tgt_train);
    append_const_column(tgt_test);
  }

  TrialRecord rec;
  rec.trial = plan.trial;
  rec.epsilon = plan.epsilon;
  rec.m_source = plan.m_source;
  rec.m_target = plan.m_target;
  try {
    rec.r_hat = estimate_relative_missingness(estimate_nonzero_rates(src_train.x),
                                              estimate_nonzero_rates(tgt_train.x));
  } catch (const NumericalError&) {
    // Some source column is empty while the target one is not; methods that
    // need r-hat will raise the same error below if they were requested.
    rec.r_hat = Eigen::VectorXd::Constant(
        src_train.cols(), std::numeric_limits<double>::quiet_NaN());
  }

  for (Method method : cfg.methods) {
    Eigen::VectorXd preds;
    switch (method) {
      case Method::oracle: {
        LinearModel model = fit_source_ols(tgt_train, cfg.ridge_eps);
        model.method = Method::oracle;
        preds = predict(model, tgt_test.x);
        break;
      }
      case Method::source: {
        LinearModel model = fit_source_ols(src_train, cfg.ridge_eps);
        preds = predict(model, tgt_test.x);
        break;
      }
      case Method::closed_form: {
        LinearModel model =
            closed_form_target(src_train, tgt_train.covariates(),
                               cfg.alpha_override, cfg.ridge_eps);
        preds = predict(model, tgt_test.x);
        break;
      }
      case Method::nonparam: {
        try {
          NonparamResult res =
              nonparam_adapt(src_train, tgt_train.covariates(),
                             sub_seed(cfg.seed, t, kPurposeFilter));
          preds = res.predictor.predict(tgt_test.x);
        } catch (const InapplicableError&) {
          rec.skipped.push_back(method);
          continue;
        }
        break;
      }
    }
    rec.metrics[method] = mse_over_var(preds, tgt_test.y);
  }
  return rec;
}

}  // namespace

double mse_over_var(const Eigen::VectorXd& preds, const Eigen::VectorXd& y) {
  if (preds.size() != y.size())
    throw UsageError("prediction and label vectors differ in length");
  if (y.size() < 2) throw UsageError("need at least two rows to score");
  const double mean = y.mean();
  const double var = (y.array() - mean).square().mean();
  if (var <= 0.0) throw NumericalError("labels have zero variance");
  return (y - preds).squaredNorm() / static_cast<double>(y.size()) / var;
}

std::vector<double> default_epsilon_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 19; ++i) grid.push_back(i * 0.05);
  return grid;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.scenario.has_value() == !cfg.dataset_path.empty())
    throw UsageError("config must name exactly one of scenario or dataset");
  if (cfg.scenario && cfg.n < 10)
    throw UsageError("scenario experiments need n >= 10");
  if (cfg.trials < 1) throw UsageError("trials must be at least 1");
  if (cfg.regime_draws < 1) throw UsageError("regime_draws must be at least 1");
  if (cfg.beta_draws < 1) throw UsageError("beta_draws must be at least 1");
  if (cfg.bootstrap_resamples < 1)
    throw UsageError("bootstrap resample count must be at least 1");
  if (cfg.ridge_eps < 0) throw UsageError("ridge must be non-negative");
  if (cfg.alpha_override && (*cfg.alpha_override < 0 || *cfg.alpha_override > 1))
    throw UsageError("alpha must lie in [0, 1]");
  if (cfg.methods.empty()) throw UsageError("at least one method is required");
  std::set<Method> seen;
  for (Method m : cfg.methods)
    if (!seen.insert(m).second)
      throw UsageError("method \"" + method_name(m) + "\" listed twice");

  switch (cfg.rate_mode) {
    case RateMode::epsilon_grid: {
      if (!cfg.scenario)
        throw UsageError(
            "the epsilon grid defines two-feature rates; use a regime or "
            "explicit rates with a dataset");
      for (double eps : cfg.epsilon_grid)
        if (!(eps > 0.0 && eps < 1.0))
          throw UsageError("epsilon grid values must lie in (0, 1)");
      break;
    }
    case RateMode::regime:
      if (!cfg.regime) throw UsageError("regime mode needs a regime kind");
      break;
    case RateMode::explicit_rates: {
      if (cfg.m_source.size() == 0 || cfg.m_source.size() != cfg.m_target.size())
        throw UsageError("explicit rates need m_source and m_target of equal length");
      for (Eigen::Index j = 0; j < cfg.m_source.size(); ++j)
        if (cfg.m_source[j] < 0 || cfg.m_source[j] > 1 || cfg.m_target[j] < 0 ||
            cfg.m_target[j] > 1)
          throw UsageError("explicit rates must lie in [0, 1]");
      if (cfg.scenario && cfg.m_source.size() != 2)
        throw UsageError("scenario data has two covariates; rates must have length 2");
      break;
    }
  }
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  const bool dataset_mode = !cfg.dataset_path.empty();

  UnlabeledTable dataset;
  int d = 2;
  if (dataset_mode) {
    dataset = read_unlabeled_csv(cfg.dataset_path);
    if (dataset.rows() < 10)
      throw UsageError("dataset '" + cfg.dataset_path + "' has fewer than 10 rows");
    d = static_cast<int>(dataset.cols());
    if (cfg.rate_mode == RateMode::explicit_rates && cfg.m_source.size() != d)
      throw UsageError("explicit rates must match the dataset column count");
  }

  ExperimentResult result;
  std::vector<TrialPlan> plans;
  const int betas = dataset_mode ? cfg.beta_draws : 1;
  if (cfg.rate_mode == RateMode::epsilon_grid) {
    result.pooling = "epsilon-grid";
    const std::vector<double> grid =
        cfg.epsilon_grid.empty() ? default_epsilon_grid() : cfg.epsilon_grid;
    int t = 0;
    for (double eps : grid) {
      for (int rep = 0; rep < cfg.trials; ++rep, ++t) {
        TrialPlan plan;
        plan.trial = t;
        plan.epsilon = eps;
        plan.m_source = Eigen::Vector2d(1.0 - eps, eps);
        plan.m_target = Eigen::Vector2d(eps, 1.0 - eps);
        plans.push_back(std::move(plan));
      }
    }
  } else if (cfg.rate_mode == RateMode::regime) {
    result.pooling = "regime-draws";
    int t = 0;
    for (int b = 0; b < betas; ++b) {
      for (int g = 0; g < cfg.regime_draws; ++g, ++t) {
        // The regime seed depends on the draw index only, so beta draws are
        // crossed with the same set of regimes.
        RegimePair pair = sample_regime(
            *cfg.regime, d,
            sub_seed(cfg.seed, static_cast<std::uint64_t>(g), kPurposeRegime));
        TrialPlan plan;
        plan.trial = t;
        plan.m_source = pair.source.m;
        plan.m_target = pair.target.m;
        plan.beta_index = b;
        plans.push_back(std::move(plan));
      }
    }
  } else {
    result.pooling = "explicit-rates";
    int t = 0;
    for (int b = 0; b < betas; ++b) {
      for (int rep = 0; rep < cfg.trials; ++rep, ++t) {
        TrialPlan plan;
        plan.trial = t;
        plan.m_source = cfg.m_source;
        plan.m_target = cfg.m_target;
        plan.beta_index = b;
        plans.push_back(std::move(plan));
      }
    }
  }

  std::vector<LabeledTable> bases;
  if (dataset_mode) {
    bases.reserve(static_cast<std::size_t>(betas));
    for (int b = 0; b < betas; ++b)
      bases.push_back(semi_synthetic_labels(
          dataset, sub_seed(cfg.seed, static_cast<std::uint64_t>(b), kPurposeLabels)));
  }

  for (const TrialPlan& plan : plans) {
    LabeledTable generated;
    const LabeledTable* clean = nullptr;
    if (dataset_mode) {
      clean = &bases[static_cast<std::size_t>(plan.beta_index)];
    } else {
      ScenarioSpec spec;
      spec.kind = *cfg.scenario;
      spec.n = cfg.n;
      spec.seed = sub_seed(cfg.seed, static_cast<std::uint64_t>(plan.trial),
                           kPurposeClean);
      spec.sigma_z = cfg.sigma_z;
      spec.sigma_y = cfg.sigma_y;
      spec.a = cfg.a;
      spec.b = cfg.b;
      spec.c = cfg.c;
      generated = generate_clean(spec);
      clean = &generated;
    }
    result.trials.push_back(run_one_trial(cfg, *clean, plan));
  }

  for (Method method : cfg.methods) {
    std::vector<double> values;
    for (const TrialRecord& rec : result.trials) {
      auto it = rec.metrics.find(method);
      if (it != rec.metrics.end()) values.push_back(it->second);
    }
    MethodSummary s;
    s.method = method;
    s.n_trials = static_cast<int>(values.size());
    if (values.empty()) {
      s.mean = s.ci_lo = s.ci_hi = std::numeric_limits<double>::quiet_NaN();
    } else {
      s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
               static_cast<double>(values.size());
      std::tie(s.ci_lo, s.ci_hi) = bootstrap_ci(
          values, cfg.bootstrap_resamples,
          sub_seed(cfg.seed, static_cast<std::uint64_t>(method), kPurposeBootstrap));
    }
    result.summary.push_back(s);
  }

  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

std::pair<double, double> bootstrap_ci(const std::vector<double>& values,
                                       int resamples, std::uint64_t seed) {
  if (values.empty())
    return {std::numeric_limits<double>::quiet_NaN(),
            std::numeric_limits<double>::quiet_NaN()};
  if (resamples < 1) throw UsageError("bootstrap resample count must be at least 1");
  const auto n = values.size();
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                      static_cast<double>(n);
  Counter64 gen(seed, RngStream::kBootstrap);
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      sum += values[static_cast<std::size_t>(gen.next_below(n))];
    means.push_back(sum / static_cast<double>(n));
  }
  std::sort(means.begin(), means.end());
  auto index_at = [&](double level) {
    auto idx = static_cast<std::ptrdiff_t>(std::floor(level * resamples));
    idx = std::clamp<std::ptrdiff_t>(idx, 0, resamples - 1);
    return static_cast<std::size_t>(idx);
  };
  double lo = means[index_at(0.025)];
  double hi = means[static_cast<std::size_t>(
      std::clamp<std::ptrdiff_t>(
          static_cast<std::ptrdiff_t>(std::ceil(0.975 * resamples)) - 1, 0,
          resamples - 1))];
  // The interval always contains the sample mean.
  return {std::min(lo, mean), std::max(hi, mean)};
}

std::vector<SweepRow> epsilon_sweep(const ExperimentResult& result) {
  std::map<std::pair<double, Method>, std::pair<double, int>> sums;
  for (const TrialRecord& rec : result.trials) {
    if (std::isnan(rec.epsilon))
      throw UsageError("epsilon sweep needs epsilon-grid trial records");
    for (const auto& [method, metric] : rec.metrics) {
      auto& cell = sums[{rec.epsilon, method}];
      cell.first += metric;
      cell.second += 1;
    }
  }
  std::vector<SweepRow> rows;
  rows.reserve(sums.size());
  for (const auto& [key, cell] : sums)
    rows.push_back({key.first, key.second, cell.first / cell.second});
  return rows;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  if (cfg.scenario) j["scenario"] = scenario_name(*cfg.scenario);
  if (!cfg.dataset_path.empty()) j["dataset"] = cfg.dataset_path;
  j["n"] = cfg.n;
  j["sigma_z"] = cfg.sigma_z;
  j["sigma_y"] = cfg.sigma_y;
  j["a"] = cfg.a;
  j["b"] = cfg.b;
  j["c"] = cfg.c;
  switch (cfg.rate_mode) {
    case RateMode::epsilon_grid:
      j["epsilon_grid"] =
          cfg.epsilon_grid.empty() ? default_epsilon_grid() : cfg.epsilon_grid;
      break;
    case RateMode::regime:
      j["regime"] = regime_name(*cfg.regime);
      break;
    case RateMode::explicit_rates: {
      nlohmann::json ms = nlohmann::json::array();
      nlohmann::json mt = nlohmann::json::array();
      for (Eigen::Index i = 0; i < cfg.m_source.size(); ++i) {
        ms.push_back(cfg.m_source[i]);
        mt.push_back(cfg.m_target[i]);
      }
      j["m_source"] = ms;
      j["m_target"] = mt;
      break;
    }
  }
  nlohmann::json methods = nlohmann::json::array();
  for (Method m : cfg.methods) methods.push_back(method_name(m));
  j["methods"] = methods;
  j["trials"] = cfg.trials;
  j["regime_draws"] = cfg.regime_draws;
  j["beta_draws"] = cfg.beta_draws;
  j["seed"] = cfg.seed;
  if (cfg.alpha_override)
    j["alpha"] = *cfg.alpha_override;
  else
    j["alpha"] = nullptr;
  j["ridge"] = cfg.ridge_eps;
  j["bootstrap"] = cfg.bootstrap_resamples;
  j["add_const_column"] = cfg.add_const_column;
  return j;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("experiment config: expected a JSON object");
  ExperimentConfig cfg;
  bool has_grid = false, has_regime = false, has_ms = false, has_mt = false;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "scenario") {
        cfg.scenario = scenario_from_name(value.get<std::string>());
      } else if (key == "dataset") {
        cfg.dataset_path = value.get<std::string>();
      } else if (key == "n") {
        cfg.n = value.get<std::int64_t>();
      } else if (key == "sigma_z") {
        cfg.sigma_z = value.get<double>();
      } else if (key == "sigma_y") {
        cfg.sigma_y = value.get<double>();
      } else if (key == "a") {
        cfg.a = value.get<double>();
      } else if (key == "b") {
        cfg.b = value.get<double>();
      } else if (key == "c") {
        cfg.c = value.get<double>();
      } else if (key == "epsilon_grid") {
        cfg.epsilon_grid = value.get<std::vector<double>>();
        has_grid = true;
      } else if (key == "regime") {
        cfg.regime = regime_from_name(value.get<std::string>());
        has_regime = true;
      } else if (key == "m_source" || key == "m_target") {
        auto rates = value.get<std::vector<double>>();
        Eigen::VectorXd v =
            Eigen::Map<const Eigen::VectorXd>(rates.data(),
                                              static_cast<Eigen::Index>(rates.size()));
        (key == "m_source" ? cfg.m_source : cfg.m_target) = v;
        (key == "m_source" ? has_ms : has_mt) = true;
      } else if (key == "methods") {
        cfg.methods.clear();
        for (const auto& name : value)
          cfg.methods.push_back(method_from_name(name.get<std::string>()));
      } else if (key == "trials") {
        cfg.trials = value.get<int>();
      } else if (key == "regime_draws") {
        cfg.regime_draws = value.get<int>();
      } else if (key == "beta_draws") {
        cfg.beta_draws = value.get<int>();
      } else if (key == "seed") {
        cfg.seed = value.get<std::uint64_t>();
      } else if (key == "alpha") {
        if (!value.is_null()) cfg.alpha_override = value.get<double>();
      } else if (key == "ridge") {
        cfg.ridge_eps = value.get<double>();
      } else if (key == "bootstrap") {
        cfg.bootstrap_resamples = value.get<int>();
      } else if (key == "add_const_column") {
        cfg.add_const_column = value.get<bool>();
      } else {
        throw UsageError("experiment config: unknown key \"" + key + "\"");
      }
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("experiment config key \"" + key + "\": " + e.what());
    }
  }
  if (has_ms != has_mt)
    throw UsageError("experiment config: m_source and m_target go together");
  const int modes = (has_grid ? 1 : 0) + (has_regime ? 1 : 0) + (has_ms ? 1 : 0);
  if (modes > 1)
    throw UsageError(
        "experiment config: choose one of epsilon_grid, regime, or explicit rates");
  if (has_grid) {
    cfg.rate_mode = RateMode::epsilon_grid;
  } else if (has_regime) {
    cfg.rate_mode = RateMode::regime;
  } else if (has_ms) {
    cfg.rate_mode = RateMode::explicit_rates;
  } else if (!cfg.dataset_path.empty()) {
    cfg.rate_mode = RateMode::regime;  // dataset default: ordered regime draws
    cfg.regime = RegimeKind::ordered;
  } else {
    cfg.rate_mode = RateMode::epsilon_grid;  // scenario default: the full grid
  }
  validate(cfg);
  return cfg;
}

nlohmann::json to_json(const ExperimentResult& result) {
  auto vec = [](const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
  };
  nlohmann::json summary = nlohmann::json::array();
  for (const MethodSummary& s : result.summary) {
    summary.push_back({{"method", method_name(s.method)},
                       {"mean", s.mean},
                       {"ci_lo", s.ci_lo},
                       {"ci_hi", s.ci_hi},
                       {"n_trials", s.n_trials}});
  }
  nlohmann::json trials = nlohmann::json::array();
  for (const TrialRecord& rec : result.trials) {
    nlohmann::json t{{"trial", rec.trial},
                     {"m_source", vec(rec.m_source)},
                     {"m_target", vec(rec.m_target)},
                     {"r_hat", vec(rec.r_hat)}};
    if (!std::isnan(rec.epsilon)) t["epsilon"] = rec.epsilon;
    nlohmann::json metrics;
    for (const auto& [method, metric] : rec.metrics)
      metrics[method_name(method)] = metric;
    t["metrics"] = metrics;
    nlohmann::json skipped = nlohmann::json::array();
    for (Method m : rec.skipped) skipped.push_back(method_name(m));
    t["skipped"] = skipped;
    trials.push_back(std::move(t));
  }
  return {{"pooling", result.pooling}, {"summary", summary}, {"trials", trials}};
}

void write_results_json(const std::string& path, const ExperimentConfig& cfg,
                        const ExperimentResult& result) {
  nlohmann::json j = to_json(result);
  j["config"] = to_json(cfg);
  write_json_file(path, j);
}

void write_results_csv(const std::string& path, const ExperimentResult& result) {
  std::string out = "method,mean,ci_lo,ci_hi,n_trials\n";
  for (const MethodSummary& s : result.summary) {
    out += method_name(s.method);
    out += ',';
    out += format_number(s.mean);
    out += ',';
    out += format_number(s.ci_lo);
    out += ',';
    out += format_number(s.ci_hi);
    out += ',';
    out += std::to_string(s.n_trials);
    out += '\n';
  }
  write_text_atomic(path, out);
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
  std::string out = "epsilon,method,metric\n";
  for (const SweepRow& row : rows) {
    out += format_number(row.epsilon);
    out += ',';
    out += method_name(row.method);
    out += ',';
    out += format_number(row.metric);
    out += '\n';
  }
  write_text_atomic(path, out);
}

}  // namespace dams
