// Command-line front end: data generation, linear adaptation, experiment
// runs, distribution-level corruption/recovery/transport, and CSV
// preprocessing.  Every stochastic command is a pure function of its flags
// and --seed, and all file outputs are written atomically.
//
// Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 method not
// applicable, 5 invalid distribution input.
#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dams/adapt.hpp"
#include "dams/datagen.hpp"
#include "dams/discrete.hpp"
#include "dams/errors.hpp"
#include "dams/harness.hpp"
#include "dams/json_io.hpp"
#include "dams/moments.hpp"
#include "dams/preprocess.hpp"
#include "dams/table.hpp"

namespace {

namespace fs = std::filesystem;

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// Per-column rates from a --m/--mask/--r flag: a single value broadcasts.
Eigen::VectorXd rates_for_width(const std::vector<double>& given, Eigen::Index d,
                                const char* flag) {
  if (given.size() == 1) return Eigen::VectorXd::Constant(d, given[0]);
  if (static_cast<Eigen::Index>(given.size()) != d)
    throw dams::UsageError(std::string(flag) + " needs 1 or " + std::to_string(d) +
                           " comma-separated values, got " +
                           std::to_string(given.size()));
  return Eigen::Map<const Eigen::VectorXd>(given.data(),
                                           static_cast<Eigen::Index>(given.size()));
}

struct GenerateOptions {
  std::string scenario;
  std::int64_t n = 10000;
  std::uint64_t seed = 0;
  std::vector<double> mask;
  std::string out_dir = ".";
  double sigma_z = 1.0;
  double sigma_y = 1.0;
  double a = 1.0;
  double b = 1.0;
  double c = 1.0;
};

void run_generate(const GenerateOptions& opt) {
  dams::ScenarioSpec spec;
  spec.kind = dams::scenario_from_name(opt.scenario);
  spec.n = opt.n;
  spec.seed = opt.seed;
  spec.sigma_z = opt.sigma_z;
  spec.sigma_y = opt.sigma_y;
  spec.a = opt.a;
  spec.b = opt.b;
  spec.c = opt.c;

  dams::LabeledTable clean = dams::generate_clean(spec);
  dams::write_csv(join_path(opt.out_dir, "clean.csv"), clean);
  if (!opt.mask.empty()) {
    Eigen::VectorXd m = rates_for_width(opt.mask, clean.cols(), "--mask");
    dams::validate(dams::MissRates{m}, static_cast<int>(clean.cols()));
    dams::LabeledTable corrupted = dams::apply_mask(clean, m, opt.seed);
    dams::write_csv(join_path(opt.out_dir, "corrupted.csv"), corrupted);
  }
}

struct AdaptOptions {
  std::string source_path;
  std::string target_path;
  std::string label = "y";
  std::string method = "closed_form";
  std::uint64_t seed = 0;
  double delta = 0.05;
  std::optional<double> alpha;
  double ridge = 0.0;
  std::string out_dir = ".";
};

void run_adapt(const AdaptOptions& opt) {
  const dams::Method method = dams::method_from_name(opt.method);
  if (method == dams::Method::oracle)
    throw dams::UsageError(
        "oracle fitting needs labeled target data; train on it directly with "
        "--method source");
  dams::LabeledTable source = dams::read_labeled_csv(opt.source_path, opt.label);
  dams::UnlabeledTable target = dams::read_unlabeled_csv(opt.target_path, opt.label);
  if (source.cols() != target.cols())
    throw dams::UsageError("source and target covariate counts differ");

  const Eigen::VectorXd q_source = dams::estimate_nonzero_rates(source.x);
  const Eigen::VectorXd q_target = dams::estimate_nonzero_rates(target.x);
  const Eigen::VectorXd r_hat =
      dams::estimate_relative_missingness(q_source, q_target);
  dams::BoundReport bound = dams::relative_missingness_bound(
      q_source, r_hat, source.rows(), target.rows(), opt.delta);
  const bool applicable = dams::check_applicability(dams::RelMiss{r_hat});

  nlohmann::json report = dams::to_json(bound);
  auto vec = [](const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
  };
  report["q_source"] = vec(q_source);
  report["q_target"] = vec(q_target);
  report["method"] = opt.method;
  report["applicable"] = applicable;
  report["verdict"] =
      applicable ? "applicable" : "this algorithm is not applicable";

  dams::LinearModel model;
  try {
    switch (method) {
      case dams::Method::source:
        model = dams::fit_source_ols(source, opt.ridge);
        break;
      case dams::Method::closed_form:
        model = dams::closed_form_target(source, target, opt.alpha, opt.ridge);
        break;
      case dams::Method::nonparam: {
        dams::NonparamResult res = dams::nonparam_adapt(source, target, opt.seed);
        model = *res.predictor.linear;
        report["n_filtered"] = res.n_filtered;
        break;
      }
      case dams::Method::oracle:
        break;  // rejected above
    }
  } catch (const dams::InapplicableError&) {
    // The diagnostic report is still worth having on refusal.
    dams::write_json_file(join_path(opt.out_dir, "report.json"), report);
    throw;
  }
  report["dropped"] = model.dropped;
  dams::write_json_file(join_path(opt.out_dir, "model.json"), dams::to_json(model));
  dams::write_json_file(join_path(opt.out_dir, "report.json"), report);
}

struct ExperimentOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
};

void run_experiment_cmd(const ExperimentOptions& opt) {
  nlohmann::json config_json = dams::read_json_file(opt.config_path);
  // Config values win over flags; the flag seeds a config that omits one.
  if (opt.seed && !config_json.contains("seed")) config_json["seed"] = *opt.seed;
  dams::ExperimentConfig cfg = dams::experiment_config_from_json(config_json);

  dams::ExperimentResult result = dams::run_experiment(cfg);
  dams::write_results_json(join_path(opt.out_dir, "results.json"), cfg, result);
  dams::write_results_csv(join_path(opt.out_dir, "results.csv"), result);
  if (result.pooling == "epsilon-grid")
    dams::write_sweep_csv(join_path(opt.out_dir, "sweep.csv"),
                          dams::epsilon_sweep(result));

  std::cout << "method,mean,ci_lo,ci_hi,n_trials\n";
  for (const auto& s : result.summary) {
    std::cout << dams::method_name(s.method) << ',' << dams::format_number(s.mean)
              << ',' << dams::format_number(s.ci_lo) << ','
              << dams::format_number(s.ci_hi) << ',' << s.n_trials << '\n';
  }
  std::cerr << "completed " << result.trials.size() << " trials in "
            << result.wall_time_seconds << " s\n";
}

struct DistOptions {
  std::string input_path;
  std::vector<double> m;
  std::vector<double> r;
  std::string out_path;
};

dams::DiscreteJoint load_distribution(const std::string& path) {
  nlohmann::json j;
  try {
    j = dams::read_json_file(path);
  } catch (const dams::UsageError& e) {
    // A distribution file that is not JSON at all is an invalid distribution.
    throw dams::DistributionError(e.what());
  }
  return dams::discrete_joint_from_json(j);
}

void emit_distribution(const dams::DiscreteJoint& dist, const std::string& out) {
  if (out.empty())
    std::cout << dams::to_json(dist).dump(2) << '\n';
  else
    dams::write_json_file(out, dams::to_json(dist));
}

void run_dist(const std::string& verb, const DistOptions& opt) {
  dams::DiscreteJoint dist = load_distribution(opt.input_path);
  dams::DiscreteJoint result;
  if (verb == "corrupt" || verb == "recover") {
    dams::MissRates rates{rates_for_width(opt.m, dist.dim, "--m")};
    result = verb == "corrupt" ? dams::corrupt_distribution(dist, rates)
                               : dams::recover_clean(dist, rates);
  } else {
    dams::RelMiss rel{rates_for_width(opt.r, dist.dim, "--r")};
    result = dams::transport_source_to_target(dist, rel);
  }
  emit_distribution(result, opt.out_path);
}

struct PreprocessOptions {
  std::string input_path;
  std::string config_path;
  std::string label;
  std::string out_dir = ".";
};

void run_preprocess(const PreprocessOptions& opt) {
  dams::PreprocessConfig cfg;
  if (!opt.config_path.empty())
    cfg = dams::preprocess_config_from_json(dams::read_json_file(opt.config_path));
  if (!opt.label.empty()) cfg.label = opt.label;

  dams::RawTable raw = dams::read_raw_csv(opt.input_path, cfg.has_header, cfg.columns);
  dams::PreprocessResult result = dams::preprocess_table(raw, cfg);
  const std::string out_csv = join_path(opt.out_dir, "preprocessed.csv");
  if (result.has_label)
    dams::write_csv(out_csv, result.table);
  else
    dams::write_csv(out_csv, result.table.covariates());
  dams::write_json_file(join_path(opt.out_dir, "preprocess_report.json"),
                        dams::to_json(result.report));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Distribution shift from feature underreporting: generation, "
      "identification, adaptation, and experiments"};
  app.require_subcommand(1);

  GenerateOptions gen;
  CLI::App* generate = app.add_subcommand(
      "generate", "Sample a synthetic scenario into clean.csv (and, with "
                  "--mask, corrupted.csv)");
  generate->add_option("--scenario", gen.scenario,
                       "redundant | confounded | example1 | example2")
      ->required();
  generate->add_option("--n", gen.n, "number of rows");
  generate->add_option("--seed", gen.seed, "random seed");
  generate->add_option("--mask", gen.mask, "per-column missingness rates")
      ->delimiter(',');
  generate->add_option("--sigma-z", gen.sigma_z, "latent scale (example1)");
  generate->add_option("--sigma-y", gen.sigma_y, "label noise scale (example1)");
  generate->add_option("--a", gen.a, "feature coupling (example2)");
  generate->add_option("--b", gen.b, "label coefficient (example2)");
  generate->add_option("--c", gen.c, "label coefficient (example2)");
  generate->add_option("--out-dir", gen.out_dir, "output directory");

  AdaptOptions adapt;
  double adapt_alpha = 0.0;
  CLI::App* adapt_cmd = app.add_subcommand(
      "adapt", "Fit a linear model for the target domain from labeled source "
               "rows and unlabeled target rows; writes model.json and "
               "report.json");
  adapt_cmd->add_option("--source", adapt.source_path, "labeled source CSV")
      ->required();
  adapt_cmd->add_option("--target", adapt.target_path, "target covariate CSV")
      ->required();
  adapt_cmd->add_option("--label", adapt.label, "label column name");
  adapt_cmd->add_option("--method", adapt.method,
                        "source | closed_form | nonparam");
  adapt_cmd->add_option("--seed", adapt.seed, "filter seed (nonparam)");
  adapt_cmd->add_option("--delta", adapt.delta, "confidence level for bounds");
  CLI::Option* alpha_opt = adapt_cmd->add_option(
      "--alpha", adapt_alpha, "source weight for the combined second moment");
  adapt_cmd->add_option("--ridge", adapt.ridge, "ridge added to the normal matrix");
  adapt_cmd->add_option("--out-dir", adapt.out_dir, "output directory");

  ExperimentOptions experiment;
  std::uint64_t experiment_seed = 0;
  CLI::App* experiment_cmd = app.add_subcommand(
      "experiment", "Run a configured experiment; writes results.json, "
                    "results.csv, and (for epsilon grids) sweep.csv");
  experiment_cmd->add_option("--config", experiment.config_path, "JSON config")
      ->required();
  CLI::Option* seed_opt = experiment_cmd->add_option(
      "--seed", experiment_seed, "seed used when the config does not set one");
  experiment_cmd->add_option("--out-dir", experiment.out_dir, "output directory");

  DistOptions dist;
  CLI::App* dist_cmd = app.add_subcommand(
      "dist", "Exact distribution-level operations on finite joint "
              "distributions in JSON form");
  dist_cmd->require_subcommand(1);
  std::vector<CLI::App*> dist_verbs;
  for (const char* verb : {"corrupt", "recover", "transport"}) {
    CLI::App* sub = dist_cmd->add_subcommand(
        verb, std::string(verb) == "corrupt"
                  ? "push a clean distribution through missingness"
                  : (std::string(verb) == "recover"
                         ? "invert missingness (requires every rate < 1)"
                         : "map a source-corrupted distribution to the target"));
    sub->add_option("input", dist.input_path, "distribution JSON file")
        ->required();
    if (std::string(verb) == "transport")
      sub->add_option("--r", dist.r, "relative missingness per column")
          ->delimiter(',')
          ->required();
    else
      sub->add_option("--m", dist.m, "missingness rate per column")
          ->delimiter(',')
          ->required();
    sub->add_option("--out", dist.out_path,
                    "output JSON path (stdout when omitted)");
    dist_verbs.push_back(sub);
  }

  PreprocessOptions preprocess;
  CLI::App* preprocess_cmd = app.add_subcommand(
      "preprocess", "Encode a raw mixed-type CSV into numeric covariates; "
                    "writes preprocessed.csv and preprocess_report.json");
  preprocess_cmd->add_option("--in", preprocess.input_path, "raw CSV file")
      ->required();
  preprocess_cmd->add_option("--config", preprocess.config_path,
                             "preprocessing JSON config");
  preprocess_cmd->add_option("--label", preprocess.label,
                             "label column carried through unchanged");
  preprocess_cmd->add_option("--out-dir", preprocess.out_dir, "output directory");

  try {
    app.parse(argc, argv);
    if (*alpha_opt) adapt.alpha = adapt_alpha;
    if (*seed_opt) experiment.seed = experiment_seed;

    if (*generate) run_generate(gen);
    if (*adapt_cmd) run_adapt(adapt);
    if (*experiment_cmd) run_experiment_cmd(experiment);
    for (std::size_t i = 0; i < dist_verbs.size(); ++i)
      if (*dist_verbs[i])
        run_dist(i == 0 ? "corrupt" : (i == 1 ? "recover" : "transport"), dist);
    if (*preprocess_cmd) run_preprocess(preprocess);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const dams::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const dams::NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const dams::InapplicableError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const dams::DistributionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
