#include "dams/datagen.hpp"

#include <cmath>
#include <sstream>

#include "dams/errors.hpp"
#include "dams/rng.hpp"

namespace dams {

std::string scenario_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::redundant: return "redundant";
    case ScenarioKind::confounded: return "confounded";
    case ScenarioKind::example1: return "example1";
    case ScenarioKind::example2: return "example2";
  }
  throw UsageError("unknown scenario value");
}

ScenarioKind scenario_from_name(const std::string& name) {
  if (name == "redundant") return ScenarioKind::redundant;
  if (name == "confounded") return ScenarioKind::confounded;
  if (name == "example1") return ScenarioKind::example1;
  if (name == "example2") return ScenarioKind::example2;
  throw UsageError("unknown scenario '" + name +
                   "' (expected redundant, confounded, example1 or example2)");
}

std::string regime_name(RegimeKind kind) {
  return kind == RegimeKind::ordered ? "ordered" : "general";
}

RegimeKind regime_from_name(const std::string& name) {
  if (name == "ordered") return RegimeKind::ordered;
  if (name == "general") return RegimeKind::general;
  throw UsageError("unknown regime '" + name + "' (expected ordered or general)");
}

namespace {

double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace

LabeledTable generate_clean(const ScenarioSpec& spec) {
  if (spec.n < 1) throw UsageError("scenario needs at least one row");
  if (spec.kind == ScenarioKind::example1 &&
      (spec.sigma_z <= 0.0 || spec.sigma_y <= 0.0))
    throw UsageError("scale parameters must be positive");

  LabeledTable t;
  t.x.resize(spec.n, 2);
  t.y.resize(spec.n);
  t.columns = default_columns(2);

  // Column indices within the scenario stream: 0 and 1 drive the covariate
  // draws, 2 the label noise.
  for (std::int64_t i = 0; i < spec.n; ++i) {
    const auto row = static_cast<std::uint64_t>(i);
    switch (spec.kind) {
      case ScenarioKind::redundant: {
        double z =
            uniform01(spec.seed, RngStream::kScenario, row, 0) < 0.5 ? 0.0 : 1.0;
        double u = normal01(spec.seed, RngStream::kScenario, row, 2);
        t.x(i, 0) = z;
        t.x(i, 1) = z;
        t.y[i] = z + u;
        break;
      }
      case ScenarioKind::confounded: {
        double x1 =
            uniform01(spec.seed, RngStream::kScenario, row, 0) < 0.5 ? 0.0 : 1.0;
        double u2 = normal01(spec.seed, RngStream::kScenario, row, 1);
        double u = normal01(spec.seed, RngStream::kScenario, row, 2);
        double x2 = expit(2.0 * x1 + u2);
        t.x(i, 0) = x1;
        t.x(i, 1) = x2;
        t.y[i] = x1 - x2 + u;
        break;
      }
      case ScenarioKind::example1: {
        double z = spec.sigma_z * normal01(spec.seed, RngStream::kScenario, row, 0);
        double u = normal01(spec.seed, RngStream::kScenario, row, 2);
        t.x(i, 0) = z;
        t.x(i, 1) = z;
        t.y[i] = z + spec.sigma_y * u;
        break;
      }
      case ScenarioKind::example2: {
        double x1 = normal01(spec.seed, RngStream::kScenario, row, 0);
        double u2 = normal01(spec.seed, RngStream::kScenario, row, 1);
        double u = normal01(spec.seed, RngStream::kScenario, row, 2);
        double x2 = spec.a * x1 + u2;
        t.x(i, 0) = x1;
        t.x(i, 1) = x2;
        t.y[i] = spec.b * x1 + spec.c * x2 + u;
        break;
      }
    }
  }
  return t;
}

Eigen::MatrixXd apply_mask(const Eigen::MatrixXd& x, const Eigen::VectorXd& m,
                           std::uint64_t seed) {
  MissRates rates{m};
  validate(rates, static_cast<int>(x.cols()));
  Eigen::MatrixXd out = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (m[j] == 0.0) continue;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (!keep_cell(seed, RngStream::kMask, static_cast<std::uint64_t>(i),
                     static_cast<std::uint64_t>(j), m[j]))
        out(i, j) = 0.0;
    }
  }
  return out;
}

LabeledTable apply_mask(const LabeledTable& data, const Eigen::VectorXd& m,
                        std::uint64_t seed) {
  LabeledTable out = data;
  out.x = apply_mask(data.x, m, seed);
  return out;
}

UnlabeledTable apply_mask(const UnlabeledTable& data, const Eigen::VectorXd& m,
                          std::uint64_t seed) {
  UnlabeledTable out = data;
  out.x = apply_mask(data.x, m, seed);
  return out;
}

RegimePair sample_regime(RegimeKind kind, int d, std::uint64_t seed) {
  if (d < 1) throw UsageError("regime needs at least one feature");
  RegimePair pair;
  pair.source.m.resize(d);
  pair.target.m.resize(d);
  Counter64 gen(seed, RngStream::kRegime);
  for (int j = 0; j < d; ++j) {
    if (kind == RegimeKind::ordered) {
      double ms = 0.5 * gen.next_uniform01();
      double mt = ms + (1.0 - ms) * 0.5 * gen.next_uniform01();
      pair.source.m[j] = ms;
      pair.target.m[j] = mt;
    } else {
      pair.source.m[j] = 0.9 * gen.next_uniform01();
      pair.target.m[j] = 0.9 * gen.next_uniform01();
    }
  }
  return pair;
}

LabeledTable semi_synthetic_labels(const UnlabeledTable& covariates,
                                   std::uint64_t seed,
                                   Eigen::VectorXd* beta_out) {
  if (covariates.rows() == 0) throw UsageError("no rows to label");
  Eigen::VectorXd beta(covariates.cols());
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    beta[j] =
        10.0 * uniform01(seed, RngStream::kLabels, 0, static_cast<std::uint64_t>(j));
  if (beta_out) *beta_out = beta;

  LabeledTable out;
  out.x = covariates.x;
  out.columns = covariates.columns;
  out.y = covariates.x * beta;
  return out;
}

namespace {

LabeledTable take_rows(const LabeledTable& data,
                       const std::vector<std::int64_t>& order, std::size_t begin,
                       std::size_t end) {
  LabeledTable out;
  out.columns = data.columns;
  out.label_name = data.label_name;
  out.x.resize(static_cast<Eigen::Index>(end - begin), data.cols());
  out.y.resize(static_cast<Eigen::Index>(end - begin));
  for (std::size_t k = begin; k < end; ++k) {
    out.x.row(static_cast<Eigen::Index>(k - begin)) = data.x.row(order[k]);
    out.y[static_cast<Eigen::Index>(k - begin)] = data.y[order[k]];
  }
  return out;
}

}  // namespace

SplitParts split_4141(const LabeledTable& data, std::uint64_t seed) {
  const std::int64_t n = data.rows();
  if (n < 10) throw UsageError("split needs at least 10 rows");
  std::vector<std::int64_t> order = shuffled_indices(n, seed, RngStream::kSplit);

  const auto src_test = static_cast<std::size_t>(n / 10);
  const auto tgt_test = static_cast<std::size_t>(n / 10);
  const auto tgt_train = static_cast<std::size_t>((4 * n) / 10);
  const std::size_t src_train =
      static_cast<std::size_t>(n) - src_test - tgt_train - tgt_test;

  SplitParts parts;
  std::size_t at = 0;
  parts.source_train = take_rows(data, order, at, at + src_train);
  at += src_train;
  parts.source_test = take_rows(data, order, at, at + src_test);
  at += src_test;
  parts.target_train = take_rows(data, order, at, at + tgt_train);
  at += tgt_train;
  parts.target_test = take_rows(data, order, at, at + tgt_test);
  return parts;
}

Example1Analytic example1_analytic(double eps, double sigma_z) {
  if (!(eps > 0.0 && eps < 1.0))
    throw UsageError("eps must lie strictly between 0 and 1");
  if (sigma_z <= 0.0) throw UsageError("sigma_z must be positive");
  const double denom = 1.0 - eps + eps * eps;
  Example1Analytic out;
  out.beta_source << eps / denom, (1.0 - eps) / denom;
  out.beta_target << (1.0 - eps) / denom, eps / denom;
  const double shift = 1.0 - 2.0 * eps;
  out.excess_risk = sigma_z * sigma_z * shift * shift *
                    (1.0 - 2.0 * eps + 2.0 * eps * eps) / (denom * denom);
  return out;
}

Example2Analytic example2_analytic(double a, double b, double c) {
  Example2Analytic out;
  out.beta_source << b, c;
  out.beta_target << 0.0, a * b / (a * a + 1.0) + c;
  out.var_y = b * b + 2.0 * a * b * c + a * a * c * c + c * c + 1.0;
  if (out.var_y <= 0.0) throw NumericalError("label variance is not positive");
  out.risk_source = b * b + 1.0;
  out.risk_ratio = out.risk_source / out.var_y;
  return out;
}

}  // namespace dams
