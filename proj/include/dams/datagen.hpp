// Data generation: the two synthetic benchmark scenarios and the two
// analytic examples with their closed-form optima, missingness-mask
// application, random missingness regimes, semi-synthetic labeling, and the
// 4:1:4:1 data split.  Everything is a pure function of its seed.
#ifndef DAMS_DATAGEN_HPP
#define DAMS_DATAGEN_HPP

#include <Eigen/Core>
#include <cstdint>
#include <string>

#include "dams/discrete.hpp"
#include "dams/table.hpp"

namespace dams {

// redundant:  z ~ Bernoulli(0.5); x1 = x2 = z; y = z + u,        u ~ N(0,1)
// confounded: x1 ~ Bernoulli(0.5); x2 = expit(2 x1 + u2);
//             y = x1 - x2 + u,                                    u ~ N(0,1)
// example1:   z ~ N(0, sigma_z^2); x1 = x2 = z; y = z + sigma_y * u
// example2:   x1 ~ N(0,1); x2 = a x1 + u2; y = b x1 + c x2 + u
enum class ScenarioKind { redundant, confounded, example1, example2 };

std::string scenario_name(ScenarioKind kind);
ScenarioKind scenario_from_name(const std::string& name);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::redundant;
  std::int64_t n = 0;
  std::uint64_t seed = 0;
  double sigma_z = 1.0;  // example1 latent scale
  double sigma_y = 1.0;  // example1 label noise scale
  double a = 1.0;        // example2 coefficients
  double b = 1.0;
  double c = 1.0;
};

// n i.i.d. rows of the chosen generating process, columns x1, x2, label y.
LabeledTable generate_clean(const ScenarioSpec& spec);

// Independent per-cell zeroing of covariates at per-column rates in [0, 1];
// labels pass through untouched.  Deterministic given seed.
Eigen::MatrixXd apply_mask(const Eigen::MatrixXd& x, const Eigen::VectorXd& m,
                           std::uint64_t seed);
LabeledTable apply_mask(const LabeledTable& data, const Eigen::VectorXd& m,
                        std::uint64_t seed);
UnlabeledTable apply_mask(const UnlabeledTable& data, const Eigen::VectorXd& m,
                          std::uint64_t seed);

// ordered: source rates Uniform(0, 0.5), target rates
//          m_s + (1 - m_s) * Uniform(0, 0.5) — always at least the source.
// general: both Uniform(0, 0.9), so either domain may mask more.
enum class RegimeKind { ordered, general };

std::string regime_name(RegimeKind kind);
RegimeKind regime_from_name(const std::string& name);

struct RegimePair {
  MissRates source;
  MissRates target;
};

RegimePair sample_regime(RegimeKind kind, int d, std::uint64_t seed);

// Random linear labels y = x * beta with beta_j ~ Uniform(0, 10).  The drawn
// coefficients are written to *beta_out when given.
LabeledTable semi_synthetic_labels(const UnlabeledTable& covariates,
                                   std::uint64_t seed,
                                   Eigen::VectorXd* beta_out = nullptr);

struct SplitParts {
  LabeledTable source_train;
  LabeledTable source_test;
  LabeledTable target_train;
  LabeledTable target_test;
};

// Random disjoint 4:1:4:1 partition; leftover rows from flooring go to
// source_train.  Requires at least 10 rows.
SplitParts split_4141(const LabeledTable& data, std::uint64_t seed);

// Closed-form optima for the shared-feature Gaussian example under rates
// m_s = [1-eps, eps], m_t = [eps, 1-eps].
struct Example1Analytic {
  Eigen::Vector2d beta_source;
  Eigen::Vector2d beta_target;
  double excess_risk = 0.0;  // target risk of beta_source minus oracle risk
};

Example1Analytic example1_analytic(double eps, double sigma_z = 1.0);

// Closed-form optima for the correlated-feature example under m_s = [0, 0],
// m_t = [1, 0]: the target sees only the second feature.
struct Example2Analytic {
  Eigen::Vector2d beta_source;
  Eigen::Vector2d beta_target;
  double var_y = 0.0;
  double risk_source = 0.0;  // target risk of beta_source
  double risk_ratio = 0.0;   // risk_source / var_y
};

Example2Analytic example2_analytic(double a, double b, double c);

}  // namespace dams

#endif  // DAMS_DATAGEN_HPP
