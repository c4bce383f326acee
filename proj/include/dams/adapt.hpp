// Adaptation procedures: plain source OLS, the closed-form linear adjustment
// built on moment transfer, the non-parametric filter-then-train procedure,
// and the exact dropout-regularization identity for squared loss.
#ifndef DAMS_ADAPT_HPP
#define DAMS_ADAPT_HPP

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dams/discrete.hpp"
#include "dams/table.hpp"

namespace dams {

enum class Method { oracle, source, closed_form, nonparam };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

// A fitted linear predictor.  `dropped` lists column indices that were
// removed before solving (their coefficients are zero).
struct LinearModel {
  Eigen::VectorXd beta;
  Method method = Method::source;
  std::vector<int> dropped;
};

Eigen::VectorXd predict(const LinearModel& model, const Eigen::MatrixXd& x);

// Per-row, per-feature random zeroing applied to source data so that it
// follows the target missingness law.
struct FilterSpec {
  RelMiss r;
  std::uint64_t seed = 0;
};

// A fitted predictor of any form; `linear` is set when the underlying
// trainer produced a linear model.
struct Predictor {
  std::function<Eigen::VectorXd(const Eigen::MatrixXd&)> predict;
  std::optional<LinearModel> linear;
};

using Trainer = std::function<Predictor(const LabeledTable&)>;

// Ordinary least squares on the rows as given: beta solves
// (X'X/n + ridge_eps * I) beta = X'y/n.  All-zero columns are dropped first
// (coefficient zero, index recorded).  When the system is numerically
// singular at the requested ridge, a fallback ridge of 1e-8 * trace/d is
// applied once with a loud warning on stderr; if that still fails,
// NumericalError.
LinearModel fit_source_ols(const LabeledTable& source, double ridge_eps = 0.0);

// Closed-form target-optimal linear model from labeled source rows and
// unlabeled target rows.  Estimates relative missingness from nonzero
// rates, rebuilds the target second moment from both samples (weighted by
// sample size unless alpha_override is given), rescales the source
// cross-moment by (1 - r̂), and solves.  Columns with no nonzero target
// entries are dropped (coefficient zero, index recorded).
LinearModel closed_form_target(const LabeledTable& source,
                               const UnlabeledTable& target,
                               std::optional<double> alpha_override = {},
                               double ridge_eps = 0.0);

// True when every component of r clears -1e-9 (small negatives are sampling
// noise and get clamped to zero by the filter).
bool check_applicability(const RelMiss& r);

// Multiplies each covariate cell by an independent Bernoulli(1 - r_j) draw;
// labels pass through.  Deterministic given spec.seed.
LabeledTable apply_missingness_filter(const LabeledTable& source,
                                      const FilterSpec& spec);

struct NonparamResult {
  Predictor predictor;
  Eigen::VectorXd r_hat;
  std::int64_t n_filtered = 0;
};

// Filter-then-train adaptation: estimates r̂ from nonzero rates, refuses when
// some r̂_j is negative beyond tolerance ("this algorithm is not
// applicable"), filters the source sample once, and fits the trainer on the
// filtered rows.  Default trainer is fit_source_ols.
NonparamResult nonparam_adapt(const LabeledTable& source,
                              const UnlabeledTable& target, std::uint64_t seed,
                              const Trainer& trainer = {});

// Exact squared-loss dropout penalty:
//   R(beta) = 1/2 * sum_i sum_j (m_j / (1 - m_j)) * x_ij^2 * beta_j^2.
double dropout_regularizer(const Eigen::VectorXd& beta, const MissRates& m,
                           const LabeledTable& data);

struct DropoutCheck {
  double lhs = 0.0;  // expected corrupted-and-rescaled squared loss
  double rhs = 0.0;  // clean squared loss plus R(beta)
};

// Checks the identity E_mask[loss(rescaled corrupted)] = loss(clean) + R.
// Exact mask enumeration when at most `max_enum_features` features have
// positive rates; otherwise a seeded Monte Carlo estimate of the left side.
DropoutCheck verify_dropout_identity(const LabeledTable& data,
                                     const Eigen::VectorXd& beta,
                                     const MissRates& m,
                                     int max_enum_features = 20,
                                     std::uint64_t mc_seed = 0,
                                     std::int64_t mc_draws = 400000);

}  // namespace dams

#endif  // DAMS_ADAPT_HPP
