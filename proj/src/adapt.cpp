#include "dams/adapt.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <iostream>
#include <sstream>

#include "dams/errors.hpp"
#include "dams/moments.hpp"
#include "dams/rng.hpp"

namespace dams {

std::string method_name(Method m) {
  switch (m) {
    case Method::oracle: return "oracle";
    case Method::source: return "source";
    case Method::closed_form: return "closed_form";
    case Method::nonparam: return "nonparam";
  }
  throw UsageError("unknown method value");
}

Method method_from_name(const std::string& name) {
  if (name == "oracle") return Method::oracle;
  if (name == "source") return Method::source;
  if (name == "closed_form") return Method::closed_form;
  if (name == "nonparam") return Method::nonparam;
  throw UsageError("unknown method '" + name +
                   "' (expected oracle, source, closed_form or nonparam)");
}

Eigen::VectorXd predict(const LinearModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.beta.size())
    throw UsageError("prediction input width does not match model");
  return x * model.beta;
}

namespace {

// Solves (m + ridge * I) beta = b with a residual check; when the system is
// numerically singular at the requested ridge, retries once with
// 1e-8 * trace/d and a loud warning.  Throws NumericalError if that fails.
Eigen::VectorXd solve_normal_system(const Eigen::MatrixXd& m,
                                    const Eigen::VectorXd& b, double ridge_eps,
                                    const char* what) {
  auto attempt = [&](double ridge) -> std::optional<Eigen::VectorXd> {
    Eigen::MatrixXd sys = m;
    sys.diagonal().array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(sys);
    if (ldlt.info() != Eigen::Success) return std::nullopt;
    Eigen::VectorXd beta = ldlt.solve(b);
    if (!beta.allFinite()) return std::nullopt;
    double scale = sys.norm() * beta.norm() + b.norm() + 1e-300;
    if ((sys * beta - b).norm() > 1e-8 * scale) return std::nullopt;
    return beta;
  };

  if (auto beta = attempt(ridge_eps)) return *beta;
  double fallback =
      1e-8 * m.trace() / static_cast<double>(std::max<Eigen::Index>(m.rows(), 1));
  if (fallback > 0.0 && fallback > ridge_eps) {
    std::cerr << "warning: " << what
              << ": normal matrix is numerically singular; retrying with "
                 "ridge "
              << fallback << "\n";
    if (auto beta = attempt(fallback)) return *beta;
  }
  throw NumericalError(std::string(what) +
                       ": normal matrix is singular and the ridge fallback "
                       "did not help");
}

std::vector<int> all_indices_except(Eigen::Index d,
                                    const std::vector<int>& dropped) {
  std::vector<int> kept;
  std::size_t next = 0;
  for (int j = 0; j < d; ++j) {
    if (next < dropped.size() && dropped[next] == j) {
      ++next;
      continue;
    }
    kept.push_back(j);
  }
  return kept;
}

Eigen::VectorXd scatter(const Eigen::VectorXd& packed,
                        const std::vector<int>& kept, Eigen::Index d) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(d);
  for (std::size_t k = 0; k < kept.size(); ++k)
    full[kept[k]] = packed[static_cast<Eigen::Index>(k)];
  return full;
}

}  // namespace

LinearModel fit_source_ols(const LabeledTable& source, double ridge_eps) {
  if (source.rows() == 0) throw UsageError("cannot fit on zero rows");
  if (source.y.size() != source.rows())
    throw UsageError("label vector length does not match row count");
  if (ridge_eps < 0.0) throw UsageError("ridge must be nonnegative");

  const Eigen::Index d = source.cols();
  LinearModel model;
  model.method = Method::source;
  for (int j = 0; j < d; ++j)
    if ((source.x.col(j).array() == 0.0).all()) model.dropped.push_back(j);
  std::vector<int> kept = all_indices_except(d, model.dropped);
  if (kept.empty()) {
    model.beta = Eigen::VectorXd::Zero(d);
    return model;
  }
  if (source.rows() < static_cast<Eigen::Index>(kept.size()))
    throw UsageError("fewer rows than columns after dropping empty ones");

  Eigen::MatrixXd xk = source.x(Eigen::all, kept);
  const double n = static_cast<double>(source.rows());
  Eigen::MatrixXd m = xk.transpose() * xk / n;
  Eigen::VectorXd b = xk.transpose() * source.y / n;
  model.beta = scatter(solve_normal_system(m, b, ridge_eps, "ols"), kept, d);
  return model;
}

LinearModel closed_form_target(const LabeledTable& source,
                               const UnlabeledTable& target,
                               std::optional<double> alpha_override,
                               double ridge_eps) {
  if (source.cols() != target.cols())
    throw UsageError("source and target have different column counts");
  if (source.rows() == 0 || target.rows() == 0)
    throw UsageError("both samples need at least one row");
  if (ridge_eps < 0.0) throw UsageError("ridge must be nonnegative");

  Eigen::VectorXd q_s = estimate_nonzero_rates(source.x);
  Eigen::VectorXd q_t = estimate_nonzero_rates(target.x);
  Eigen::VectorXd r_hat = estimate_relative_missingness(q_s, q_t);

  const Eigen::Index d = source.cols();
  LinearModel model;
  model.method = Method::closed_form;
  for (int j = 0; j < d; ++j)
    if (q_t[j] == 0.0) model.dropped.push_back(j);
  std::vector<int> kept = all_indices_except(d, model.dropped);
  if (kept.empty())
    throw NumericalError("every column is empty in the target sample");

  Eigen::MatrixXd xs = source.x(Eigen::all, kept);
  Eigen::MatrixXd xt = target.x(Eigen::all, kept);
  Eigen::VectorXd r = r_hat(kept);

  const double n_s = static_cast<double>(source.rows());
  const double n_t = static_cast<double>(target.rows());
  Eigen::MatrixXd xtx_s = xs.transpose() * xs / n_s;
  Eigen::VectorXd xty_s = xs.transpose() * source.y / n_s;
  Eigen::MatrixXd xtx_t = xt.transpose() * xt / n_t;

  Eigen::MatrixXd from_source = transfer_second_moment(xtx_s, r);
  Eigen::MatrixXd combined = combine_second_moments(
      from_source, source.rows(), xtx_t, target.rows(), alpha_override);
  Eigen::VectorXd rhs = (1.0 - r.array()).matrix().asDiagonal() * xty_s;

  model.beta =
      scatter(solve_normal_system(combined, rhs, ridge_eps, "closed form"),
              kept, d);
  return model;
}

bool check_applicability(const RelMiss& r) {
  return r.r.size() == 0 || r.r.minCoeff() >= -1e-9;
}

LabeledTable apply_missingness_filter(const LabeledTable& source,
                                      const FilterSpec& spec) {
  validate(spec.r, static_cast<int>(source.cols()));
  if (!check_applicability(spec.r)) {
    std::ostringstream msg;
    msg << "relative missingness has negative components (min "
        << spec.r.r.minCoeff() << "); this algorithm is not applicable";
    throw InapplicableError(msg.str());
  }
  LabeledTable out = source;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    double rate = std::max(spec.r.r[j], 0.0);
    if (rate == 0.0) continue;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      if (!keep_cell(spec.seed, RngStream::kFilter,
                     static_cast<std::uint64_t>(i),
                     static_cast<std::uint64_t>(j), rate))
        out.x(i, j) = 0.0;
    }
  }
  return out;
}

NonparamResult nonparam_adapt(const LabeledTable& source,
                              const UnlabeledTable& target, std::uint64_t seed,
                              const Trainer& trainer) {
  if (source.cols() != target.cols())
    throw UsageError("source and target have different column counts");
  if (source.rows() == 0 || target.rows() == 0)
    throw UsageError("both samples need at least one row");

  Eigen::VectorXd q_s = estimate_nonzero_rates(source.x);
  Eigen::VectorXd q_t = estimate_nonzero_rates(target.x);
  NonparamResult result;
  result.r_hat = estimate_relative_missingness(q_s, q_t);

  RelMiss r;
  r.r = result.r_hat;
  if (!check_applicability(r)) {
    std::ostringstream msg;
    msg << "estimated relative missingness has negative components (min "
        << r.r.minCoeff() << "); this algorithm is not applicable";
    throw InapplicableError(msg.str());
  }
  r.r = r.r.cwiseMax(0.0);

  LabeledTable filtered = apply_missingness_filter(source, {r, seed});
  result.n_filtered = filtered.rows();

  if (trainer) {
    result.predictor = trainer(filtered);
  } else {
    LinearModel model = fit_source_ols(filtered);
    model.method = Method::nonparam;
    result.predictor.linear = model;
    result.predictor.predict = [model](const Eigen::MatrixXd& x) {
      return predict(model, x);
    };
  }
  return result;
}

double dropout_regularizer(const Eigen::VectorXd& beta, const MissRates& m,
                           const LabeledTable& data) {
  validate(m, static_cast<int>(data.cols()));
  if (beta.size() != data.cols())
    throw UsageError("coefficient vector length does not match table width");
  if ((m.m.array() >= 1.0).any())
    throw UsageError("dropout penalty requires every rate below 1");
  Eigen::VectorXd col_sq = data.x.array().square().colwise().sum();
  double total = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    total += (m.m[j] / (1.0 - m.m[j])) * col_sq[j] * beta[j] * beta[j];
  return 0.5 * total;
}

namespace {

// Exact expected loss for one row: enumerate keep/drop over the coordinates
// that are both maskable (m_j > 0) and active (x_ij != 0).
double row_expected_loss(const Eigen::VectorXd& xi, double yi,
                         const Eigen::VectorXd& beta,
                         const Eigen::VectorXd& m) {
  std::vector<Eigen::Index> active;
  double base = 0.0;
  for (Eigen::Index j = 0; j < xi.size(); ++j) {
    if (m[j] > 0.0) {
      if (xi[j] != 0.0) active.push_back(j);
    } else {
      base += xi[j] * beta[j];
    }
  }
  double lhs = 0.0;
  const std::size_t k = active.size();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
    double w = 1.0;
    double pred = base;
    for (std::size_t t = 0; t < k; ++t) {
      Eigen::Index j = active[t];
      if (mask & (std::uint64_t{1} << t)) {
        w *= 1.0 - m[j];
        pred += xi[j] * beta[j] / (1.0 - m[j]);
      } else {
        w *= m[j];
      }
    }
    double err = yi - pred;
    lhs += w * 0.5 * err * err;
  }
  return lhs;
}

}  // namespace

DropoutCheck verify_dropout_identity(const LabeledTable& data,
                                     const Eigen::VectorXd& beta,
                                     const MissRates& m, int max_enum_features,
                                     std::uint64_t mc_seed,
                                     std::int64_t mc_draws) {
  validate(m, static_cast<int>(data.cols()));
  if ((m.m.array() >= 1.0).any())
    throw UsageError("dropout identity requires every rate below 1");
  if (beta.size() != data.cols())
    throw UsageError("coefficient vector length does not match table width");

  std::vector<Eigen::Index> maskable;
  for (Eigen::Index j = 0; j < data.cols(); ++j)
    if (m.m[j] > 0.0) maskable.push_back(j);

  DropoutCheck chk;
  chk.rhs = 0.5 * (data.y - data.x * beta).squaredNorm() +
            dropout_regularizer(beta, m, data);

  if (static_cast<int>(maskable.size()) <= max_enum_features) {
    for (Eigen::Index i = 0; i < data.rows(); ++i)
      chk.lhs += row_expected_loss(data.x.row(i).transpose(), data.y[i], beta,
                                   m.m);
    return chk;
  }

  // Monte Carlo estimate of the expectation for wide tables.
  const Eigen::Index d = data.cols();
  double accum = 0.0;
  for (std::int64_t t = 0; t < mc_draws; ++t) {
    double loss = 0.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      double pred = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        double xij = data.x(i, j);
        if (xij == 0.0 || beta[j] == 0.0) continue;
        if (m.m[j] > 0.0) {
          if (!keep_cell(mc_seed, RngStream::kFilter,
                         static_cast<std::uint64_t>(t),
                         static_cast<std::uint64_t>(i * d + j), m.m[j]))
            continue;
          pred += xij * beta[j] / (1.0 - m.m[j]);
        } else {
          pred += xij * beta[j];
        }
      }
      double err = data.y[i] - pred;
      loss += 0.5 * err * err;
    }
    accum += loss;
  }
  chk.lhs = accum / static_cast<double>(mc_draws);
  return chk;
}

}  // namespace dams
