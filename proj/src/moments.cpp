#include "dams/moments.hpp"

#include <cmath>
#include <sstream>

#include "dams/errors.hpp"

namespace dams {

Eigen::VectorXd estimate_nonzero_rates(const Eigen::MatrixXd& x) {
  if (x.rows() == 0) throw UsageError("cannot estimate rates from zero rows");
  return (x.array() != 0.0).cast<double>().colwise().mean();
}

Eigen::VectorXd estimate_relative_missingness(const Eigen::VectorXd& q_source,
                                              const Eigen::VectorXd& q_target) {
  if (q_source.size() != q_target.size())
    throw UsageError("rate vectors have different lengths");
  Eigen::VectorXd r(q_source.size());
  for (Eigen::Index j = 0; j < r.size(); ++j) {
    if (q_source[j] == 0.0) {
      if (q_target[j] != 0.0) {
        std::ostringstream msg;
        msg << "column " << j
            << " has no nonzero source entries but nonzero target entries; "
               "relative missingness is undefined";
        throw NumericalError(msg.str());
      }
      r[j] = 1.0;  // degenerate in both samples; callers drop the column
    } else {
      r[j] = 1.0 - q_target[j] / q_source[j];
    }
  }
  return r;
}

BoundReport relative_missingness_bound(const Eigen::VectorXd& q_source,
                                       const Eigen::VectorXd& r_hat,
                                       std::int64_t n_source,
                                       std::int64_t n_target, double delta) {
  if (q_source.size() != r_hat.size())
    throw UsageError("rate and estimate vectors have different lengths");
  if (n_source <= 0 || n_target <= 0)
    throw UsageError("sample sizes must be positive");
  if (!(delta > 0.0 && delta < 1.0))
    throw UsageError("delta must lie in (0, 1)");

  const double log_term = std::log(4.0 / delta);
  const double dev_t = std::sqrt(log_term / (2.0 * static_cast<double>(n_target)));
  const double dev_s = std::sqrt(log_term / (2.0 * static_cast<double>(n_source)));
  const double rare = 10.0 / static_cast<double>(n_source);

  BoundReport rep;
  rep.r_hat = r_hat;
  rep.half_width.resize(q_source.size());
  rep.unreliable.resize(static_cast<std::size_t>(q_source.size()), false);
  rep.delta = delta;
  rep.n_source = n_source;
  rep.n_target = n_target;
  for (Eigen::Index j = 0; j < q_source.size(); ++j) {
    if (q_source[j] <= 0.0) {
      rep.half_width[j] = std::numeric_limits<double>::infinity();
      rep.unreliable[static_cast<std::size_t>(j)] = true;
      continue;
    }
    rep.half_width[j] =
        (dev_t + (1.0 - r_hat[j]) * dev_s) / q_source[j];
    if (q_source[j] < rare) rep.unreliable[static_cast<std::size_t>(j)] = true;
  }
  return rep;
}

MomentSet estimate_moments(const Eigen::MatrixXd& x) {
  if (x.rows() == 0) throw UsageError("cannot estimate moments from zero rows");
  MomentSet ms;
  ms.n = x.rows();
  ms.xtx = (x.transpose() * x) / static_cast<double>(x.rows());
  ms.q = estimate_nonzero_rates(x);
  ms.has_labels = false;
  return ms;
}

MomentSet estimate_moments(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (y.size() != x.rows())
    throw UsageError("label vector length does not match row count");
  MomentSet ms = estimate_moments(x);
  ms.xty = (x.transpose() * y) / static_cast<double>(x.rows());
  ms.has_labels = true;
  return ms;
}

Eigen::MatrixXd transfer_second_moment(const Eigen::MatrixXd& xtx_source,
                                       const Eigen::VectorXd& r) {
  if (xtx_source.rows() != xtx_source.cols() || xtx_source.rows() != r.size())
    throw UsageError("second moment and rate vector dimensions disagree");
  Eigen::VectorXd keep = 1.0 - r.array();
  Eigen::MatrixXd out = keep.asDiagonal() * xtx_source * keep.asDiagonal();
  // The diagonal scales linearly, not quadratically: a feature agrees with
  // itself, so masking hits the product x_i * x_i only once.
  out.diagonal() = keep.asDiagonal() * xtx_source.diagonal();
  return out;
}

Eigen::MatrixXd combine_second_moments(const Eigen::MatrixXd& from_source,
                                       std::int64_t n_source,
                                       const Eigen::MatrixXd& from_target,
                                       std::int64_t n_target,
                                       std::optional<double> alpha) {
  if (from_source.rows() != from_target.rows() ||
      from_source.cols() != from_target.cols())
    throw UsageError("second moments have different shapes");
  if (n_source < 0 || n_target < 0 || n_source + n_target == 0)
    throw UsageError("sample sizes must be nonnegative and not both zero");
  double a = alpha ? *alpha
                   : static_cast<double>(n_source) /
                         static_cast<double>(n_source + n_target);
  if (!(a >= 0.0 && a <= 1.0))
    throw UsageError("combination weight must lie in [0, 1]");
  return a * from_source + (1.0 - a) * from_target;
}

MomentSet clean_moments_from_corrupted(const MomentSet& corrupted,
                                       const MissRates& rates) {
  validate(rates, static_cast<int>(corrupted.xtx.rows()));
  if ((rates.m.array() >= 1.0).any())
    throw UsageError(
        "clean moments undefined when a feature is fully masked (m = 1)");
  Eigen::VectorXd inv_keep = (1.0 - rates.m.array()).inverse();
  MomentSet clean = corrupted;
  clean.xtx = inv_keep.asDiagonal() * corrupted.xtx * inv_keep.asDiagonal();
  clean.xtx.diagonal() = inv_keep.asDiagonal() * corrupted.xtx.diagonal();
  if (corrupted.has_labels)
    clean.xty = inv_keep.asDiagonal() * corrupted.xty;
  clean.q = inv_keep.asDiagonal() * corrupted.q;
  return clean;
}

MomentSet population_moments(const DiscreteJoint& dist) {
  MomentSet ms;
  const int d = dist.dim;
  ms.xtx = Eigen::MatrixXd::Zero(d, d);
  ms.xty = Eigen::VectorXd::Zero(d);
  ms.q = Eigen::VectorXd::Zero(d);
  ms.n = 0;
  ms.has_labels = true;
  for (const auto& atom : dist.atoms) {
    ms.xtx += atom.p * (atom.x * atom.x.transpose());
    ms.xty += atom.p * atom.y * atom.x;
    ms.q += atom.p * (atom.x.array() != 0.0).cast<double>().matrix();
  }
  return ms;
}

}  // namespace dams
