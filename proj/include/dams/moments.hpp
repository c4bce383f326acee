// Sample moments of (possibly corrupted) covariates and labels, the
// identification of relative missingness from nonzero rates, its
// finite-sample confidence bound, and the exact second-moment maps between
// missingness regimes that power closed-form adaptation.
#ifndef DAMS_MOMENTS_HPP
#define DAMS_MOMENTS_HPP

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "dams/discrete.hpp"

namespace dams {

// Empirical moments of one sample: xtx = X'X/n, xty = X'y/n (when labels are
// present), q = per-column fraction of nonzero entries, n = row count.
struct MomentSet {
  Eigen::MatrixXd xtx;
  Eigen::VectorXd xty;
  Eigen::VectorXd q;
  std::int64_t n = 0;
  bool has_labels = false;
};

// Per-feature estimate of relative missingness with a simultaneous
// finite-sample confidence half-width at level delta.
struct BoundReport {
  Eigen::VectorXd r_hat;
  Eigen::VectorXd half_width;
  std::vector<bool> unreliable;  // source nonzero rate below 10/n_source
  double delta = 0.0;
  std::int64_t n_source = 0;
  std::int64_t n_target = 0;
};

// Fraction of nonzero entries per column.  Requires at least one row.
Eigen::VectorXd estimate_nonzero_rates(const Eigen::MatrixXd& x);

// r_hat_j = 1 - q_target_j / q_source_j.  Columns with q_source_j = 0 are
// only legal when q_target_j = 0 too (both degenerate, r_hat_j = 1, callers
// drop the column); otherwise NumericalError.
Eigen::VectorXd estimate_relative_missingness(const Eigen::VectorXd& q_source,
                                              const Eigen::VectorXd& q_target);

// Hoeffding-based half-width around r_hat:
//   hw_j = (1/q_source_j) * (sqrt(log(4/delta)/(2 n_target))
//                            + (1 - r_hat_j) * sqrt(log(4/delta)/(2 n_source))).
// Components with q_source_j < 10/n_source are flagged unreliable (the
// 1/q_source factor blows up).  The level is per feature; for simultaneous
// coverage over d features split delta (Bonferroni) before calling.
BoundReport relative_missingness_bound(const Eigen::VectorXd& q_source,
                                       const Eigen::VectorXd& r_hat,
                                       std::int64_t n_source,
                                       std::int64_t n_target, double delta);

MomentSet estimate_moments(const Eigen::MatrixXd& x);
MomentSet estimate_moments(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

// Population identity mapping a source-corrupted second moment to the
// target-corrupted one using relative missingness r:
//   off-diagonal (i, j): (1 - r_i) * (1 - r_j) * xtx_ij
//   diagonal (i, i):     (1 - r_i) * xtx_ii.
Eigen::MatrixXd transfer_second_moment(const Eigen::MatrixXd& xtx_source,
                                       const Eigen::VectorXd& r);

// Convex combination alpha * from_source + (1 - alpha) * from_target with
// alpha = n_source / (n_source + n_target) unless overridden.
Eigen::MatrixXd combine_second_moments(const Eigen::MatrixXd& from_source,
                                       std::int64_t n_source,
                                       const Eigen::MatrixXd& from_target,
                                       std::int64_t n_target,
                                       std::optional<double> alpha = {});

// Exact inverse corruption on moments: recovers clean-data moments from
// corrupted ones (off-diagonal xtx_ij / ((1-m_i)(1-m_j)), diagonal
// xtx_ii / (1-m_i), xty_j / (1-m_j), q_j / (1-m_j)).
MomentSet clean_moments_from_corrupted(const MomentSet& corrupted,
                                       const MissRates& rates);

// Population moments of a finite joint distribution (for tests and the
// experiment harness's exact baselines).
MomentSet population_moments(const DiscreteJoint& dist);

}  // namespace dams

#endif  // DAMS_MOMENTS_HPP
