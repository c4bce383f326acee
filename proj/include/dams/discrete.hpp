// Finite joint distributions over (x, y) with x in R^d, and the exact
// corruption / recovery / transport maps induced by feature-wise
// underreporting completely at random: each coordinate of x is zeroed
// independently with a per-feature probability, so an observed zero conflates
// true zeros with masked values.
#ifndef DAMS_DISCRETE_HPP
#define DAMS_DISCRETE_HPP

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace dams {

// One support point: covariate vector x, label value y, probability mass p.
struct Atom {
  Eigen::VectorXd x;
  double y = 0.0;
  double p = 0.0;
};

// A finite joint distribution.  Support points are unique; masses are
// nonnegative and sum to one (see validate()).  Atoms are kept in a
// canonical order: ascending zero count, then lexicographic in (x, y).
struct DiscreteJoint {
  int dim = 0;
  std::vector<Atom> atoms;
};

// Per-feature marginal missingness rates, each in [0, 1].  Operations that
// invert the corruption (recover_clean, clean_moments_from_corrupted) demand
// every rate strictly below 1.
struct MissRates {
  Eigen::VectorXd m;
};

// Per-feature relative missingness of target with respect to source:
// r_j = 1 - (1 - m_target_j) / (1 - m_source_j).  Values lie in (-inf, 1];
// negative entries mean the target masks less than the source.
struct RelMiss {
  Eigen::VectorXd r;
};

// Replaces negative zeros by positive zeros so support comparisons are
// bitwise-stable, and rejects NaN coordinates.
Eigen::VectorXd canonicalize_point(const Eigen::VectorXd& x);

// True when b is reachable from a by zeroing coordinates: every nonzero
// coordinate of b equals the same coordinate of a, and every zero of a is a
// zero of b.
bool m_reachable(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Sorts atoms into canonical order, merging duplicate support points.
void sort_canonical(DiscreteJoint& dist);

// Checks invariants: dimensions agree, masses are nonnegative within
// tolerance and sum to one within 1e-8, support points are unique.
// Throws DistributionError on violation.
void validate(const DiscreteJoint& dist);

void validate(const MissRates& rates, int dim);
void validate(const RelMiss& rel, int dim);

RelMiss relative_missingness(const MissRates& source, const MissRates& target);

// Pushes a clean distribution through independent per-feature masking:
// mass of atom (z, y) is spread over all points reachable from z, each kept
// coordinate weighted by (1 - m_j) and each dropped one by m_j.
DiscreteJoint corrupt_distribution(const DiscreteJoint& clean,
                                   const MissRates& rates);

// Exact inverse of corrupt_distribution.  Solves for the clean masses by
// induction on the number of zero coordinates (points with fewer zeros are
// resolved first).  The clean support is a subset of the corrupted support.
// Small negative solutions in [-1e-8, 0) are clipped and the result
// renormalized; anything more negative raises DistributionError.
DiscreteJoint recover_clean(const DiscreteJoint& corrupted,
                            const MissRates& rates);

// Maps a source-corrupted distribution directly to the target-corrupted one
// using only the relative missingness r.  Algebraically this is
// corrupt_distribution with r in place of m, but negative r entries are
// legal here, so intermediate masses can leave [0, 1]; final masses below
// -1e-8 raise DistributionError (the input was not a valid source-corrupted
// distribution for this r), and values in [-1e-8, 0) are clipped and the
// result renormalized.
DiscreteJoint transport_source_to_target(const DiscreteJoint& source_corrupted,
                                         const RelMiss& rel);

double total_mass(const DiscreteJoint& dist);

// Mass at a given support point, zero when absent.
double mass_at(const DiscreteJoint& dist, const Eigen::VectorXd& x, double y);

}  // namespace dams

#endif  // DAMS_DISCRETE_HPP
