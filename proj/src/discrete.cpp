#include "dams/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <utility>

#include "dams/errors.hpp"

namespace dams {

namespace {

constexpr double kMassTol = 1e-8;  // clip band for tiny negative masses

double canonical_scalar(double v) { return v == 0.0 ? 0.0 : v; }

int zero_count(const Eigen::VectorXd& x) {
  int n = 0;
  for (Eigen::Index j = 0; j < x.size(); ++j)
    if (x[j] == 0.0) ++n;
  return n;
}

// Strict-weak order over support points: ascending zero count, then
// lexicographic in x, then in y.  Assumes canonicalized coordinates.
bool point_less(const Eigen::VectorXd& ax, double ay, const Eigen::VectorXd& bx,
                double by) {
  int za = zero_count(ax), zb = zero_count(bx);
  if (za != zb) return za < zb;
  for (Eigen::Index j = 0; j < ax.size(); ++j)
    if (ax[j] != bx[j]) return ax[j] < bx[j];
  return ay < by;
}

bool point_equal(const Eigen::VectorXd& ax, double ay, const Eigen::VectorXd& bx,
                 double by) {
  if (ay != by) return false;
  for (Eigen::Index j = 0; j < ax.size(); ++j)
    if (ax[j] != bx[j]) return false;
  return true;
}

// Recursively spreads one atom's mass over the points reachable by zeroing
// subsets of `droppable` coordinates; `rates` may contain negative entries
// (transport), in which case some contributions are negative.
void spread_atom(Eigen::VectorXd& x, double y, double weight,
                 const std::vector<Eigen::Index>& droppable, std::size_t pos,
                 const Eigen::VectorXd& rates, std::vector<Atom>& out) {
  if (weight == 0.0) return;
  if (pos == droppable.size()) {
    Atom a;
    a.x = x;
    a.y = y;
    a.p = weight;
    out.push_back(std::move(a));
    return;
  }
  Eigen::Index j = droppable[pos];
  double saved = x[j];
  spread_atom(x, y, weight * (1.0 - rates[j]), droppable, pos + 1, rates, out);
  x[j] = 0.0;
  spread_atom(x, y, weight * rates[j], droppable, pos + 1, rates, out);
  x[j] = saved;
}

// Shared forward map for corruption (rates in [0,1)) and transport (rates
// in (-inf, 1]).  Negative accumulated masses below -1e-8 are invalid;
// masses in [-1e-8, 0) are clipped and the result renormalized.
DiscreteJoint push_through(const DiscreteJoint& in, const Eigen::VectorXd& rates,
                           const char* op_name) {
  DiscreteJoint out;
  out.dim = in.dim;
  for (const auto& atom : in.atoms) {
    Eigen::VectorXd x = canonicalize_point(atom.x);
    std::vector<Eigen::Index> droppable;
    for (Eigen::Index j = 0; j < x.size(); ++j)
      if (x[j] != 0.0 && rates[j] != 0.0) droppable.push_back(j);
    spread_atom(x, canonical_scalar(atom.y), atom.p, droppable, 0, rates,
                out.atoms);
  }
  sort_canonical(out);

  bool clipped = false;
  for (auto& atom : out.atoms) {
    if (atom.p < -kMassTol) {
      std::ostringstream msg;
      msg << op_name << ": produced mass " << atom.p
          << " at a support point; input is not a valid distribution for "
             "these rates";
      throw DistributionError(msg.str());
    }
    if (atom.p < 0.0) {
      atom.p = 0.0;
      clipped = true;
    }
  }
  std::erase_if(out.atoms, [](const Atom& a) { return a.p == 0.0; });
  if (clipped) {
    double total = total_mass(out);
    if (total <= 0.0)
      throw DistributionError(std::string(op_name) + ": all mass clipped away");
    for (auto& atom : out.atoms) atom.p /= total;
  }
  return out;
}

}  // namespace

Eigen::VectorXd canonicalize_point(const Eigen::VectorXd& x) {
  Eigen::VectorXd out(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (std::isnan(x[j]))
      throw DistributionError("support point has a NaN coordinate");
    out[j] = canonical_scalar(x[j]);
  }
  return out;
}

bool m_reachable(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    double bj = canonical_scalar(b[j]);
    if (bj != 0.0 && canonical_scalar(a[j]) != bj) return false;
  }
  return true;
}

void sort_canonical(DiscreteJoint& dist) {
  for (auto& atom : dist.atoms) {
    atom.x = canonicalize_point(atom.x);
    atom.y = canonical_scalar(atom.y);
  }
  std::sort(dist.atoms.begin(), dist.atoms.end(),
            [](const Atom& a, const Atom& b) {
              return point_less(a.x, a.y, b.x, b.y);
            });
  // Merge duplicate support points.
  std::vector<Atom> merged;
  for (auto& atom : dist.atoms) {
    if (!merged.empty() &&
        point_equal(merged.back().x, merged.back().y, atom.x, atom.y)) {
      merged.back().p += atom.p;
    } else {
      merged.push_back(std::move(atom));
    }
  }
  dist.atoms = std::move(merged);
}

void validate(const DiscreteJoint& dist) {
  if (dist.dim < 0) throw DistributionError("negative dimension");
  double total = 0.0;
  for (const auto& atom : dist.atoms) {
    if (atom.x.size() != dist.dim)
      throw DistributionError("support point dimension mismatch");
    for (Eigen::Index j = 0; j < atom.x.size(); ++j)
      if (!std::isfinite(atom.x[j]))
        throw DistributionError("support point has a non-finite coordinate");
    if (!std::isfinite(atom.y))
      throw DistributionError("label value is not finite");
    if (!std::isfinite(atom.p) || atom.p < -kMassTol) {
      std::ostringstream msg;
      msg << "invalid probability mass " << atom.p;
      throw DistributionError(msg.str());
    }
    total += atom.p;
  }
  if (std::abs(total - 1.0) > kMassTol) {
    std::ostringstream msg;
    msg << "masses sum to " << total << ", expected 1";
    throw DistributionError(msg.str());
  }
  std::vector<std::pair<Eigen::VectorXd, double>> keys;
  keys.reserve(dist.atoms.size());
  for (const auto& atom : dist.atoms)
    keys.emplace_back(canonicalize_point(atom.x), canonical_scalar(atom.y));
  std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
    return point_less(a.first, a.second, b.first, b.second);
  });
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    if (point_equal(keys[i].first, keys[i].second, keys[i + 1].first,
                    keys[i + 1].second))
      throw DistributionError("duplicate support point");
  }
}

void validate(const MissRates& rates, int dim) {
  if (rates.m.size() != dim)
    throw UsageError("missingness rate vector has wrong length");
  for (Eigen::Index j = 0; j < rates.m.size(); ++j) {
    if (!std::isfinite(rates.m[j]) || rates.m[j] < 0.0 || rates.m[j] > 1.0) {
      std::ostringstream msg;
      msg << "missingness rate m[" << j << "] = " << rates.m[j]
          << " outside [0, 1]";
      throw UsageError(msg.str());
    }
  }
}

void validate(const RelMiss& rel, int dim) {
  if (rel.r.size() != dim)
    throw UsageError("relative missingness vector has wrong length");
  for (Eigen::Index j = 0; j < rel.r.size(); ++j) {
    if (!std::isfinite(rel.r[j]) || rel.r[j] > 1.0) {
      std::ostringstream msg;
      msg << "relative missingness r[" << j << "] = " << rel.r[j]
          << " outside (-inf, 1]";
      throw UsageError(msg.str());
    }
  }
}

RelMiss relative_missingness(const MissRates& source, const MissRates& target) {
  validate(source, static_cast<int>(source.m.size()));
  validate(target, static_cast<int>(source.m.size()));
  RelMiss rel;
  rel.r = 1.0 - ((1.0 - target.m.array()) / (1.0 - source.m.array()));
  return rel;
}

DiscreteJoint corrupt_distribution(const DiscreteJoint& clean,
                                   const MissRates& rates) {
  validate(clean);
  validate(rates, clean.dim);
  return push_through(clean, rates.m, "corrupt");
}

DiscreteJoint transport_source_to_target(const DiscreteJoint& source_corrupted,
                                         const RelMiss& rel) {
  validate(source_corrupted);
  validate(rel, source_corrupted.dim);
  return push_through(source_corrupted, rel.r, "transport");
}

DiscreteJoint recover_clean(const DiscreteJoint& corrupted,
                            const MissRates& rates) {
  validate(corrupted);
  validate(rates, corrupted.dim);
  for (Eigen::Index j = 0; j < rates.m.size(); ++j) {
    if (rates.m[j] >= 1.0) {
      std::ostringstream msg;
      msg << "recover: m[" << j
          << "] = 1 destroys the feature entirely; corruption is not "
             "invertible";
      throw DistributionError(msg.str());
    }
  }

  DiscreteJoint work = corrupted;
  sort_canonical(work);  // ascending zero count: solve least-masked first

  // Clean support is contained in the corrupted support (every clean atom
  // survives masking intact with positive probability), so solving over the
  // corrupted atoms in canonical order visits each point after everything
  // that can leak mass into it.
  std::vector<Atom> solved;
  bool clipped = false;
  for (const auto& atom : work.atoms) {
    double residual = atom.p;
    for (const auto& prior : solved) {
      if (prior.y != atom.y || !m_reachable(prior.x, atom.x)) continue;
      if (point_equal(prior.x, prior.y, atom.x, atom.y)) continue;
      double w = prior.p;
      for (Eigen::Index j = 0; j < prior.x.size(); ++j) {
        if (prior.x[j] == 0.0) continue;
        w *= (atom.x[j] != 0.0) ? (1.0 - rates.m[j]) : rates.m[j];
      }
      residual -= w;
    }
    double keep_all = 1.0;
    for (Eigen::Index j = 0; j < atom.x.size(); ++j)
      if (atom.x[j] != 0.0) keep_all *= 1.0 - rates.m[j];
    double p = residual / keep_all;

    if (p < -kMassTol) {
      std::ostringstream msg;
      msg << "recover: solved clean mass " << p
          << " at a support point; input is not a corruption at these rates";
      throw DistributionError(msg.str());
    }
    if (p < 0.0) {
      p = 0.0;
      clipped = true;
    }
    Atom out = atom;
    out.p = p;
    solved.push_back(std::move(out));
  }

  DiscreteJoint clean;
  clean.dim = corrupted.dim;
  clean.atoms = std::move(solved);
  std::erase_if(clean.atoms, [](const Atom& a) { return a.p == 0.0; });
  if (clipped) {
    double total = total_mass(clean);
    if (total <= 0.0) throw DistributionError("recover: all mass clipped away");
    for (auto& atom : clean.atoms) atom.p /= total;
  }
  return clean;
}

double total_mass(const DiscreteJoint& dist) {
  double total = 0.0;
  for (const auto& atom : dist.atoms) total += atom.p;
  return total;
}

double mass_at(const DiscreteJoint& dist, const Eigen::VectorXd& x, double y) {
  Eigen::VectorXd key = canonicalize_point(x);
  double ykey = canonical_scalar(y);
  for (const auto& atom : dist.atoms)
    if (point_equal(canonicalize_point(atom.x), canonical_scalar(atom.y), key,
                    ykey))
      return atom.p;
  return 0.0;
}

}  // namespace dams
