// Independent reference implementations ("oracles") used only by tests.
//
// These deliberately use different algorithms and different randomness than
// the library: the corruption oracle enumerates every mask vector in
// {0,1}^d (2^d terms per atom) instead of the library's subset recursion
// over nonzero coordinates, and the Monte Carlo oracle uses std::mt19937.
// Agreement between library and oracle is therefore meaningful.
#ifndef DAMS_TESTS_ORACLE_SUPPORT_HPP
#define DAMS_TESTS_ORACLE_SUPPORT_HPP

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "dams/discrete.hpp"

namespace dams::testing {

// Lexicographic key over (x, y) with negative zeros normalized.
struct PointKey {
  std::vector<double> x;
  double y = 0.0;

  bool operator<(const PointKey& other) const {
    if (x != other.x) return x < other.x;
    return y < other.y;
  }
};

inline PointKey make_key(const Eigen::VectorXd& x, double y) {
  PointKey k;
  k.x.resize(static_cast<std::size_t>(x.size()));
  for (Eigen::Index j = 0; j < x.size(); ++j)
    k.x[static_cast<std::size_t>(j)] = (x[j] == 0.0) ? 0.0 : x[j];
  k.y = (y == 0.0) ? 0.0 : y;
  return k;
}

using MassMap = std::map<PointKey, double>;

inline MassMap to_mass_map(const DiscreteJoint& dist) {
  MassMap out;
  for (const auto& a : dist.atoms) out[make_key(a.x, a.y)] += a.p;
  return out;
}

// Exact corruption by full mask enumeration.  Every mask in {0,1}^d is
// weighted prod_j (mask_j ? 1-m_j : m_j), including coordinates where the
// atom is already zero (those splits land on the same point and re-merge).
inline MassMap oracle_corrupt(const DiscreteJoint& clean,
                              const Eigen::VectorXd& m) {
  MassMap out;
  const int d = clean.dim;
  for (const auto& atom : clean.atoms) {
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
      double w = atom.p;
      Eigen::VectorXd x = atom.x;
      for (int j = 0; j < d; ++j) {
        if (mask & (std::uint64_t{1} << j)) {
          w *= 1.0 - m[j];
        } else {
          w *= m[j];
          x[j] = 0.0;
        }
      }
      if (w != 0.0) out[make_key(x, atom.y)] += w;
    }
  }
  return out;
}

// Sampling-based corruption estimate, std::mt19937 randomness.
inline MassMap mc_corrupt(const DiscreteJoint& clean, const Eigen::VectorXd& m,
                          int n_draws, unsigned rng_seed) {
  std::mt19937 gen(rng_seed);
  std::vector<double> weights;
  weights.reserve(clean.atoms.size());
  for (const auto& a : clean.atoms) weights.push_back(a.p);
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  MassMap counts;
  for (int i = 0; i < n_draws; ++i) {
    const Atom& atom = clean.atoms[static_cast<std::size_t>(pick(gen))];
    Eigen::VectorXd x = atom.x;
    for (int j = 0; j < clean.dim; ++j)
      if (unif(gen) < m[j]) x[j] = 0.0;
    counts[make_key(x, atom.y)] += 1.0;
  }
  for (auto& [key, value] : counts) value /= n_draws;
  return counts;
}

inline double max_map_diff(const MassMap& a, const MassMap& b) {
  double worst = 0.0;
  for (const auto& [key, value] : a) {
    auto it = b.find(key);
    double other = (it == b.end()) ? 0.0 : it->second;
    worst = std::max(worst, std::abs(value - other));
  }
  for (const auto& [key, value] : b)
    if (a.find(key) == a.end()) worst = std::max(worst, std::abs(value));
  return worst;
}

// Random finite joint over a small integer grid, masses normalized to one.
// Support points are unique by construction of the map.
inline DiscreteJoint random_joint(int dim, int n_atoms, std::mt19937& gen) {
  std::uniform_int_distribution<int> coord(-1, 2);
  std::uniform_int_distribution<int> label(0, 1);
  std::uniform_real_distribution<double> mass(0.1, 1.0);

  MassMap accum;
  while (static_cast<int>(accum.size()) < n_atoms) {
    Eigen::VectorXd x(dim);
    for (int j = 0; j < dim; ++j) x[j] = static_cast<double>(coord(gen));
    accum[make_key(x, label(gen))] += mass(gen);
  }
  double total = 0.0;
  for (const auto& [key, value] : accum) total += value;

  DiscreteJoint out;
  out.dim = dim;
  for (const auto& [key, value] : accum) {
    Atom a;
    a.x = Eigen::Map<const Eigen::VectorXd>(key.x.data(),
                                            static_cast<Eigen::Index>(key.x.size()));
    a.y = key.y;
    a.p = value / total;
    out.atoms.push_back(std::move(a));
  }
  return out;
}

}  // namespace dams::testing

#endif  // DAMS_TESTS_ORACLE_SUPPORT_HPP
