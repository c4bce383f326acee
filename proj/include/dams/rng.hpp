// Counter-based random number generation.
//
// Every random quantity in the library is a pure function of
// (seed, stream, row, col), so data generation is reproducible across
// platforms and rows can be produced independently (parallel-safe by
// construction, no generator state to share).  The mixer is the SplitMix64
// finalizer applied to each key component in turn.
#ifndef DAMS_RNG_HPP
#define DAMS_RNG_HPP

#include <cstdint>
#include <vector>

namespace dams {

// Disjoint randomness channels that may share one user-facing seed.
enum class RngStream : std::uint64_t {
  kScenario = 1,   // clean covariate/label draws
  kMask = 2,       // missingness masks applied to covariates
  kFilter = 3,     // per-cell filtering during adaptation
  kSplit = 4,      // train/test split shuffles
  kBootstrap = 5,  // bootstrap resampling
  kLabels = 6,     // semi-synthetic label coefficients and noise
  kRegime = 7,     // random missingness-regime draws
  kDerive = 8,     // per-trial sub-seed derivation in the harness
};

// SplitMix64 finalizer: bijective 64-bit mixing with full avalanche.
std::uint64_t mix64(std::uint64_t z);

// Collision-resistant key for one scalar draw.
std::uint64_t cell_key(std::uint64_t seed, RngStream stream, std::uint64_t row,
                       std::uint64_t col);

// Uniform draw in the open interval (0, 1).
double uniform01(std::uint64_t seed, RngStream stream, std::uint64_t row,
                 std::uint64_t col);

// Standard normal draw via the inverse CDF (Acklam's rational approximation
// with one Halley refinement; relative error far below sampling noise).
double normal01(std::uint64_t seed, RngStream stream, std::uint64_t row,
                std::uint64_t col);

// True when a cell survives Bernoulli(1 - rate) masking.
bool keep_cell(std::uint64_t seed, RngStream stream, std::uint64_t row,
               std::uint64_t col, double rate);

double inverse_normal_cdf(double p);

// Sequential convenience generator over the same keyed mixer.  Draws are the
// cells (row = 0, col = 0, 1, 2, ...) of the given stream.
class Counter64 {
 public:
  Counter64(std::uint64_t seed, RngStream stream, std::uint64_t row = 0)
      : seed_(seed), stream_(stream), row_(row) {}

  std::uint64_t next_u64() { return mix64(cell_key(seed_, stream_, row_, col_++)); }
  double next_uniform01();
  double next_normal01() { return inverse_normal_cdf(next_uniform01()); }
  // Uniform integer in [0, bound) by masked rejection (no modulo bias).
  std::uint64_t next_below(std::uint64_t bound);

 private:
  std::uint64_t seed_;
  RngStream stream_;
  std::uint64_t row_;
  std::uint64_t col_ = 0;
};

// Deterministic Fisher-Yates permutation of {0, ..., n-1}.
std::vector<std::int64_t> shuffled_indices(std::int64_t n, std::uint64_t seed,
                                           RngStream stream);

}  // namespace dams

#endif  // DAMS_RNG_HPP
