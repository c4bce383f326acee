#include "dams/rng.hpp"

#include <cmath>

namespace dams {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t cell_key(std::uint64_t seed, RngStream stream, std::uint64_t row,
                       std::uint64_t col) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ static_cast<std::uint64_t>(stream));
  h = mix64(h ^ row);
  h = mix64(h ^ col);
  return h;
}

namespace {

// Map 64 random bits to (0, 1): top 53 bits plus a half-ulp offset, so the
// result is never exactly 0 or 1 and is safe to feed to an inverse CDF.
double bits_to_unit_interval(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

double uniform01(std::uint64_t seed, RngStream stream, std::uint64_t row,
                 std::uint64_t col) {
  return bits_to_unit_interval(mix64(cell_key(seed, stream, row, col)));
}

double normal01(std::uint64_t seed, RngStream stream, std::uint64_t row,
                std::uint64_t col) {
  return inverse_normal_cdf(uniform01(seed, stream, row, col));
}

bool keep_cell(std::uint64_t seed, RngStream stream, std::uint64_t row,
               std::uint64_t col, double rate) {
  if (rate <= 0.0) return true;
  if (rate >= 1.0) return false;
  return uniform01(seed, stream, row, col) >= rate;
}

double inverse_normal_cdf(double p) {
  // Acklam's rational approximation, then one step of Halley's method on
  // Phi(x) - p to polish the root.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;

  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley refinement: e = Phi(x) - p, u = e / phi(x).
  double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

double Counter64::next_uniform01() { return bits_to_unit_interval(next_u64()); }

std::uint64_t Counter64::next_below(std::uint64_t bound) {
  if (bound <= 1) return 0;
  // Masked rejection: smallest power-of-two mask covering bound.
  std::uint64_t mask = bound - 1;
  mask |= mask >> 1;
  mask |= mask >> 2;
  mask |= mask >> 4;
  mask |= mask >> 8;
  mask |= mask >> 16;
  mask |= mask >> 32;
  for (;;) {
    std::uint64_t v = next_u64() & mask;
    if (v < bound) return v;
  }
}

std::vector<std::int64_t> shuffled_indices(std::int64_t n, std::uint64_t seed,
                                           RngStream stream) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  Counter64 gen(seed, stream);
  for (std::int64_t i = n - 1; i > 0; --i) {
    std::uint64_t j = gen.next_below(static_cast<std::uint64_t>(i) + 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
  }
  return idx;
}

}  // namespace dams
