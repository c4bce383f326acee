// Exception hierarchy shared by the library and the CLI.  Each class maps to
// one CLI exit code so failures surface with a stable, scriptable status.
#ifndef DAMS_ERRORS_HPP
#define DAMS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dams {

// Bad arguments, malformed configuration, unreadable input files.  Exit 2.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: singular systems without a ridge escape hatch, NaN/Inf
// contamination, degenerate variance where a ratio is required.  Exit 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// A method's precondition does not hold for the given data (e.g. the
// per-cell filter needs nonnegative relative missingness).  Exit 4.
class InapplicableError : public std::runtime_error {
 public:
  explicit InapplicableError(const std::string& msg) : std::runtime_error(msg) {}
};

// A distribution object violates its invariants beyond tolerance: negative
// mass, mass not summing to one, duplicate support points.  Exit 5.
class DistributionError : public std::runtime_error {
 public:
  explicit DistributionError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dams

#endif  // DAMS_ERRORS_HPP
