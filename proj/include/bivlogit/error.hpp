#pragma once

#include <stdexcept>
#include <string>

namespace bivlogit {

// Bad arguments: dimension mismatch, non-finite values, rank-deficient designs.
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A 2x2 cell with zero probability where a log odds ratio was requested.
struct DegenerateCell : std::domain_error {
  using std::domain_error::domain_error;
};

// The data carry no information about the requested parameters.
struct NoInformation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rank decision could not be made reliably; more draws are needed.
struct AmbiguousRank : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bivlogit
