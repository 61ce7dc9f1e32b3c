#pragma once

#include <stdexcept>
#include <string>

namespace wge {

struct InvalidInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Lattice larger than the exhaustive-enumeration guard.
struct EnumerationRefusedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parameter regime a sampler cannot handle (e.g. negative Potts coupling).
struct UnsupportedRegimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IllConditionedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitFailedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegeneratePosteriorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace wge
