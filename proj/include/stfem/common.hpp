#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace stfem {

/// Coordinates of a space-time point. Up to three entries are used; the time
/// coordinate is always the last used one (index dim-1 for a mesh of
/// dimension dim = d+1).
using Point = std::array<double, 3>;

/// Thrown when a caller violates a precondition (bad mesh, wrong degree, ...).
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Thrown on malformed run configurations and file-format errors.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when an internal consistency check fails. Seeing one of these is a
/// bug in the library, not in user input.
struct InvariantError : std::logic_error {
  using std::logic_error::logic_error;
};

inline constexpr double sqr(double x) { return x * x; }

}  // namespace stfem
