#pragma once

#include <stdexcept>
#include <string>

namespace mixhp {

// Input data cannot support the requested computation (zero response norm,
// empty table, ...).
struct DegenerateDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A mixture component lost all effective mass and the collapse policy is
// abort, or the restart budget ran out.
struct ComponentCollapseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite objective or other numerical breakdown inside a solver.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or version-incompatible artifact / CSV input.
struct ArtifactError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mixhp
