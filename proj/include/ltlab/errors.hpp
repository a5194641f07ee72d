#pragma once

#include <stdexcept>
#include <string>

namespace ltlab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Geometry.
struct RadiusTooLarge : Error {
  using Error::Error;
};
struct EmptyRegion : Error {
  using Error::Error;
};
struct FullTorus : Error {
  using Error::Error;
};
struct GeometryViolation : Error {
  using Error::Error;
};

// Walks.
struct StepCapExceeded : Error {
  using Error::Error;
};

// Linear algebra.
struct SiteOutsideRegion : Error {
  using Error::Error;
};
struct SingularSystem : Error {
  using Error::Error;
};
struct SizeTooLarge : Error {
  using Error::Error;
};

// Multi-scale schemes.
struct RadiiCollapse : Error {
  using Error::Error;
};
struct EtaOutOfRange : Error {
  using Error::Error;
};
struct LevelMismatch : Error {
  using Error::Error;
};

// Fitting and I/O.
struct InsufficientData : Error {
  using Error::Error;
};
struct ConfigParse : Error {
  using Error::Error;
};
struct IoFailure : Error {
  using Error::Error;
};

}  // namespace ltlab
