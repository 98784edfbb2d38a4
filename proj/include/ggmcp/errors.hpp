#pragma once

#include <stdexcept>
#include <string>

namespace ggmcp {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerics / model.
struct NotPositiveDefinite : Error { using Error::Error; };
struct ConvergenceFailure : Error { using Error::Error; };
struct OutOfWindow : Error { using Error::Error; };
struct DegenerateWindow : Error { using Error::Error; };
struct MissingKappa : Error { using Error::Error; };
struct MissingReference : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };

// A solver left the SPD cone and restarts were exhausted. `tau` carries the
// change-point candidate being processed when known, -1 otherwise.
struct Diverged : Error {
  explicit Diverged(const std::string& what, int tau_at = -1)
      : Error(what), tau(tau_at) {}
  int tau;
};

// Ingest.
struct IoError : Error { using Error::Error; };
struct MalformedCsv : Error { using Error::Error; };
struct EmptyTable : Error { using Error::Error; };
struct NonPositivePrice : Error { using Error::Error; };
struct ZeroVariance : Error { using Error::Error; };

}  // namespace ggmcp
