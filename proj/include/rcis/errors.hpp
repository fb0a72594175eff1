#pragma once

#include <stdexcept>
#include <string>

namespace rcis {

// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operand dimensions do not agree.
struct DimensionMismatch : Error {
  using Error::Error;
};

// A numeric routine failed to converge (cycling, iteration cap, singularity).
struct NumericalFailure : Error {
  using Error::Error;
};

// Intermediate constraint count exceeded the configured cap during projection.
struct ExplosionLimit : Error {
  using Error::Error;
};

// The feasible set is unbounded where boundedness is required.
struct Unbounded : Error {
  using Error::Error;
};

// Unbounded along a specific coordinate; coord is 0-based.
struct UnboundedDirection : Unbounded {
  UnboundedDirection(const std::string& msg, int coord_)
      : Unbounded(msg), coord(coord_) {}
  int coord;
};

// Ambient dimension exceeds the vertex-enumeration cap.
struct DimensionTooHigh : Error {
  using Error::Error;
};

// (A, B) is not controllable; achieved_rank < n.
struct NotControllable : Error {
  NotControllable(const std::string& msg, int achieved_rank_)
      : Error(msg), achieved_rank(achieved_rank_) {}
  int achieved_rank;
};

// A machine construction would exceed the configured state-count cap.
struct StateCountExceedsCap : Error {
  using Error::Error;
};

// Symbolic reachable-set enumeration exceeded the configured cap.
struct ReachSetExceedsCap : Error {
  using Error::Error;
};

// A per-state constraint set is unbounded in the plant coordinates.
struct UnboundedCsub : Error {
  using Error::Error;
};

// A quadratic program has no feasible point.
struct Infeasible : Error {
  using Error::Error;
};

// A documented precondition was violated by a caller (e.g. supervision from a
// non-member state).
struct ContractBreach : Error {
  using Error::Error;
};

// Configuration file is malformed; message carries the offending key or line.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace rcis
