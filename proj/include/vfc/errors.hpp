#pragma once

#include <memory>
#include <stdexcept>
#include <string>

namespace vfc {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Self-loop, duplicate edge, or endpoint out of range.
class InvalidEdge : public Error {
public:
  using Error::Error;
};

/// Graph is not connected (detected spectrally or by search).
class NotConnected : public Error {
public:
  using Error::Error;
};

/// Dimension mismatch between operands.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// Nonpositive gain where a positive one is required.
class InvalidGain : public Error {
public:
  using Error::Error;
};

/// Step size violates the coupling-induced stiffness limit.
class StiffnessGuard : public Error {
public:
  using Error::Error;
};

struct Trajectory;

/// Non-finite value produced during integration. Carries the last valid
/// time and, when available, the partial trajectory up to that point.
class NumericalBlowup : public Error {
public:
  NumericalBlowup(const std::string& what, double t_last,
                  std::shared_ptr<Trajectory> partial = nullptr)
      : Error(what), t_last(t_last), partial(std::move(partial)) {}

  double t_last;
  std::shared_ptr<Trajectory> partial;
};

/// Sliding PE window does not fit in the sampled series.
class WindowTooLong : public Error {
public:
  using Error::Error;
};

/// Truncation horizon too short for the certified tail bound.
class TailTooLarge : public Error {
public:
  using Error::Error;
};

/// Log fit requested on nonpositive data.
class FitDomainError : public Error {
public:
  using Error::Error;
};

/// Inconsistent problem bounds handed to the proof-constant ledger.
class InvalidBounds : public Error {
public:
  using Error::Error;
};

/// Plot requested with no signal groups selected.
class EmptySelection : public Error {
public:
  using Error::Error;
};

/// Malformed or inconsistent scenario configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace vfc
