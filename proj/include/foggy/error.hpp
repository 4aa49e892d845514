#pragma once

#include <stdexcept>
#include <string>

namespace foggy {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A zero-norm embedding means a broken model, not a data condition.
struct DegenerateVectorError : Error {
  using Error::Error;
};

struct ShapeError : Error {
  using Error::Error;
};

struct EmptySetError : Error {
  using Error::Error;
};

struct BuildError : Error {
  using Error::Error;
};

struct EmptyStoreError : Error {
  using Error::Error;
};

struct StrategyError : Error {
  using Error::Error;
};

struct AssignmentError : Error {
  using Error::Error;
};

struct AttackAbortError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct GateError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct ComparisonError : Error {
  using Error::Error;
};

}  // namespace foggy
