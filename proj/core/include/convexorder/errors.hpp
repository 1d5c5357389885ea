#pragma once

#include <stdexcept>
#include <string>

namespace convexorder {

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : Error {
  using Error::Error;
};
struct ZeroMass : Error {
  using Error::Error;
};
struct BadDirection : Error {
  using Error::Error;
};
struct NumericalFailure : Error {
  using Error::Error;
};
struct NotSymmetric : Error {
  using Error::Error;
};
struct NotPsd : Error {
  using Error::Error;
};
struct OrthantViolation : Error {
  using Error::Error;
};
struct EmptySubset : Error {
  using Error::Error;
};
struct NoWitness : Error {
  using Error::Error;
};
struct NotOrderedOnLine : Error {
  using Error::Error;
};
struct Stalled : Error {
  using Error::Error;
};
struct GridMismatch : Error {
  using Error::Error;
};
struct BadSpec : Error {
  using Error::Error;
};

}  // namespace convexorder
