#pragma once

#include <stdexcept>
#include <string>

namespace fedgan {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// numerics
struct InvalidMatrix : Error {
  using Error::Error;
};
struct NumericalFailure : Error {
  using Error::Error;
};
struct NotPSD : Error {
  using Error::Error;
};

// tinygan
struct ShapeError : Error {
  using Error::Error;
};
struct InvalidArchitecture : Error {
  using Error::Error;
};
struct EmptyDataset : Error {
  using Error::Error;
};

// scenarios
struct InvalidSpec : Error {
  using Error::Error;
};

// frechet
struct TooFewSamples : Error {
  using Error::Error;
};
struct InvalidInput : Error {
  using Error::Error;
};

// aggregation
struct NoUpdates : Error {
  using Error::Error;
};

// federation
struct CodecError : Error {
  using Error::Error;
};

// cli / config
struct ConfigError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

}  // namespace fedgan
