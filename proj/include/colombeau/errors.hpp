#pragma once

#include <stdexcept>
#include <string>

namespace colombeau {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
  using Error::Error;
};

struct ConstructionError : Error {
  using Error::Error;
};

struct QuadratureError : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

struct ScenarioError : Error {
  using Error::Error;
};

}  // namespace colombeau
