#pragma once

#include <stdexcept>
#include <string>

namespace trafficrisk {

// Base class for every error raised by the library. `kind()` is a short
// machine-readable tag that the CLI copies into its error record.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

// Invalid network description, experiment configuration or input file.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& message) : Error("config", message) {}
};

// The chosen discretization cannot represent the dynamics (CFL violated,
// Bernoulli jump probability not small).
class NumericalError : public Error {
public:
  NumericalError(std::string kind, const std::string& message)
      : Error(std::move(kind), message) {}
};

// Input data rejected by the analysis utilities.
class DataError : public Error {
public:
  explicit DataError(const std::string& message) : Error("data", message) {}
};

}  // namespace trafficrisk
