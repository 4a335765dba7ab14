#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stalelab {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class RankDeficientError : public Error {
 public:
  RankDeficientError(std::size_t column, double norm)
      : Error("rank-deficient column " + std::to_string(column) +
              " (residual norm " + std::to_string(norm) + ")"),
        column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

class NotSymmetricError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  NonFiniteError(const std::string& what, long step)
      : Error(what + " at step " + std::to_string(step)), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

// Polar chart of the spiral is undefined at the origin.
class DegenerateChartError : public Error {
 public:
  using Error::Error;
};

class UnsupportedMetricError : public Error {
 public:
  using Error::Error;
};

class ThresholdNotReachedError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& message)
      : Error("config key '" + key + "': " + message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace stalelab
