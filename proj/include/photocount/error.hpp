#pragma once

#include <stdexcept>
#include <string>

namespace photocount {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration (bad efficiency, empty power list, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Probability mass lost to the photon-number cutoff exceeded the tolerance.
class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, double lost_mass)
      : Error(what + " (lost mass " + std::to_string(lost_mass) + ")"),
        lost_mass_(lost_mass) {}
  double lost_mass() const noexcept { return lost_mass_; }

 private:
  double lost_mass_;
};

/// A quantity is mathematically undefined for the given input
/// (zero denominator, singular channel, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Peak fitting could not produce a usable result.
class FitError : public Error {
 public:
  using Error::Error;
};

}  // namespace photocount
