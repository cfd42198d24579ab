#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace padam {

// Error taxonomy. Everything thrown by this library derives from padam::Error.
// The CLI maps ConfigError (and its subclasses) to exit code 2 and
// DivergedError to exit code 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad or mismatched tensor shapes.
struct ShapeError : Error {
  using Error::Error;
};

// Math domain violations (e.g. fractional power of a negative base).
struct DomainError : Error {
  using Error::Error;
};

// Invalid argument to an operation (out-of-range k, negative std, ...).
struct InvalidArgumentError : Error {
  using Error::Error;
};

// NaN or Inf where a finite value is required.
struct NonFiniteError : Error {
  using Error::Error;
};

// Invalid trial/sweep configuration, including unknown optimizer names.
struct ConfigError : Error {
  using Error::Error;
};

// File missing or unreadable.
struct IoError : Error {
  using Error::Error;
};

// Malformed file contents; message carries the offending line number.
struct ParseError : Error {
  using Error::Error;
};

// Training produced a non-finite loss.
struct DivergedError : Error {
  std::size_t epoch;
  std::size_t batch;
  DivergedError(const std::string& msg, std::size_t epoch_, std::size_t batch_)
      : Error(msg), epoch(epoch_), batch(batch_) {}
};

}  // namespace padam
