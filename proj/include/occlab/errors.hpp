#pragma once

#include <stdexcept>
#include <string>

namespace occlab {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the inputs was violated (bad shape, bad range, mismatch).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An iterative method failed or a computed quantity left its admissible range.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// Configuration did not validate; `path` names the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace occlab
