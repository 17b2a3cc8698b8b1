#pragma once

#include <stdexcept>
#include <string>

namespace srkocl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes disagree with what an operation requires.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A NaN or Inf surfaced in a tensor buffer or a loss.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Invalid argument value (out-of-range label, even kernel, bad config field).
class ValueError : public Error {
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

// Malformed on-disk record (bad magic, bad header, unparsable field).
class FormatError : public Error {
 public:
  using Error::Error;
};

class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};

class LabelRangeError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace srkocl
