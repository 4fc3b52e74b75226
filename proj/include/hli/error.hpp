#pragma once

#include <stdexcept>
#include <string>

namespace hli {

// Bad flags or configuration. Maps to CLI exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data. Maps to CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values or solver failure. Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary container failures, distinguishable by kind.
class FormatError : public DataError {
 public:
  enum class Kind { kBadMagic, kBadVersion, kTruncated, kChecksum, kMalformed, kIo };

  FormatError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace hli
