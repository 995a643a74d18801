#pragma once

#include <stdexcept>
#include <string>

namespace dsfp {

// Base for every error raised by the library. `kind()` is a stable short tag
// used in machine-readable error records emitted by the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error("invalid_argument", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io_error", what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error("format_error", what) {}
};

class ChecksumError : public Error {
 public:
  explicit ChecksumError(const std::string& what) : Error("checksum_mismatch", what) {}
};

class VersionError : public Error {
 public:
  explicit VersionError(const std::string& what) : Error("version_mismatch", what) {}
};

class EndpointError : public Error {
 public:
  explicit EndpointError(const std::string& what) : Error("endpoint_failure", what) {}
};

}  // namespace dsfp
