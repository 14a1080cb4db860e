#pragma once

#include <stdexcept>
#include <string>

namespace planedepth {

enum class ErrorKind {
  EmptyInput,
  BehindCamera,
  DegenerateGeometry,
  InconsistentInput,
  DimensionMismatch,
  NonFinite,
  UntrainedModel,
  Format,
  Io,
  InvalidArgument,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every contract violation in the library surfaces as this exception.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace planedepth
