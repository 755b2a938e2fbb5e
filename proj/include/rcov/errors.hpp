#pragma once

#include <stdexcept>
#include <string>

namespace rcov {

/// Coarse failure category, mapped to process exit codes by the CLI.
enum class ErrorKind { Config, Data, Numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define RCOV_DEFINE_ERROR(Name, Kind)                                 \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& what)                            \
        : Error(ErrorKind::Kind, std::string(#Name ": ") + what) {}   \
  };

RCOV_DEFINE_ERROR(NotPositiveDefinite, Numerical)
RCOV_DEFINE_ERROR(NoConvergence, Numerical)
RCOV_DEFINE_ERROR(NonFiniteLikelihood, Numerical)
RCOV_DEFINE_ERROR(SingularDesign, Numerical)
RCOV_DEFINE_ERROR(DimensionMismatch, Data)
RCOV_DEFINE_ERROR(ShapeMismatch, Data)
RCOV_DEFINE_ERROR(SeriesTooShort, Data)
RCOV_DEFINE_ERROR(EmptySplit, Data)
RCOV_DEFINE_ERROR(IndexOutOfRange, Data)
RCOV_DEFINE_ERROR(DataError, Data)
RCOV_DEFINE_ERROR(InvalidDegreesOfFreedom, Config)
RCOV_DEFINE_ERROR(ConfigError, Config)

#undef RCOV_DEFINE_ERROR

}  // namespace rcov
