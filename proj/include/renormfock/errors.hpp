#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace renormfock {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define RENORMFOCK_ERROR(Name)              \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  };

RENORMFOCK_ERROR(ConfigError)
RENORMFOCK_ERROR(SingularConfigError)
RENORMFOCK_ERROR(CapacityError)
RENORMFOCK_ERROR(ShapeError)
RENORMFOCK_ERROR(MetricDegeneracyError)
RENORMFOCK_ERROR(NormalityError)
RENORMFOCK_ERROR(SolverError)
RENORMFOCK_ERROR(PreconditionError)
RENORMFOCK_ERROR(ShiftError)
RENORMFOCK_ERROR(FitError)
RENORMFOCK_ERROR(CountertermDivergenceError)

#undef RENORMFOCK_ERROR

// Warnings go to stderr unless a handler is installed (tests capture them).
using WarningHandler = std::function<void(const std::string&)>;
WarningHandler set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace renormfock
