#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ergodeq {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define ERGODEQ_ERROR(Name)                                           \
  struct Name : Error {                                               \
    using Error::Error;                                               \
    const char* kind() const noexcept override { return #Name; }      \
  }

ERGODEQ_ERROR(DomainError);
ERGODEQ_ERROR(PrecisionExhausted);
ERGODEQ_ERROR(MixedPrecisionLoss);
ERGODEQ_ERROR(HeightOverflow);
ERGODEQ_ERROR(RangeExceeded);
ERGODEQ_ERROR(UnresolvableComparison);
ERGODEQ_ERROR(BudgetExhausted);
ERGODEQ_ERROR(NotInS);
ERGODEQ_ERROR(InexactHeights);
ERGODEQ_ERROR(ToleranceUnreachable);
ERGODEQ_ERROR(InsufficientScale);
ERGODEQ_ERROR(MonotonicityError);
ERGODEQ_ERROR(ConfigError);

#undef ERGODEQ_ERROR

struct HypothesisViolated : Error {
  HypothesisViolated(std::size_t index, std::string which)
      : Error("hypothesis '" + which + "' violated at index " + std::to_string(index)),
        index(index),
        which(std::move(which)) {}
  const char* kind() const noexcept override { return "HypothesisViolated"; }

  std::size_t index;
  std::string which;
};

}  // namespace ergodeq
