#pragma once

#include <stdexcept>
#include <string>

namespace percomatch {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PERCOMATCH_DEFINE_ERROR(Name)          \
  class Name : public Error {                  \
   public:                                     \
    using Error::Error;                        \
  };

PERCOMATCH_DEFINE_ERROR(DomainError)
PERCOMATCH_DEFINE_ERROR(DimensionMismatch)
PERCOMATCH_DEFINE_ERROR(InfeasibleDegree)
PERCOMATCH_DEFINE_ERROR(ConfigError)
PERCOMATCH_DEFINE_ERROR(InvalidNode)
PERCOMATCH_DEFINE_ERROR(ConflictingSeeds)
PERCOMATCH_DEFINE_ERROR(TooLarge)
PERCOMATCH_DEFINE_ERROR(NonMonotone)
PERCOMATCH_DEFINE_ERROR(MissingPositions)
PERCOMATCH_DEFINE_ERROR(RangeError)
PERCOMATCH_DEFINE_ERROR(MonotonicityViolation)
PERCOMATCH_DEFINE_ERROR(EmptyBulk)
PERCOMATCH_DEFINE_ERROR(IoError)

#undef PERCOMATCH_DEFINE_ERROR

/// Parse failure carrying the 1-based line number of the offending input.
class ParseError : public IoError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : IoError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace percomatch
