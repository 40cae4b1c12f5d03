#pragma once

#include <stdexcept>
#include <string>

namespace tilebench {

// Coarse error category; the CLI maps it to an exit status.
enum class ErrorKind { Config, Input, Numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define TILEBENCH_DEFINE_ERROR(Name, Kind)                                            \
  class Name : public Error {                                                         \
   public:                                                                            \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, #Name ": " + what) {} \
  };

TILEBENCH_DEFINE_ERROR(ConfigError, Config)
TILEBENCH_DEFINE_ERROR(ParseError, Input)
TILEBENCH_DEFINE_ERROR(InvariantViolation, Input)
TILEBENCH_DEFINE_ERROR(IoError, Input)
TILEBENCH_DEFINE_ERROR(UnreadableImage, Input)
TILEBENCH_DEFINE_ERROR(ResolutionMismatch, Input)
TILEBENCH_DEFINE_ERROR(InsufficientTissue, Input)
TILEBENCH_DEFINE_ERROR(DegenerateStains, Numeric)
TILEBENCH_DEFINE_ERROR(MissingScore, Input)
TILEBENCH_DEFINE_ERROR(MalformedProbs, Input)
TILEBENCH_DEFINE_ERROR(NoTumorTiles, Input)
TILEBENCH_DEFINE_ERROR(ShapeMismatch, Numeric)
TILEBENCH_DEFINE_ERROR(UnsupportedSpec, Config)
TILEBENCH_DEFINE_ERROR(TooFewPatients, Input)
TILEBENCH_DEFINE_ERROR(NonFiniteGradient, Numeric)
TILEBENCH_DEFINE_ERROR(EmptyGroup, Input)
TILEBENCH_DEFINE_ERROR(SingleClass, Input)
TILEBENCH_DEFINE_ERROR(NoPositives, Input)

#undef TILEBENCH_DEFINE_ERROR

}  // namespace tilebench
