#pragma once

#include <stdexcept>
#include <string>

namespace fsbs {

enum class Errc {
  DimensionMismatch,
  NoSolutionOrRankDeficient,
  DegenerateBasis,
  ParamError,
  InvalidTrapdoor,
  WidthTooSmall,
  NotAnAncestor,
  LastPeriod,
  TimeMismatch,
  ProtocolViolation,
  RestartLimitExceeded,
  DecodeError,
  IoError,
  InternalError,
};

const char* errc_name(Errc c);

/// Library-wide exception type; `code()` identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace fsbs
