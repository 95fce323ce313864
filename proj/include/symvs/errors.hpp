#pragma once

#include <stdexcept>
#include <string>

namespace symvs {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SYMVS_DECLARE_ERROR(Name)          \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

SYMVS_DECLARE_ERROR(NonFiniteResult);
SYMVS_DECLARE_ERROR(ShapeMismatch);
SYMVS_DECLARE_ERROR(InvalidCamera);
SYMVS_DECLARE_ERROR(InvalidArgument);
SYMVS_DECLARE_ERROR(UnknownMode);
SYMVS_DECLARE_ERROR(TooFewViews);
SYMVS_DECLARE_ERROR(BadWindow);
// A comparator saw no valid pixel; the caller skips the term.
SYMVS_DECLARE_ERROR(EmptyMask);
SYMVS_DECLARE_ERROR(EmptyOverlap);
SYMVS_DECLARE_ERROR(NonPositiveGT);
SYMVS_DECLARE_ERROR(EmptyCloud);
SYMVS_DECLARE_ERROR(UnsupportedVariant);
SYMVS_DECLARE_ERROR(IoError);

#undef SYMVS_DECLARE_ERROR

/// Parse failure that carries the offending line (1-based, 0 when unknown).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace symvs
