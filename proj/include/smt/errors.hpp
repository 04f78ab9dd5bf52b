#ifndef SMT_ERRORS_HPP
#define SMT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace smt {

// Base class for all recoverable errors raised by the library. The CLI maps
// any Error to exit code 3 (data error); everything else is a bug.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IndexOutOfRange : Error {
  using Error::Error;
};

struct DuplicateEntry : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct ShapeMismatch : Error {
  using Error::Error;
};

struct NonFiniteGradient : Error {
  using Error::Error;
};

struct UnknownFold : Error {
  using Error::Error;
};

struct InvalidSpec : Error {
  using Error::Error;
};

struct ValidationError : Error {
  using Error::Error;
};

struct FormatError : Error {
  using Error::Error;
};

struct VersionError : Error {
  using Error::Error;
};

}  // namespace smt

#endif  // SMT_ERRORS_HPP
