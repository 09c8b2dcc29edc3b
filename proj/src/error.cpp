#include "expbias/error.hpp"

namespace expbias {

const char *to_string(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::InvalidConfiguration:
    return "invalid configuration";
  case ErrorKind::InvalidInput:
    return "invalid input";
  case ErrorKind::InvalidData:
    return "invalid data";
  case ErrorKind::DegenerateData:
    return "degenerate data";
  case ErrorKind::InvalidState:
    return "invalid state";
  case ErrorKind::Shape:
    return "shape error";
  case ErrorKind::Format:
    return "format error";
  case ErrorKind::Training:
    return "training error";
  case ErrorKind::Io:
    return "I/O error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string &message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void raise(ErrorKind kind, const std::string &message) { throw Error(kind, message); }

} // namespace expbias
