#pragma once

#include <stdexcept>
#include <string>

namespace expbias {

enum class ErrorKind {
  InvalidConfiguration,
  InvalidInput,
  InvalidData,
  DegenerateData,
  InvalidState,
  Shape,
  Format,
  Training,
  Io,
};

const char *to_string(ErrorKind kind);

/// Base exception for every failure raised by the library. The kind decides
/// the CLI exit code (see cli::exit_code_for).
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &message);

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string &message);

inline void require(bool condition, ErrorKind kind, const std::string &message) {
  if (!condition) {
    raise(kind, message);
  }
}

} // namespace expbias
