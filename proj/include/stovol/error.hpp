#pragma once

#include <stdexcept>
#include <string>

namespace stovol {

/// Category carried by every library exception; the CLI reports it in its
/// machine-readable error line.
enum class ErrorKind {
  InvalidArgument,
  Degenerate,
  Infeasible,
  Config,
  Io,
  RunFailed,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
    case ErrorKind::RunFailed: return "run_failed";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace stovol
