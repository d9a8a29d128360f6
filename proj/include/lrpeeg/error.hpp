#pragma once

#include <stdexcept>
#include <string>

namespace lrpeeg {

enum class ErrorKind {
  usage,
  io,
  format,
  truncation,
  validation,
  index,
  shape,
  insufficient_data,
  unsupported_rate,
  spec,
  epoch_range,
  degenerate_data,
  montage,
  numerical,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return "usage error";
    case ErrorKind::io: return "io error";
    case ErrorKind::format: return "format error";
    case ErrorKind::truncation: return "truncation error";
    case ErrorKind::validation: return "validation error";
    case ErrorKind::index: return "index error";
    case ErrorKind::shape: return "shape error";
    case ErrorKind::insufficient_data: return "insufficient data";
    case ErrorKind::unsupported_rate: return "unsupported rate";
    case ErrorKind::spec: return "spec error";
    case ErrorKind::epoch_range: return "epoch out of range";
    case ErrorKind::degenerate_data: return "degenerate data";
    case ErrorKind::montage: return "montage error";
    case ErrorKind::numerical: return "numerical error";
  }
  return "error";
}

/// All library failures are reported as lrpeeg::Error carrying a kind that
/// maps onto the CLI exit codes (2 usage/config, 3 data, 4 numerical).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage:
    case ErrorKind::io:
    case ErrorKind::spec:
    case ErrorKind::unsupported_rate:
      return 2;
    case ErrorKind::numerical:
      return 4;
    default:
      return 3;
  }
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace lrpeeg
