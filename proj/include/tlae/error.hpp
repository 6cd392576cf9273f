#pragma once

#include <stdexcept>
#include <string>

namespace tlae {

enum class ErrorKind {
  dimension,  // shape mismatch between operands
  domain,     // argument outside an operation's mathematical domain
  contract,   // caller violated a documented precondition
  numeric,    // NaN/inf produced during computation
  config,     // invalid configuration value
  data,       // malformed or insufficient input data
  io,         // filesystem failure
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace tlae
