#pragma once

#include <stdexcept>
#include <string>

namespace eadl {

enum class ErrorKind {
  dimension,    // shape disagreement between operands
  parameter,    // invalid hyperparameter or configuration value
  input,        // malformed or out-of-range user data
  numeric,      // numeric guard tripped (zero norm, non-finite value)
  protocol,     // caller broke a usage protocol (non-deterministic f, no tape)
  length,       // sequence longer than the model accepts
  format,       // on-disk format violation
  contract,     // internal pre/post-condition violated
  unsupported,  // operation not defined for the given variant
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace eadl
