#pragma once

#include <stdexcept>
#include <string>

namespace mispro {

/// Broad failure category. The CLI maps each kind to a distinct exit code.
enum class ErrorKind {
  Usage,      ///< bad arguments or configuration
  Data,       ///< malformed, missing or inconsistent input data
  Numerical,  ///< degenerate statistics or linear algebra
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void throw_usage(const std::string& what);
[[noreturn]] void throw_data(const std::string& what);
[[noreturn]] void throw_numerical(const std::string& what);

}  // namespace mispro
