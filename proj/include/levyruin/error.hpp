#pragma once

#include <stdexcept>
#include <string>

namespace levyruin {

enum class ErrorKind {
  InvalidArgument,
  Unclassifiable,
  Quadrature,
  Truncation,
  Coverage,
  Singular,
  Convergence,
  Numerical,
  Gate,
  Mismatch,
  Config,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace levyruin
