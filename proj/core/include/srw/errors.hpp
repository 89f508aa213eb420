#pragma once

#include <stdexcept>
#include <string>

namespace srw {

/// Malformed input data or a violated operation precondition.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Structurally valid input that admits no feasible solution
/// (budget larger than the population, pilot floor unsatisfiable, ...).
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

/// Every per-group standard deviation is zero; optimal allocation is
/// undefined and the caller may fall back to proportional allocation.
class ZeroSdError : public ValidationError {
 public:
  explicit ZeroSdError(const std::string& what) : ValidationError(what) {}
};

}  // namespace srw
