#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace overid {

enum class ErrorCode {
  InvalidParams,
  Schema,
  EmptyDataset,
  Collinearity,
  Underdetermined,
  DegreesOfFreedom,
  UndefinedIdeal,
  DivergentThreshold,
  NoRealSolution,
  InvalidTheta,
  Reparameterization,
  SingularInformation,
  Initialization,
  PropensityDegenerate,
  Config,
};

std::string_view to_string(ErrorCode code);

/// Process exit status for a failure of the given kind:
/// 1 for configuration problems, 2 for schema mismatches, 3 for numeric failures.
int exit_status(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace overid
