#include "overid/error.hpp"

namespace overid {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParams: return "invalid_params";
    case ErrorCode::Schema: return "schema";
    case ErrorCode::EmptyDataset: return "empty_dataset";
    case ErrorCode::Collinearity: return "collinearity";
    case ErrorCode::Underdetermined: return "underdetermined";
    case ErrorCode::DegreesOfFreedom: return "degrees_of_freedom";
    case ErrorCode::UndefinedIdeal: return "undefined_ideal";
    case ErrorCode::DivergentThreshold: return "divergent_threshold";
    case ErrorCode::NoRealSolution: return "no_real_solution";
    case ErrorCode::InvalidTheta: return "invalid_theta";
    case ErrorCode::Reparameterization: return "reparameterization";
    case ErrorCode::SingularInformation: return "singular_information";
    case ErrorCode::Initialization: return "initialization";
    case ErrorCode::PropensityDegenerate: return "propensity_degenerate";
    case ErrorCode::Config: return "config";
  }
  return "unknown";
}

int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config: return 1;
    case ErrorCode::Schema: return 2;
    default: return 3;
  }
}

}  // namespace overid
