#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string_view>

#include "overid/scm.hpp"

namespace overid {

/// Frontdoor: no confounder in any nuisance.
/// Fulcher: outcome on {M, X, W}, mediator on {X, W}.
/// Restricted: outcome on {M, W}, mediator on {X}.
/// RestrictedDensity: outcome on {M, X, W}, mediator on {X} (only the
/// mediator restriction imposed).
enum class IfVariant { Frontdoor, Fulcher, Restricted, RestrictedDensity };

std::string_view to_string(IfVariant v);
IfVariant parse_if_variant(std::string_view name);

/// Fitted nuisance models. Every linear predictor includes an intercept.
/// Fields are public so callers can perturb a fit (e.g. misspecification checks).
struct NuisanceSet {
  IfVariant variant = IfVariant::Restricted;
  bool outcome_uses_x = false;
  bool outcome_uses_w = true;
  bool mediator_uses_w = false;
  bool propensity_uses_w = true;

  // Outcome mean: [1, m, x?, w...?]
  Eigen::VectorXd outcome_coef;
  // Mediator mean: [1, x, w...?], Gaussian with constant sd.
  Eigen::VectorXd mediator_coef;
  double mediator_sd = 1.0;
  // P(X = 1 | W): logistic on [1, w...?]
  Eigen::VectorXd propensity_coef;

  double outcome_mean(double m, double x, const Eigen::Ref<const Eigen::RowVectorXd>& w) const;
  double mediator_mean(double x, const Eigen::Ref<const Eigen::RowVectorXd>& w) const;
  double mediator_density(double m, double x, const Eigen::Ref<const Eigen::RowVectorXd>& w) const;
  double propensity(const Eigen::Ref<const Eigen::RowVectorXd>& w) const;
};

/// Fits all nuisances. Requires a Full dataset with x in {0, 1} and n >= 20.
/// Throws Schema for a non-binary treatment and PropensityDegenerate when
/// the logistic fit separates.
NuisanceSet fit_nuisances(const Dataset& data, IfVariant variant);

struct IfOptions {
  double propensity_clip = 0.01;  // clip to [clip, 1 - clip]
  double ratio_cap = 100.0;       // density-ratio trimming
};

struct IfEstimate {
  double psi = 0.0;
  Eigen::VectorXd contributions;  // per-observation terms, mean = psi
  double residual_term = 0.0;     // mean of the density-ratio weighted residual term
  std::size_t trimmed = 0;
  std::size_t clipped = 0;
};

/// Three-term influence-function estimate of E[Y | do(X = x_star)].
IfEstimate if_estimate(const Dataset& data, const NuisanceSet& nuisances, int x_star,
                       const IfOptions& options = {});

struct IfReport {
  IfVariant variant = IfVariant::Restricted;
  double psi_treated = 0.0;
  double psi_control = 0.0;
  double ate = 0.0;
  double std_error = 0.0;  // from the per-observation contribution differences
  std::size_t trimmed = 0;
  std::size_t clipped = 0;
};

IfReport if_ate(const Dataset& data, IfVariant variant, const IfOptions& options = {});
IfReport if_ate(const Dataset& data, const NuisanceSet& nuisances, const IfOptions& options = {});

}  // namespace overid
