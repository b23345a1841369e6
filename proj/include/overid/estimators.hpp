#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "overid/scm.hpp"

namespace overid {

enum class Method { Backdoor, Frontdoor, Combined };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double midpoint() const { return 0.5 * (lower + upper); }
  bool contains(double v) const { return lower <= v && v <= upper; }
};

struct VarianceTheory {
  std::variant<double, Interval> finite_sample;
  double asymptotic_normalized = 0.0;  // variance of sqrt(n) * (estimate - ac)

  bool is_interval() const { return std::holds_alternative<Interval>(finite_sample); }
  /// The finite-sample value, or the interval midpoint for interval-valued theory.
  double point() const;
};

struct EffectReport {
  Method method = Method::Backdoor;
  double estimate = 0.0;
  std::size_t n = 0;
  std::optional<VarianceTheory> theory;
  std::vector<std::string> warnings;
};

/// The two OLS coefficients whose product is a two-stage estimate.
struct ProductParts {
  double a_hat = 0.0;
  double c_hat = 0.0;
  double product() const { return a_hat * c_hat; }
};

// Point estimators. All regressions are intercept-free; center upstream for
// data that are not zero mean. Multivariate confounders enter as extra columns.

/// X-coefficient of Y ~ {X, W}.
double backdoor_point(const Dataset& data);
/// c_hat from M ~ X, a_hat from the M-coefficient of Y ~ {M, X}.
ProductParts frontdoor_parts(const Dataset& data);
/// c_hat from M ~ X, a_hat from the M-coefficient of Y ~ {M, W}.
ProductParts combined_parts(const Dataset& data);

EffectReport backdoor_estimate(const Dataset& data,
                               const std::optional<ScmParams>& params = std::nullopt);
EffectReport frontdoor_estimate(const Dataset& data,
                                const std::optional<ScmParams>& params = std::nullopt);
EffectReport combined_estimate(const Dataset& data,
                               const std::optional<ScmParams>& params = std::nullopt);
EffectReport estimate(Method method, const Dataset& data,
                      const std::optional<ScmParams>& params = std::nullopt);

// Closed-form variance theory for the scalar-W model.

VarianceTheory backdoor_variance(const ScmParams& params, std::size_t n);
VarianceTheory frontdoor_variance(const ScmParams& params, std::size_t n);
/// Finite sample is the interval [L/n, upper bound]; asymptotic is L.
VarianceTheory combined_variance(const ScmParams& params, std::size_t n);
VarianceTheory theory_for(Method method, const ScmParams& params, std::size_t n);

/// Finite-sample variances of the individual coefficients.
double var_c_hat(const ScmParams& params, std::size_t n);
double var_a_frontdoor(const ScmParams& params, std::size_t n);
double var_a_combined(const ScmParams& params, std::size_t n);

/// Mediator noise variance minimizing the frontdoor finite-sample variance.
double ideal_mediator_frontdoor(const ScmParams& params, std::size_t n);
/// Mediator noise variance minimizing the combined asymptotic variance.
double ideal_mediator_combined(const ScmParams& params);

/// Backdoor finite variance over frontdoor finite variance, in closed form.
/// Values above 1 favour the frontdoor estimator.
double variance_ratio(const ScmParams& params, std::size_t n);

/// Which single-source estimator has the smaller finite variance; nullopt on
/// an exact tie, which is left for the caller to resolve.
std::optional<Method> preferred_single_estimator(const ScmParams& params, std::size_t n);

/// Sample size N such that for every n > N the upper end of the combined
/// finite-sample interval is below the competitor's finite variance.
/// Throws DivergentThreshold against the frontdoor estimator when c == 0.
double dominance_threshold(const ScmParams& params, Method against);

/// Value of b >= 0 that makes the backdoor and frontdoor finite variances
/// equal; the b field of `params` is ignored. Throws NoRealSolution when
/// |c| exceeds the sufficient bound (sigma_um / sigma_ux) sqrt(1 - 2 var_ux / ((n-2) D)).
double equal_variance_b(const ScmParams& params, std::size_t n);

/// Upper bound on |c| for which equal_variance_b is guaranteed real.
double equal_variance_c_bound(const ScmParams& params, std::size_t n);

/// Lower bound on min(Var_bd, Var_fd) / Var_combined valid when the two
/// single-source variances coincide.
double combined_dominance_ratio_bound(const ScmParams& params, std::size_t n);

}  // namespace overid
