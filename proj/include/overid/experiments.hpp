#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "overid/estimators.hpp"
#include "overid/rng.hpp"
#include "overid/scm.hpp"
#include "overid/semiparam.hpp"

namespace overid {

enum class Estimator {
  Backdoor,
  Frontdoor,
  Combined,
  IfFrontdoor,
  IfFulcher,
  IfRestricted,
  IfRestrictedDensity,
  PartialMle,
};

std::string_view to_string(Estimator e);
Estimator parse_estimator(std::string_view name);

struct McConfig {
  std::size_t reps = 200;
  std::vector<std::size_t> n_values{50, 100, 200};
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 = default_threads()
  // Parameter source: a fixed point, or `draws` samples from the random prior
  // (a, b, c, d ~ U[-10, 10], variances ~ U[0.01, 2]).
  std::optional<ScmParams> fixed;
  std::size_t draws = 50;
  std::vector<Method> methods{Method::Backdoor, Method::Frontdoor, Method::Combined};
  std::size_t mle_bootstrap_reps = 100;  // partial-data initializer
};

/// Aggregate over the replications of one (estimator, n) cell.
struct McRow {
  std::string estimator;
  std::size_t n = 0;
  std::size_t reps = 0;      // replications actually used
  std::size_t excluded = 0;  // failed replications
  std::size_t flagged = 0;   // e.g. non-converged MLE fits (included)
  std::uint64_t seed = 0;    // base seed of the cell's replications
  double truth = 0.0;
  double mean = 0.0;
  double variance = 0.0;  // empirical, denominator reps - 1
  double mse = 0.0;
  double mse_se = 0.0;  // Monte Carlo standard error of mse
  std::optional<double> theory_variance;
  std::optional<Interval> theory_interval;
  std::vector<double> estimates;       // per replication (NaN when excluded)
  std::vector<double> squared_errors;  // per replication (NaN when excluded)
};

/// MAPE of the theoretical variance, aggregated over parameter draws.
struct MapeRow {
  std::string estimator;
  std::size_t n = 0;
  std::size_t draws = 0;
  std::size_t reps = 0;
  double mape_mean = 0.0;  // percent
  double mape_std = 0.0;
  std::optional<double> inside_fraction;  // combined: empirical variance inside the interval
};

struct McSummary {
  std::uint64_t seed = 0;
  std::vector<McRow> rows;
  std::vector<MapeRow> mape;
  std::size_t resampled_draws = 0;  // prior draws rejected for |a| or |c| < 0.05
  std::vector<ScmParams> params;    // accepted prior draws

  const McRow& row(std::string_view estimator, std::size_t n) const;
  const MapeRow& mape_row(std::string_view estimator, std::size_t n) const;
};

/// Paired difference of per-replication squared errors, lhs minus rhs.
struct PairedGap {
  double mean = 0.0;
  double se = 0.0;
  std::size_t pairs = 0;
  /// Gap in units of its standard error (negative: lhs has lower MSE).
  double z() const { return se > 0 ? mean / se : 0.0; }
};
PairedGap paired_gap(const McRow& lhs, const McRow& rhs);

/// Mean and variance of a sample with fixed-order pairwise summation.
struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};
Moments sample_moments(const std::vector<double>& values);

/// One draw from the random parameter prior; consumes eight uniforms.
ScmParams draw_prior(NormalStream& stream);

/// Theoretical-variance MAPE over `config.draws` prior draws (or the fixed
/// params), `config.reps` datasets per n. Requires reps >= 2.
McSummary mape_experiment(const McConfig& config);

/// MSE of the full-data estimators at fixed params for every n.
McSummary mse_comparison(const McConfig& config, const ScmParams& params);

/// Each replication samples N rows, gives the first half to the backdoor
/// estimator (w only), the second half to the frontdoor estimator (m only),
/// and fits the partial-data MLE on both halves.
McSummary partial_mse_comparison(const McConfig& config, const ScmParams& params);

struct IhdpSetting {
  std::string label;
  double a = 10.0;
  double c = 5.0;
  double sigma_um = 1.0;
};
IhdpSetting ihdp_setting(std::string_view label);  // "S1" or "S2"

struct Covariates {
  Eigen::MatrixXd w;  // standardized columns
  Eigen::VectorXd x;  // binary treatment
};

/// Synthetic stand-in for the infant-health covariates: 6 continuous and
/// 19 binary columns, standardized, with a logistic treatment assignment.
Covariates synthetic_ihdp_covariates(std::size_t rows, std::size_t cols, std::uint64_t seed);

/// Standardizes each covariate column to zero mean and unit variance.
Eigen::MatrixXd standardize(const Eigen::MatrixXd& w);

/// Semi-synthetic protocol: per replication draw b_j in {0..4} with
/// probabilities (.5, .2, .15, .1, .05), M ~ N(cX, sigma_um^2),
/// Y ~ N(aM + w^T b, 1), and score every estimator against a*c.
McSummary ihdp_protocol(const Covariates& cov, const IhdpSetting& setting, std::size_t reps,
                        std::uint64_t seed, unsigned threads = 0);

struct BootstrapConfig {
  std::size_t b = 1000;
  std::uint64_t seed = 0;
  std::optional<double> truth;
  std::vector<Estimator> estimators{Estimator::Backdoor, Estimator::Frontdoor,
                                    Estimator::Combined};
  bool center = false;   // center every resample before the linear estimators
  bool partial = false;  // also split each resample in half for the partial MLE
  std::size_t mle_bootstrap_reps = 20;
  unsigned threads = 0;
};

/// Pairs bootstrap of each estimator on one dataset. Failed iterations are
/// excluded and counted per estimator.
McSummary bootstrap_eval(const Dataset& data, const BootstrapConfig& config);

/// Single estimate of any estimator on a dataset (centering applied for the
/// linear estimators when `center` is set).
double run_estimator(Estimator e, const Dataset& data, bool center);

}  // namespace overid
