#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "overid/scm.hpp"

namespace overid {

/// Reparameterized model vector with e = a*c in place of c.
/// Index order: e, a, b, d, var_uw, var_ux, var_um, var_uy.
struct ThetaVec {
  static constexpr int kDim = 8;

  double e = 50.0;
  double a = 10.0;
  double b = 4.0;
  double d = 5.0;
  double var_uw = 1.0;
  double var_ux = 1.0;
  double var_um = 1.0;
  double var_uy = 1.0;

  static ThetaVec from_params(const ScmParams& p);
  /// Throws Reparameterization when a == 0.
  ScmParams to_params() const;

  Eigen::VectorXd to_vector() const;
  static ThetaVec from_vector(const Eigen::VectorXd& v);
  static const std::array<const char*, kDim>& names();
};

/// A confounder-only block (x, y, w) with P rows and a mediator-only block
/// (x, y, m) with Q rows; k = P / (P + Q).
class PartialData {
 public:
  PartialData(Dataset confounder_block, Dataset mediator_block);

  /// Splits a full dataset: the first `p` rows keep w, the rest keep m.
  static PartialData split(const Dataset& full, std::size_t p);

  const Dataset& confounder_block() const { return conf_; }
  const Dataset& mediator_block() const { return med_; }
  std::size_t p() const { return conf_.size(); }
  std::size_t q() const { return med_.size(); }
  std::size_t total() const { return p() + q(); }
  double k() const { return static_cast<double>(p()) / static_cast<double>(total()); }

  /// Uncentered second moments of [X, Y, W] and [X, Y, M].
  const Eigen::Matrix3d& moments_p() const { return sp_; }
  const Eigen::Matrix3d& moments_q() const { return sq_; }

 private:
  Dataset conf_;
  Dataset med_;
  Eigen::Matrix3d sp_;
  Eigen::Matrix3d sq_;
};

/// Implied covariances of [X, Y, W] and [X, Y, M] under theta.
Eigen::Matrix3d sigma_p(const ThetaVec& theta);
Eigen::Matrix3d sigma_q(const ThetaVec& theta);

/// Analytic derivatives d Sigma / d theta_i for both blocks.
struct SigmaJacobian {
  Eigen::Matrix3d p;
  Eigen::Matrix3d q;
  std::array<Eigen::Matrix3d, ThetaVec::kDim> dp;
  std::array<Eigen::Matrix3d, ThetaVec::kDim> dq;
};
SigmaJacobian sigma_jacobian(const ThetaVec& theta);

/// Conditional Gaussian log-likelihood given k, up to the 2*pi constant:
/// -(N/2) [k (log det Sp + tr(S_p Sp^-1)) + (1-k) (log det Sq + tr(S_q Sq^-1))].
double partial_loglik(const ThetaVec& theta, const PartialData& data);

/// Same likelihood on explicit moment matrices.
double partial_loglik(const ThetaVec& theta, const Eigen::Matrix3d& moments_p,
                      const Eigen::Matrix3d& moments_q, double n_total, double k);

/// Data-driven starting point: regressions on each block, with e taken from
/// whichever of the backdoor (block 1) or frontdoor (block 2) estimate has the
/// lower pairs-bootstrap variance.
ThetaVec init_theta(const PartialData& data, std::size_t bootstrap_reps, std::uint64_t seed);

struct MleConfig {
  double tol = 1e-8;
  int max_iter = 500;
  std::size_t bootstrap_reps = 100;
  std::uint64_t seed = 0;
  bool multi_start = false;  // 8 additional jittered starts, diagnostics only
};

struct MleResult {
  ThetaVec theta;
  ThetaVec initial;
  double loglik = 0.0;
  double init_loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
};

MleResult mle_fit(const PartialData& data, const MleConfig& config = {});

/// Per-sample Fisher information k I_p + (1-k) I_q in theta coordinates.
Eigen::MatrixXd fisher_information(const ThetaVec& theta, double k);

/// (I^-1)_{e,e}: asymptotic variance of sqrt(N)(e_hat - e).
double cramer_rao_ve(const ThetaVec& theta, double k);

struct OptimalK {
  double k_star = 0.0;
  double ve_star = 0.0;
  std::vector<std::pair<double, double>> curve;  // (k, V_e)
};

/// Evaluates V_e on the grid step, 2 step, ..., 1 - step.
OptimalK optimal_k(const ThetaVec& theta, double grid_step);

}  // namespace overid
