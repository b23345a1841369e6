#pragma once

#include <Eigen/Dense>
#include <cstddef>

namespace overid {

struct OlsFit {
  Eigen::VectorXd coefficients;
  double residual_variance = 0.0;  // ||y - X b||^2 / (n - d), 0 when n == d
  std::size_t n = 0;
  std::size_t d = 0;
};

/// Intercept-free least squares via column-pivoted QR.
/// Throws Underdetermined when n < d and Collinearity when the Gram matrix
/// condition number exceeds max_condition.
OlsFit ols_fit(const Eigen::MatrixXd& regressors, const Eigen::VectorXd& response,
               double max_condition = 1e12);

/// Exact finite-sample covariance of OLS coefficients with Gaussian regressors:
/// E[(X^T X)^{-1}] sigma^2 = sigma^2 Sigma^{-1} / (n - d - 1).
Eigen::MatrixXd ols_coef_variance(double error_variance, const Eigen::MatrixXd& regressor_cov,
                                  std::size_t n, std::size_t d);

/// Condition number (ratio of extreme eigenvalues) of a symmetric PSD matrix.
double condition_number(const Eigen::MatrixXd& gram);

}  // namespace overid
