#include "overid/regress.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "overid/error.hpp"

namespace overid {

double condition_number(const Eigen::MatrixXd& gram) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double lo = ev.minCoeff(), hi = ev.maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

OlsFit ols_fit(const Eigen::MatrixXd& regressors, const Eigen::VectorXd& response,
               double max_condition) {
  const auto n = static_cast<std::size_t>(regressors.rows());
  const auto d = static_cast<std::size_t>(regressors.cols());
  if (response.size() != regressors.rows()) {
    throw Error(ErrorCode::Schema, "response length differs from regressor rows");
  }
  if (n < d) {
    throw Error(ErrorCode::Underdetermined, "ols_fit: n=" + std::to_string(n) +
                                                " rows for d=" + std::to_string(d) + " regressors");
  }
  const double cond = condition_number(regressors.transpose() * regressors);
  if (!(cond <= max_condition)) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "ols_fit: Gram condition number %.3e exceeds %.3e", cond,
                  max_condition);
    throw Error(ErrorCode::Collinearity, buf);
  }
  OlsFit fit;
  fit.n = n;
  fit.d = d;
  fit.coefficients = regressors.colPivHouseholderQr().solve(response);
  if (n > d) {
    const Eigen::VectorXd resid = response - regressors * fit.coefficients;
    fit.residual_variance = resid.squaredNorm() / static_cast<double>(n - d);
  }
  return fit;
}

Eigen::MatrixXd ols_coef_variance(double error_variance, const Eigen::MatrixXd& regressor_cov,
                                  std::size_t n, std::size_t d) {
  if (n <= d + 1) {
    throw Error(ErrorCode::DegreesOfFreedom,
                "ols_coef_variance needs n > d + 1 (n=" + std::to_string(n) +
                    ", d=" + std::to_string(d) + ")");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(regressor_cov);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::Collinearity, "regressor covariance is not positive definite");
  }
  const auto k = regressor_cov.rows();
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(k, k));
  return error_variance * inv / static_cast<double>(n - d - 1);
}

}  // namespace overid
