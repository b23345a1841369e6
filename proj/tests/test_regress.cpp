#include <doctest.h>

#include <array>
#include <cmath>

#include "overid/error.hpp"
#include "overid/regress.hpp"
#include "overid/rng.hpp"
#include "overid/scm.hpp"

using namespace overid;

TEST_CASE("exact fits") {
  NormalStream s(1);
  Eigen::MatrixXd X(20, 3);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = s.standard();
  const OlsFit f = ols_fit(X, X.col(0));
  CHECK((f.coefficients - Eigen::Vector3d(1, 0, 0)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(f.residual_variance < 1e-28);

  Eigen::VectorXd x(10);
  for (int i = 0; i < 10; ++i) x(i) = i + 1;
  const OlsFit g = ols_fit(x, 2.0 * x);
  CHECK(g.coefficients(0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(g.n == 10);
  CHECK(g.d == 1);
}

TEST_CASE("residuals are orthogonal to every regressor") {
  const Dataset d = sample(ScmParams{}, 500, 4);
  Eigen::MatrixXd X(500, 3);
  X << d.x(), d.w(), d.m();
  const OlsFit f = ols_fit(X, d.y());
  const Eigen::VectorXd r = d.y() - X * f.coefficients;
  for (int j = 0; j < 3; ++j) {
    CHECK(std::abs(X.col(j).dot(r)) < 1e-8 * X.col(j).norm() * d.y().norm());
  }
}

TEST_CASE("mediator slope recovers c within three standard errors") {
  const ScmParams p;
  const std::size_t n = 100000;
  const Dataset d = sample(p, n, 8);
  const OlsFit f = ols_fit(d.x(), d.m());
  Eigen::MatrixXd sx(1, 1);
  sx << p.var_x();
  const double var = ols_coef_variance(p.var_um, sx, n, 1)(0, 0);
  CHECK(std::abs(f.coefficients(0) - p.c) < 3.0 * std::sqrt(var));
}

TEST_CASE("collinear and underdetermined designs") {
  Eigen::MatrixXd X(10, 2);
  for (int i = 0; i < 10; ++i) X.row(i) << i + 1.0, 2.0 * (i + 1.0);
  try {
    ols_fit(X, X.col(0));
    FAIL("expected a collinearity error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Collinearity);
    CHECK(std::string(e.what()).find("condition number") != std::string::npos);
  }
  try {
    ols_fit(Eigen::MatrixXd::Identity(2, 3), Eigen::VectorXd::Ones(2));
    FAIL("expected an underdetermined error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Underdetermined);
  }
}

TEST_CASE("coefficient variance helper") {
  CHECK(ols_coef_variance(1.0, Eigen::MatrixXd::Identity(1, 1), 4, 1)(0, 0) == doctest::Approx(0.5));
  CHECK(ols_coef_variance(0.0, Eigen::MatrixXd::Identity(2, 2), 10, 2).cwiseAbs().maxCoeff() == 0.0);
  try {
    ols_coef_variance(1.0, Eigen::MatrixXd::Identity(1, 1), 2, 1);
    FAIL("expected a degrees-of-freedom error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegreesOfFreedom);
  }

  // Y on {X, W}: the X entry reproduces the backdoor finite-sample variance.
  const ScmParams p;
  const std::array<Var, 2> order{Var::X, Var::W};
  const Eigen::MatrixXd cov = implied_covariance(p, order).entries;
  for (std::size_t n : {10u, 50u, 103u}) {
    const double err_var = p.a * p.a * p.var_um + p.var_uy;
    const double v = ols_coef_variance(err_var, cov, n, 2)(0, 0);
    CHECK(v == doctest::Approx(err_var / ((n - 3.0) * p.var_ux)).epsilon(1e-12));
  }
}

TEST_CASE("empirical coefficient covariance matches the inverse-Wishart moment") {
  const ScmParams p{2, 1.5, 1, 0.8, 1, 0.7, 1, 1};
  const std::size_t n = 50, reps = 2000;
  Eigen::MatrixXd coefs(reps, 2);
  for (std::size_t r = 0; r < reps; ++r) {
    const Dataset d = sample(p, n, 1000 + r);
    Eigen::MatrixXd X(n, 2);
    X << d.x(), d.w();
    coefs.row(static_cast<Eigen::Index>(r)) = ols_fit(X, d.y()).coefficients.transpose();
  }
  const Eigen::MatrixXd c = coefs.rowwise() - coefs.colwise().mean();
  const Eigen::MatrixXd emp = c.transpose() * c / (reps - 1.0);
  const std::array<Var, 2> order{Var::X, Var::W};
  const Eigen::MatrixXd theory = ols_coef_variance(p.a * p.a * p.var_um + p.var_uy,
                                                   implied_covariance(p, order).entries, n, 2);
  const Eigen::MatrixXd rel = ((emp - theory).array() / theory.array()).abs();
  CHECK(rel.maxCoeff() < 0.15);
}
