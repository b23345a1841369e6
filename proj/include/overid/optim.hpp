#pragma once

#include <Eigen/Dense>
#include <functional>

namespace overid {

/// Objective value and gradient at a point. Non-finite values mark the point
/// as infeasible and make the line search shrink the step.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct BfgsOptions {
  int max_iter = 500;
  double grad_tol_rel = 1e-8;  // stop when ||g||_inf <= grad_tol_rel * (1 + |f|)
  double c1 = 1e-4;            // sufficient decrease
  double c2 = 0.9;             // curvature
  int max_line_steps = 60;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  double grad_norm = 0.0;  // infinity norm at x
  int iterations = 0;
  bool converged = false;
  bool line_search_failed = false;
};

/// Minimizes `fn` with BFGS on the inverse Hessian and a bracketing line
/// search for the weak Wolfe conditions. Returns the best point visited.
BfgsResult bfgs_minimize(const Objective& fn, Eigen::VectorXd x0, const BfgsOptions& opt = {});

}  // namespace overid
