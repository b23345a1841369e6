#include "overid/optim.hpp"

#include <cmath>
#include <limits>

namespace overid {

namespace {

bool tolerance_met(double gnorm, double f, const BfgsOptions& opt) {
  return gnorm <= opt.grad_tol_rel * (1.0 + std::abs(f));
}

}  // namespace

BfgsResult bfgs_minimize(const Objective& fn, Eigen::VectorXd x0, const BfgsOptions& opt) {
  const auto dim = x0.size();
  BfgsResult res;
  Eigen::VectorXd g(dim);
  double f = fn(x0, g);
  res.x = x0;
  res.f = f;
  res.grad_norm = std::isfinite(f) ? g.lpNorm<Eigen::Infinity>() : std::numeric_limits<double>::infinity();
  if (!std::isfinite(f)) return res;

  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(dim, dim);
  // Scale the first step so it is of order one in x.
  const double gmax = res.grad_norm;
  if (gmax > 1.0) Hinv /= gmax;

  Eigen::VectorXd x = x0, g_new(dim), x_new(dim);
  bool restarted = false;
  for (int it = 0; it < opt.max_iter; ++it) {
    if (tolerance_met(g.lpNorm<Eigen::Infinity>(), f, opt)) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd p = -Hinv * g;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      Hinv.setIdentity();
      p = -g;
      slope = -g.squaredNorm();
    }

    // Weak Wolfe bracketing: shrink on Armijo failure, grow on curvature failure.
    double lo = 0.0, hi = std::numeric_limits<double>::infinity(), t = 1.0;
    bool accepted = false;
    double f_new = f;
    for (int ls = 0; ls < opt.max_line_steps; ++ls) {
      x_new = x + t * p;
      f_new = fn(x_new, g_new);
      const double dg = g_new.dot(p);
      // Near the optimum f stops resolving Armijo decreases; the approximate
      // Wolfe test then decides on the directional derivative alone.
      const bool approx_wolfe = std::isfinite(f_new) && f_new <= f + 1e-12 * std::abs(f) &&
                                dg >= opt.c2 * slope && dg <= (2.0 * opt.c1 - 1.0) * slope;
      if (approx_wolfe) {
        accepted = true;
        break;
      }
      if (!std::isfinite(f_new) || f_new > f + opt.c1 * t * slope) {
        hi = t;
      } else if (dg < opt.c2 * slope) {
        lo = t;
      } else {
        accepted = true;
        break;
      }
      t = std::isinf(hi) ? 2.0 * lo : 0.5 * (lo + hi);
    }
    if (!accepted) {
      // Fall back to the last Armijo-feasible point if any progress was made.
      if (lo > 0.0) {
        x_new = x + lo * p;
        f_new = fn(x_new, g_new);
        accepted = std::isfinite(f_new) && f_new < f;
      }
      if (!accepted && !restarted) {
        // A stale curvature model can point nowhere useful; retry once along
        // the scaled steepest-descent direction.
        restarted = true;
        Hinv = Eigen::MatrixXd::Identity(dim, dim) / std::max(1.0, g.lpNorm<Eigen::Infinity>());
        continue;
      }
      if (!accepted) {
        res.line_search_failed = true;
        res.iterations = it;
        break;
      }
    }
    restarted = false;

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    x = x_new;
    f = f_new;
    g = g_new;
    res.iterations = it + 1;
    if (f < res.f) {
      res.f = f;
      res.x = x;
    }

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (it == 0) Hinv = Eigen::MatrixXd::Identity(dim, dim) * (sy / y.squaredNorm());
      const double rho = 1.0 / sy;
      const Eigen::VectorXd Hy = Hinv * y;
      Hinv += (rho * rho * y.dot(Hy) + rho) * (s * s.transpose()) -
              rho * (Hy * s.transpose() + s * Hy.transpose());
    }
  }
  // Report at the best iterate. Values within rounding of the best count as
  // ties, and among ties the last iterate usually has the smaller gradient.
  Eigen::VectorXd gb(dim);
  res.f = fn(res.x, gb);
  res.grad_norm = gb.lpNorm<Eigen::Infinity>();
  const double g_last = g.lpNorm<Eigen::Infinity>();
  if (std::isfinite(f) && f <= res.f + 1e-12 * std::abs(res.f) && g_last < res.grad_norm) {
    res.x = x;
    res.f = f;
    res.grad_norm = g_last;
  }
  res.converged = !res.line_search_failed && tolerance_met(res.grad_norm, res.f, opt);
  return res;
}

}  // namespace overid
