#include "overid/estimators.hpp"

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>

#include "overid/error.hpp"
#include "overid/regress.hpp"

namespace overid {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Backdoor: return "backdoor";
    case Method::Frontdoor: return "frontdoor";
    case Method::Combined: return "combined";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "backdoor") return Method::Backdoor;
  if (name == "frontdoor") return Method::Frontdoor;
  if (name == "combined") return Method::Combined;
  throw Error(ErrorCode::Config, "unknown method '" + std::string(name) + "'");
}

double VarianceTheory::point() const {
  if (const auto* iv = std::get_if<Interval>(&finite_sample)) return iv->midpoint();
  return std::get<double>(finite_sample);
}

namespace {

constexpr double kMinVariance = 1e-12;

void check_theory_params(const ScmParams& p) {
  p.validate();
  const double vars[] = {p.var_uw, p.var_ux, p.var_um, p.var_uy};
  for (double v : vars) {
    if (v < kMinVariance) {
      throw Error(ErrorCode::InvalidParams, "noise variances below 1e-12 are degenerate");
    }
  }
}

void require_n(std::size_t n, std::size_t min_n, const char* what) {
  if (n < min_n) {
    throw Error(ErrorCode::DegreesOfFreedom, std::string(what) + " needs n >= " +
                                                 std::to_string(min_n) + ", got " +
                                                 std::to_string(n));
  }
}

// [first | W columns]
Eigen::MatrixXd with_w(const Eigen::VectorXd& first, const Eigen::MatrixXd& w) {
  Eigen::MatrixXd out(first.size(), 1 + w.cols());
  out.col(0) = first;
  out.rightCols(w.cols()) = w;
  return out;
}

double coef0(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return ols_fit(x, y).coefficients(0);
}

double c_hat_of(const Dataset& data) {
  return coef0(data.x(), data.m());
}

EffectReport make_report(Method method, double est, const Dataset& data,
                         const std::optional<ScmParams>& params) {
  EffectReport r;
  r.method = method;
  r.estimate = est;
  r.n = data.size();
  if (r.n <= 10) {
    r.warnings.push_back("n <= 10: finite-sample Wishart moments are barely defined");
  }
  if (params) {
    try {
      r.theory = theory_for(method, *params, r.n);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegreesOfFreedom) throw;
      r.warnings.push_back(std::string("theory omitted: ") + e.what());
    }
  }
  return r;
}

}  // namespace

double backdoor_point(const Dataset& data) {
  return coef0(with_w(data.x(), data.w()), data.y());
}

ProductParts frontdoor_parts(const Dataset& data) {
  Eigen::MatrixXd mx(data.size(), 2);
  mx.col(0) = data.m();
  mx.col(1) = data.x();
  return {coef0(mx, data.y()), c_hat_of(data)};
}

ProductParts combined_parts(const Dataset& data) {
  return {coef0(with_w(data.m(), data.w()), data.y()), c_hat_of(data)};
}

EffectReport backdoor_estimate(const Dataset& data, const std::optional<ScmParams>& params) {
  if (!data.has_w()) throw Error(ErrorCode::Schema, "backdoor estimator requires column w");
  return make_report(Method::Backdoor, backdoor_point(data), data, params);
}

EffectReport frontdoor_estimate(const Dataset& data, const std::optional<ScmParams>& params) {
  if (!data.has_m()) throw Error(ErrorCode::Schema, "frontdoor estimator requires column m");
  return make_report(Method::Frontdoor, frontdoor_parts(data).product(), data, params);
}

EffectReport combined_estimate(const Dataset& data, const std::optional<ScmParams>& params) {
  if (!data.has_w() || !data.has_m()) {
    throw Error(ErrorCode::Schema, "combined estimator requires columns w and m");
  }
  return make_report(Method::Combined, combined_parts(data).product(), data, params);
}

EffectReport estimate(Method method, const Dataset& data, const std::optional<ScmParams>& params) {
  switch (method) {
    case Method::Backdoor: return backdoor_estimate(data, params);
    case Method::Frontdoor: return frontdoor_estimate(data, params);
    case Method::Combined: return combined_estimate(data, params);
  }
  throw Error(ErrorCode::Config, "unknown method");
}

double var_c_hat(const ScmParams& p, std::size_t n) {
  check_theory_params(p);
  require_n(n, 3, "Var(c_hat)");
  return p.var_um / ((static_cast<double>(n) - 2.0) * p.var_x());
}

double var_a_frontdoor(const ScmParams& p, std::size_t n) {
  check_theory_params(p);
  require_n(n, 4, "Var(a_f)");
  const double D = p.var_x();
  return (p.b * p.b * p.var_uw * p.var_ux + p.var_uy * D) /
         ((static_cast<double>(n) - 3.0) * D * p.var_um);
}

double var_a_combined(const ScmParams& p, std::size_t n) {
  check_theory_params(p);
  require_n(n, 4, "Var(a_c)");
  return p.var_uy / ((static_cast<double>(n) - 3.0) * (p.c * p.c * p.var_ux + p.var_um));
}

VarianceTheory backdoor_variance(const ScmParams& p, std::size_t n) {
  check_theory_params(p);
  require_n(n, 4, "backdoor variance");
  const double num = p.a * p.a * p.var_um + p.var_uy;
  return {num / ((static_cast<double>(n) - 3.0) * p.var_ux), num / p.var_ux};
}

VarianceTheory frontdoor_variance(const ScmParams& p, std::size_t n) {
  const double va = var_a_frontdoor(p, n);
  const double vc = var_c_hat(p, n);
  const double D = p.var_x();
  const double finite = p.c * p.c * va + p.a * p.a * vc + 2.0 * va * vc;
  const double asym = p.c * p.c * (p.b * p.b * p.var_uw * p.var_ux + p.var_uy * D) /
                          (D * p.var_um) +
                      p.a * p.a * p.var_um / D;
  return {finite, asym};
}

VarianceTheory combined_variance(const ScmParams& p, std::size_t n) {
  check_theory_params(p);
  require_n(n, 6, "combined variance interval");
  const double nd = static_cast<double>(n);
  const double va = var_a_combined(p, n);
  const double vc = var_c_hat(p, n);
  const double r1 = std::sqrt((nd - 3.0) / (nd - 5.0));
  const double cross = std::sqrt(3.0) * std::sqrt((nd - 2.0) / (nd - 4.0));
  const double upper = p.c * p.c * va + p.a * p.a * vc +
                       r1 * (2.0 * std::abs(p.c) * va * std::sqrt(vc) + cross * va * vc);
  const double L = p.c * p.c * p.var_uy / (p.c * p.c * p.var_ux + p.var_um) +
                   p.a * p.a * p.var_um / p.var_x();
  return {Interval{L / nd, upper}, L};
}

VarianceTheory theory_for(Method method, const ScmParams& params, std::size_t n) {
  switch (method) {
    case Method::Backdoor: return backdoor_variance(params, n);
    case Method::Frontdoor: return frontdoor_variance(params, n);
    case Method::Combined: return combined_variance(params, n);
  }
  throw Error(ErrorCode::Config, "unknown method");
}

double ideal_mediator_frontdoor(const ScmParams& p, std::size_t n) {
  check_theory_params(p);
  require_n(n, 4, "ideal frontdoor mediator");
  if (p.a == 0.0) {
    throw Error(ErrorCode::UndefinedIdeal, "a = 0: the frontdoor-optimal mediator variance diverges");
  }
  const double nd = static_cast<double>(n);
  const double D = p.var_x();
  return std::abs(p.c) * std::sqrt(p.b * p.b * p.var_uw * p.var_ux + p.var_uy * D) /
         std::abs(p.a) * std::sqrt((nd - 2.0) / (nd - 3.0));
}

double ideal_mediator_combined(const ScmParams& p) {
  check_theory_params(p);
  if (p.a == 0.0) {
    throw Error(ErrorCode::UndefinedIdeal, "a = 0: the combined-optimal mediator variance diverges");
  }
  const double v = std::abs(p.c) * std::sqrt(p.var_uy) * std::sqrt(p.var_x()) / std::abs(p.a) -
                   p.c * p.c * p.var_ux;
  return std::max(0.0, v);
}

double variance_ratio(const ScmParams& p, std::size_t n) {
  check_theory_params(p);
  require_n(n, 4, "variance ratio");
  const double nd = static_cast<double>(n);
  const double D = p.var_x();
  const double vm = p.var_um, vx = p.var_ux, vy = p.var_uy;
  const double a2 = p.a * p.a, c2 = p.c * p.c;
  const double E = p.b * p.b * p.var_uw * vx + vy * D;
  const double num = (nd - 2.0) * vm * D * D * (a2 * vm + vy);
  const double den = vx * ((nd - 3.0) * a2 * vm * vm * D + (2.0 * vm + c2 * (nd - 2.0) * D) * E);
  return num / den;
}

std::optional<Method> preferred_single_estimator(const ScmParams& params, std::size_t n) {
  const double bd = std::get<double>(backdoor_variance(params, n).finite_sample);
  const double fd = std::get<double>(frontdoor_variance(params, n).finite_sample);
  if (bd == fd) return std::nullopt;
  return bd < fd ? Method::Backdoor : Method::Frontdoor;
}

double dominance_threshold(const ScmParams& p, Method against) {
  check_theory_params(p);
  if (against == Method::Combined) {
    throw Error(ErrorCode::Config, "dominance threshold is against backdoor or frontdoor");
  }
  // With kappa_a = (n-3) Var(a_c), kappa_c = (n-2) Var(c_hat), the scaled gap
  // (n-3) * (competitor - combined upper) is at least gap - h(n), where h
  // collects the r1-weighted cross terms and decreases strictly on (5, inf).
  const double D = p.var_x();
  const double E = p.c * p.c * p.var_ux + p.var_um;
  const double ka = p.var_uy / E;
  const double kc = p.var_um / D;
  const double a2 = p.a * p.a, c2 = p.c * p.c;
  double gap = 0.0;
  if (against == Method::Backdoor) {
    const double L = c2 * ka + a2 * kc;
    gap = (a2 * p.var_um + p.var_uy) / p.var_ux - L;
  } else {
    if (p.c == 0.0) {
      throw Error(ErrorCode::DivergentThreshold,
                  "c = 0: combined and frontdoor variances share the same leading term");
    }
    const double kf = (p.b * p.b * p.var_uw * p.var_ux + p.var_uy * D) / (D * p.var_um);
    gap = c2 * (kf - ka);
  }
  if (!(gap > 0.0)) {
    throw Error(ErrorCode::DivergentThreshold, "no asymptotic variance gap to close");
  }
  const double abs_c = std::abs(p.c);
  auto h = [&](double n) {
    const double r1 = std::sqrt((n - 3.0) / (n - 5.0));
    const double r2 = std::sqrt((n - 2.0) / (n - 4.0));
    return r1 * (2.0 * abs_c * ka * std::sqrt(kc / (n - 2.0)) +
                 std::sqrt(3.0) * r2 * ka * kc / (n - 2.0));
  };
  auto f = [&](double n) { return h(n) - gap; };
  double lo = 5.0 + 1e-9;
  if (f(lo) <= 0.0) return 5.0;
  double hi = 16.0;
  while (f(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw Error(ErrorCode::DivergentThreshold, "threshold overflow");
  }
  std::uintmax_t iters = 200;
  const auto bracket = boost::math::tools::toms748_solve(
      f, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
  return bracket.second;
}

double equal_variance_c_bound(const ScmParams& p, std::size_t n) {
  const double nd = static_cast<double>(n);
  const double inner = 1.0 - 2.0 * p.var_ux / ((nd - 2.0) * p.var_x());
  if (inner < 0.0) return -1.0;
  return std::sqrt(p.var_um / p.var_ux) * std::sqrt(inner);
}

double equal_variance_b(const ScmParams& p, std::size_t n) {
  check_theory_params(p);
  require_n(n, 4, "equal-variance b");
  const double bound = equal_variance_c_bound(p, n);
  if (!(std::abs(p.c) <= bound)) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "no real b: |c| = %.6g exceeds the bound %.6g for equal variances", std::abs(p.c),
                  bound);
    throw Error(ErrorCode::NoRealSolution, buf);
  }
  const double nd = static_cast<double>(n);
  const double D = p.var_x();
  const double vw = p.var_uw, vx = p.var_ux, vm = p.var_um, vy = p.var_uy;
  const double a2 = p.a * p.a, c2 = p.c * p.c, d2 = p.d * p.d;
  const double E = (nd - 2.0) * c2 * vx - (nd - 4.0) * vm;
  const double num =
      -D * (-a2 * vm * vm * ((nd - 2.0) * d2 * vw + vx) +
            (-(nd - 2.0) * d2 * vw * (vm - c2 * vx) + vx * E) * vy);
  const double den = vw * vx * vx * (2.0 * vm + (nd - 2.0) * c2 * D);
  const double b2 = num / den;
  if (b2 < 0.0) {
    throw Error(ErrorCode::NoRealSolution, "no real b: squared solution is negative");
  }
  return std::sqrt(b2);
}

double combined_dominance_ratio_bound(const ScmParams& p, std::size_t n) {
  check_theory_params(p);
  require_n(n, 6, "dominance ratio bound");
  const double nd = static_cast<double>(n);
  const double vx = p.var_ux, vm = p.var_um, vy = p.var_uy;
  const double a2 = p.a * p.a, abs_c = std::abs(p.c);
  const double D = p.var_x();
  const double E = p.c * p.c * vx + vm;
  const double r1 = std::sqrt((nd - 3.0) / (nd - 5.0));
  const double r2 = std::sqrt((nd - 2.0) / (nd - 4.0));
  const double F = (nd - 3.0) * a2 * vm * E;
  const double G = r1 * std::sqrt(vm) / std::sqrt((nd - 2.0) * D);
  const double H = r1 * r2 + abs_c * (nd - 2.0) * D * (abs_c + G);
  return (nd - 2.0) * D * E * (a2 * vm + vy) /
         (vx * (F + vy * (vm + std::sqrt(3.0) * vm * H)));
}

}  // namespace overid
