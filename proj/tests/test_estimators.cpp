#include <doctest.h>

#include <cmath>
#include <tuple>
#include <vector>

#include "frozen_values.hpp"
#include "overid/error.hpp"
#include "overid/estimators.hpp"
#include "overid/experiments.hpp"
#include "overid/rng.hpp"

using namespace overid;

namespace {

double finite(const VarianceTheory& t) { return std::get<double>(t.finite_sample); }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Config;
}

struct Mc {
  Moments bd, fd, comb;
  double cov_af_c = 0, cov_ac_c = 0, se_cov_af_c = 0, se_cov_ac_c = 0;
};

// Covariance of two samples and the standard error of that covariance.
std::pair<double, double> cov_with_se(const std::vector<double>& u, const std::vector<double>& v) {
  const double n = static_cast<double>(u.size());
  double mu = 0, mv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    mu += u[i];
    mv += v[i];
  }
  mu /= n;
  mv /= n;
  std::vector<double> prod(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) prod[i] = (u[i] - mu) * (v[i] - mv);
  const Moments m = sample_moments(prod);
  return {m.mean * n / (n - 1), std::sqrt(m.variance / n)};
}

Mc run_mc(const ScmParams& p, std::size_t n, std::size_t reps, std::uint64_t seed) {
  std::vector<double> bd, fd, cb, af, ac, c;
  for (std::size_t r = 0; r < reps; ++r) {
    const Dataset d = sample(p, n, seed + r);
    bd.push_back(backdoor_point(d));
    const ProductParts f = frontdoor_parts(d), k = combined_parts(d);
    fd.push_back(f.product());
    cb.push_back(k.product());
    af.push_back(f.a_hat);
    ac.push_back(k.a_hat);
    c.push_back(f.c_hat);
  }
  Mc out{sample_moments(bd), sample_moments(fd), sample_moments(cb)};
  std::tie(out.cov_af_c, out.se_cov_af_c) = cov_with_se(af, c);
  std::tie(out.cov_ac_c, out.se_cov_ac_c) = cov_with_se(ac, c);
  return out;
}

}  // namespace

TEST_CASE("backdoor variance") {
  const ScmParams p;
  CHECK(finite(backdoor_variance(p, 103)) == doctest::Approx(1.01).epsilon(1e-14));
  ScmParams q = p;
  q.a = 0;
  q.var_uy = 1e-12;
  CHECK(finite(backdoor_variance(q, 50)) < 1e-12);
  const VarianceTheory big = backdoor_variance(p, 10000000);
  CHECK(1e7 * finite(big) == doctest::Approx(big.asymptotic_normalized).epsilon(1e-6));
  CHECK(code_of([&] { backdoor_variance(p, 3); }) == ErrorCode::DegreesOfFreedom);
}

TEST_CASE("frontdoor variance") {
  const ScmParams p;
  CHECK(var_c_hat(p, 28) == doctest::Approx(frozen::kVarCN28).epsilon(1e-14));
  CHECK(var_a_frontdoor(p, 28) == doctest::Approx(frozen::kVarAfN28).epsilon(1e-14));
  CHECK(finite(frontdoor_variance(p, 28)) == doctest::Approx(frozen::kFrontdoorN28).epsilon(1e-14));
  CHECK(frontdoor_variance(p, 28).asymptotic_normalized == doctest::Approx(1150.0 / 26.0));
  ScmParams z = p;
  z.a = 0;
  z.c = 0;
  CHECK(finite(frontdoor_variance(z, 40)) ==
        doctest::Approx(2 * var_a_frontdoor(z, 40) * var_c_hat(z, 40)));
  CHECK(finite(frontdoor_variance(z, 40)) > 0);
}

TEST_CASE("combined variance") {
  const ScmParams p;
  const VarianceTheory t = combined_variance(p, 100);
  CHECK(t.asymptotic_normalized == doctest::Approx(125.0 / 26.0));
  const Interval iv = std::get<Interval>(t.finite_sample);
  CHECK(iv.lower == doctest::Approx(125.0 / 26.0 / 100.0));
  CHECK(iv.lower <= iv.upper);
  CHECK(code_of([&] { combined_variance(p, 5); }) == ErrorCode::DegreesOfFreedom);
}

TEST_CASE("degenerate variances are rejected by the theory") {
  ScmParams p;
  p.var_um = 1e-13;
  CHECK(code_of([&] { frontdoor_variance(p, 50); }) == ErrorCode::InvalidParams);
}

TEST_CASE("asymptotic ordering over random parameters") {
  NormalStream s(17);
  for (int i = 0; i < 1000; ++i) {
    const ScmParams p = draw_prior(s);
    const double L = combined_variance(p, 100).asymptotic_normalized;
    CHECK(L <= backdoor_variance(p, 100).asymptotic_normalized);
    CHECK(L <= frontdoor_variance(p, 100).asymptotic_normalized);
  }
}

TEST_CASE("noiseless outcome paths") {
  ScmParams p;
  p.var_um = 1e-20;
  p.var_uy = 1e-20;
  const Dataset d = sample(p, 30, 2);
  CHECK(backdoor_point(d) == doctest::Approx(50).epsilon(1e-8));

  ScmParams q;
  q.var_uy = 1e-14;
  const Dataset e = sample(q, 40, 3);
  const ProductParts k = combined_parts(e);
  CHECK(k.a_hat == doctest::Approx(10).epsilon(1e-6));
  CHECK(k.product() == doctest::Approx(10 * k.c_hat).epsilon(1e-6));
}

TEST_CASE("frontdoor with a deterministic mediator is collinear") {
  ScmParams p;
  p.var_um = 1e-24;
  const Dataset d = sample(p, 50, 1);
  CHECK(code_of([&] { frontdoor_estimate(d); }) == ErrorCode::Collinearity);
}

TEST_CASE("reports and schema checks") {
  const Dataset d = sample(ScmParams{}, 8, 1);
  const EffectReport r = combined_estimate(d, ScmParams{});
  CHECK(r.method == Method::Combined);
  CHECK(r.theory.has_value());
  CHECK_FALSE(r.warnings.empty());
  CHECK_FALSE(backdoor_estimate(sample(ScmParams{}, 40, 1)).theory.has_value());
  CHECK(code_of([&] { frontdoor_estimate(restrict(d, Schema::ConfounderOnly)); }) ==
        ErrorCode::Schema);
  CHECK(code_of([&] { backdoor_estimate(restrict(d, Schema::MediatorOnly)); }) ==
        ErrorCode::Schema);
}

TEST_CASE("unbiasedness at n = 100 over 2000 replications") {
  const Mc mc = run_mc(ScmParams{}, 100, 2000, 5000);
  // Three simultaneous checks, so a 4 SE band.
  for (const Moments& m : {mc.bd, mc.fd, mc.comb}) {
    CHECK(std::abs(m.mean - 50.0) < 4.0 * std::sqrt(m.variance / 2000.0));
  }
}

TEST_CASE("coefficient covariances vanish and the combined variance is bracketed") {
  const std::size_t reps = 5000;
  const Mc mc = run_mc(ScmParams{}, 100, reps, 20000);
  CHECK(std::abs(mc.cov_af_c) < 3.0 * mc.se_cov_af_c);
  CHECK(std::abs(mc.cov_ac_c) < 3.0 * mc.se_cov_ac_c);
  const Interval iv = std::get<Interval>(combined_variance(ScmParams{}, 100).finite_sample);
  CHECK(iv.contains(mc.comb.variance));
}

TEST_CASE("bound containment on several parameter points") {
  const ScmParams pts[] = {ScmParams{}, ScmParams{2, -1, 1.5, 1, 1, 0.5, 0.8, 1.2},
                           ScmParams{-3, 2, 0.5, 2, 0.5, 1.5, 1.5, 0.3}};
  std::uint64_t seed = 70000;
  for (const ScmParams& p : pts) {
    for (std::size_t n : {10u, 30u}) {
      const Mc mc = run_mc(p, n, 4000, seed);
      seed += 4000;
      const Interval iv = std::get<Interval>(combined_variance(p, n).finite_sample);
      // Allow for the sampling error of the empirical variance itself.
      const double slack = 3.0 * std::sqrt(2.0 / 3999.0) * mc.comb.variance;
      CHECK(mc.comb.variance >= iv.lower - slack);
      CHECK(mc.comb.variance <= iv.upper + slack);
    }
  }
}

TEST_CASE("ideal mediators") {
  const ScmParams p;
  CHECK(ideal_mediator_frontdoor(p, 100) == doctest::Approx(frozen::kIdealFrontdoorN100).epsilon(1e-12));
  ScmParams q = p;
  q.b = 0;
  q.var_uy = 1e-12;
  CHECK(ideal_mediator_frontdoor(q, 100) < 1e-5);

  // Grid oracle on a 1e-3 grid of var_um.
  double best = 0, best_v = 1e300;
  for (int i = 1; i <= 20000; ++i) {
    ScmParams g = p;
    g.var_um = i * 1e-3;
    const double v = finite(frontdoor_variance(g, 100));
    if (v < best_v) {
      best_v = v;
      best = g.var_um;
    }
  }
  CHECK(std::abs(best - ideal_mediator_frontdoor(p, 100)) <= 1e-3);

  CHECK(ideal_mediator_combined(p) == 0.0);
  ScmParams c0 = p;
  c0.c = 0;
  CHECK(ideal_mediator_combined(c0) == 0.0);
  const ScmParams r{1, 0, 1, 1, 1, 0.01, 1, 1};
  CHECK(ideal_mediator_combined(r) == doctest::Approx(frozen::kIdealCombinedCase).epsilon(1e-12));
  best_v = 1e300;
  for (int i = 1; i <= 5000; ++i) {
    ScmParams g = r;
    g.var_um = i * 1e-3;
    const double v = combined_variance(g, 100).asymptotic_normalized;
    if (v < best_v) {
      best_v = v;
      best = g.var_um;
    }
  }
  CHECK(std::abs(best - ideal_mediator_combined(r)) <= 1e-3);

  ScmParams a0 = p;
  a0.a = 0;
  CHECK(code_of([&] { ideal_mediator_frontdoor(a0, 100); }) == ErrorCode::UndefinedIdeal);
  CHECK(code_of([&] { ideal_mediator_combined(a0); }) == ErrorCode::UndefinedIdeal);
}

TEST_CASE("variance ratio") {
  ScmParams a;
  a.var_ux = 0.05;
  a.var_um = 0.05;
  CHECK(variance_ratio(a, 500) < 1.0);
  ScmParams b;
  b.var_uw = 2;
  b.var_ux = 0.01;
  b.var_um = 0.1;
  CHECK(variance_ratio(b, 500) > 1.0);
  NormalStream s(5);
  for (int i = 0; i < 300; ++i) {
    const ScmParams p = draw_prior(s);
    for (std::size_t n : {6u, 50u, 1000u}) {
      const double bd = finite(backdoor_variance(p, n)), fd = finite(frontdoor_variance(p, n));
      CHECK(variance_ratio(p, n) == doctest::Approx(bd / fd).epsilon(1e-12));
      CHECK((variance_ratio(p, n) > 1.0) == (fd < bd));
    }
  }
}

TEST_CASE("dominance threshold") {
  const ScmParams p;
  for (Method against : {Method::Backdoor, Method::Frontdoor}) {
    const double N = dominance_threshold(p, against);
    CHECK(N >= 5.0);
    const auto first = static_cast<std::size_t>(std::ceil(N)) + 1;
    for (std::size_t n : {first, static_cast<std::size_t>(2 * std::ceil(N)) + 1,
                          static_cast<std::size_t>(10 * std::ceil(N)) + 1}) {
      const double upper = std::get<Interval>(combined_variance(p, n).finite_sample).upper;
      const double other = finite(theory_for(against, p, n));
      CHECK(upper <= other);
    }
  }
  ScmParams c0 = p;
  c0.c = 0;
  CHECK(code_of([&] { dominance_threshold(c0, Method::Frontdoor); }) ==
        ErrorCode::DivergentThreshold);
  CHECK(std::isfinite(dominance_threshold(c0, Method::Backdoor)));
}

TEST_CASE("equal-variance b") {
  const ScmParams p{10, 0, 0.5, 5, 1, 1, 1, 1};
  ScmParams q = p;
  q.b = equal_variance_b(p, 50);
  const double bd = finite(backdoor_variance(q, 50)), fd = finite(frontdoor_variance(q, 50));
  CHECK(std::abs(bd - fd) / bd < 1e-9);
  ScmParams big = p;
  big.c = 5;
  CHECK(code_of([&] { equal_variance_b(big, 50); }) == ErrorCode::NoRealSolution);
  CHECK(code_of([&] { equal_variance_b(p, 2); }) == ErrorCode::DegreesOfFreedom);
}

TEST_CASE("dominance ratio bound") {
  double prev = 0;
  for (double vx : {0.1, 0.01, 0.001}) {
    ScmParams p;
    p.var_ux = vx;
    const double r = combined_dominance_ratio_bound(p, 200);
    CHECK(r > prev);
    prev = r;
  }
  NormalStream s(8);
  for (int i = 0; i < 1000; ++i) CHECK(combined_dominance_ratio_bound(draw_prior(s), 50) > 0);
  CHECK(code_of([&] { combined_dominance_ratio_bound(ScmParams{}, 5); }) ==
        ErrorCode::DegreesOfFreedom);
}

TEST_CASE("dominance ratio bound holds by simulation at equal single-source variances") {
  ScmParams p{10, 0, 0.5, 5, 1, 1, 1, 1};
  p.b = equal_variance_b(p, 200);
  const Mc mc = run_mc(p, 200, 5000, 90000);
  const double ratio = std::min(mc.bd.variance, mc.fd.variance) / mc.comb.variance;
  CHECK(ratio >= combined_dominance_ratio_bound(p, 200));
}
