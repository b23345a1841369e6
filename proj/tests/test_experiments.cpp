#include <doctest.h>

#include <cmath>
#include <vector>

#include "overid/error.hpp"
#include "overid/estimators.hpp"
#include "overid/experiments.hpp"
#include "overid/rng.hpp"

using namespace overid;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Config;
}

}  // namespace

TEST_CASE("estimator names round-trip") {
  for (Estimator e : {Estimator::Backdoor, Estimator::Frontdoor, Estimator::Combined,
                      Estimator::IfFrontdoor, Estimator::IfFulcher, Estimator::IfRestricted,
                      Estimator::IfRestrictedDensity, Estimator::PartialMle}) {
    CHECK(parse_estimator(to_string(e)) == e);
  }
  CHECK(to_string(Estimator::IfRestricted) == "if-restricted");
  CHECK(code_of([] { parse_estimator("ols"); }) == ErrorCode::Config);
}

TEST_CASE("prior draws stay in range") {
  NormalStream s(1);
  for (int i = 0; i < 1000; ++i) {
    const ScmParams p = draw_prior(s);
    for (double c : {p.a, p.b, p.c, p.d}) CHECK(std::abs(c) <= 10.0);
    for (double v : {p.var_uw, p.var_ux, p.var_um, p.var_uy}) {
      CHECK(v >= 0.01);
      CHECK(v <= 2.0);
    }
  }
}

TEST_CASE("moments and paired gaps") {
  const Moments m = sample_moments({1.0, 2.0, 3.0, 4.0});
  CHECK(m.mean == doctest::Approx(2.5));
  CHECK(m.variance == doctest::Approx(5.0 / 3.0));
  McRow a, b;
  a.squared_errors = {1, 2, 3, std::nan("")};
  b.squared_errors = {2, 2, 5, 1};
  const PairedGap g = paired_gap(a, b);
  CHECK(g.pairs == 3);
  CHECK(g.mean == doctest::Approx(-1.0));
  CHECK(g.se == doctest::Approx(std::sqrt(1.0 / 3.0)));
}

TEST_CASE("single-replication runs") {
  McConfig c;
  c.reps = 1;
  c.n_values = {50};
  c.seed = 9;
  CHECK(code_of([&] { mape_experiment(c); }) == ErrorCode::Config);
  const McSummary s = mse_comparison(c, ScmParams{});
  const Dataset d = sample(ScmParams{}, 50, 9);
  const double est = backdoor_point(d);
  CHECK(s.row("backdoor", 50).mse == doctest::Approx((est - 50) * (est - 50)));
  CHECK(s.row("combined", 50).reps == 1);
  c.n_values = {4};
  CHECK(code_of([&] { mse_comparison(c, ScmParams{}); }) == ErrorCode::Config);
}

TEST_CASE("MAPE experiment is reproducible across thread counts") {
  McConfig c;
  c.reps = 40;
  c.n_values = {30, 60};
  c.draws = 4;
  c.seed = 77;
  c.threads = 1;
  const McSummary one = mape_experiment(c);
  c.threads = 3;
  const McSummary three = mape_experiment(c);
  REQUIRE(one.rows.size() == three.rows.size());
  for (std::size_t i = 0; i < one.rows.size(); ++i) {
    CHECK(one.rows[i].mean == three.rows[i].mean);
    CHECK(one.rows[i].variance == three.rows[i].variance);
  }
  CHECK(one.params.size() == 4);
  CHECK(one.mape_row("combined", 60).draws == 4);
  CHECK(one.mape_row("combined", 60).inside_fraction.has_value());
  CHECK_FALSE(one.mape_row("backdoor", 60).inside_fraction.has_value());
}

TEST_CASE("combined estimator is no worse with no causal effect") {
  ScmParams p;
  p.a = 0;
  p.c = 0;
  McConfig c;
  c.reps = 2000;
  c.n_values = {100};
  c.seed = 1234;
  const McSummary s = mse_comparison(c, p);
  const McRow& cb = s.row("combined", 100);
  REQUIRE(cb.reps == 2000);
  for (const char* other : {"backdoor", "frontdoor"}) {
    const PairedGap g = paired_gap(cb, s.row(other, 100));
    CHECK(g.mean <= 2.0 * g.se);
  }
}

TEST_CASE("partial-data comparison") {
  McConfig c;
  c.reps = 20;
  c.n_values = {400};
  c.seed = 5;
  c.mle_bootstrap_reps = 10;
  const McSummary s = partial_mse_comparison(c, ScmParams{});
  CHECK(s.rows.size() == 3);
  CHECK(s.row("partial-mle", 400).reps == 20);
  CHECK(std::abs(s.row("partial-mle", 400).mean - 50.0) < 1.0);
}

TEST_CASE("bootstrap") {
  const Dataset d = sample(ScmParams{}, 1000, 3);
  BootstrapConfig bc;
  bc.b = 2;
  bc.seed = 4;
  const McSummary a = bootstrap_eval(d, bc), b = bootstrap_eval(d, bc);
  CHECK(a.rows[0].estimates == b.rows[0].estimates);
  CHECK(std::isnan(a.rows[0].mse));
  bc.b = 1;
  CHECK(code_of([&] { bootstrap_eval(d, bc); }) == ErrorCode::Config);

  bc.b = 1000;
  bc.truth = 50.0;
  const McSummary big = bootstrap_eval(d, bc);
  for (Method m : {Method::Backdoor, Method::Frontdoor}) {
    const double theory = std::get<double>(theory_for(m, ScmParams{}, 1000).finite_sample);
    const double boot = big.row(std::string(to_string(m)), 1000).variance;
    CHECK(std::abs(boot - theory) / theory < 0.30);
  }
}

TEST_CASE("split evaluation favours the partial-data fit") {
  const Dataset d = sample(ScmParams{}, 1000, 31);
  BootstrapConfig bc;
  bc.b = 500;
  bc.seed = 8;
  bc.truth = 50.0;
  bc.estimators = {};
  bc.partial = true;
  const McSummary s = bootstrap_eval(d, bc);
  const McRow& mle = s.row("partial-mle", 1000);
  REQUIRE(mle.reps == 500);
  for (const char* other : {"backdoor-half", "frontdoor-half"}) {
    const PairedGap g = paired_gap(mle, s.row(other, 1000));
    CHECK(g.mean <= 2.0 * g.se);
  }
}

TEST_CASE("synthetic covariates") {
  const Covariates cov = synthetic_ihdp_covariates(747, 25, 2);
  CHECK(cov.w.rows() == 747);
  CHECK(cov.w.cols() == 25);
  for (Eigen::Index j = 0; j < 25; ++j) {
    const Eigen::VectorXd col = cov.w.col(j);
    CHECK(std::abs(col.mean()) < 1e-10);
    CHECK((col.array() - col.mean()).square().mean() == doctest::Approx(1.0).epsilon(1e-3));
  }
  const double treated = cov.x.mean();
  CHECK(treated > 0.05);
  CHECK(treated < 0.95);
  CHECK(((cov.x.array() == 0.0) || (cov.x.array() == 1.0)).all());
  CHECK(code_of([] { ihdp_setting("S9"); }) == ErrorCode::Config);
  CHECK(ihdp_setting("S2").sigma_um == 2.0);
}

TEST_CASE("semi-synthetic protocol with no mediator effect") {
  const Covariates cov = synthetic_ihdp_covariates(747, 25, 3);
  const IhdpSetting zero{"zero", 10.0, 0.0, 1.0};
  const McSummary s = ihdp_protocol(cov, zero, 40, 11, 0);
  CHECK(s.rows.size() == 6);
  for (const McRow& r : s.rows) {
    INFO(r.estimator);
    CHECK(r.excluded == 0);
    CHECK(std::abs(r.mean) < 4.0 * std::sqrt(r.variance / r.reps) + 1e-9);
  }
  Covariates bad = cov;
  bad.x(0) = 0.5;
  CHECK(code_of([&] { ihdp_protocol(bad, zero, 2, 1, 0); }) == ErrorCode::Schema);
}
