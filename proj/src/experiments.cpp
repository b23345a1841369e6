#include "overid/experiments.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "overid/error.hpp"
#include "overid/parallel.hpp"
#include "overid/partial_mle.hpp"

namespace overid {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Prior draws use their own stream so they never coincide with a replication seed.
constexpr std::uint64_t kPriorStreamSalt = 0x9e3779b97f4a7c15ULL;

}  // namespace

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::Backdoor: return "backdoor";
    case Estimator::Frontdoor: return "frontdoor";
    case Estimator::Combined: return "combined";
    case Estimator::IfFrontdoor: return "if-frontdoor";
    case Estimator::IfFulcher: return "if-fulcher";
    case Estimator::IfRestricted: return "if-restricted";
    case Estimator::IfRestrictedDensity: return "if-restricted-density";
    case Estimator::PartialMle: return "partial-mle";
  }
  return "?";
}

Estimator parse_estimator(std::string_view name) {
  for (Estimator e : {Estimator::Backdoor, Estimator::Frontdoor, Estimator::Combined,
                      Estimator::IfFrontdoor, Estimator::IfFulcher, Estimator::IfRestricted,
                      Estimator::IfRestrictedDensity, Estimator::PartialMle}) {
    if (to_string(e) == name) return e;
  }
  throw Error(ErrorCode::Config, "unknown estimator '" + std::string(name) + "'");
}

const McRow& McSummary::row(std::string_view estimator, std::size_t n) const {
  for (const auto& r : rows) {
    if (r.estimator == estimator && r.n == n) return r;
  }
  throw Error(ErrorCode::Config, "no summary row for " + std::string(estimator) + " at n=" +
                                     std::to_string(n));
}

const MapeRow& McSummary::mape_row(std::string_view estimator, std::size_t n) const {
  for (const auto& r : mape) {
    if (r.estimator == estimator && r.n == n) return r;
  }
  throw Error(ErrorCode::Config, "no MAPE row for " + std::string(estimator) + " at n=" +
                                     std::to_string(n));
}

Moments sample_moments(const std::vector<double>& values) {
  Moments m;
  if (values.empty()) return {kNaN, kNaN};
  const double count = static_cast<double>(values.size());
  m.mean = pairwise_sum(values) / count;
  if (values.size() < 2) {
    m.variance = 0.0;
    return m;
  }
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - m.mean) * (values[i] - m.mean);
  m.variance = pairwise_sum(sq) / (count - 1.0);
  return m;
}

PairedGap paired_gap(const McRow& lhs, const McRow& rhs) {
  std::vector<double> diff;
  const std::size_t len = std::min(lhs.squared_errors.size(), rhs.squared_errors.size());
  for (std::size_t i = 0; i < len; ++i) {
    const double a = lhs.squared_errors[i], b = rhs.squared_errors[i];
    if (std::isfinite(a) && std::isfinite(b)) diff.push_back(a - b);
  }
  PairedGap g;
  g.pairs = diff.size();
  if (diff.size() < 2) return g;
  const Moments m = sample_moments(diff);
  g.mean = m.mean;
  g.se = std::sqrt(m.variance / static_cast<double>(diff.size()));
  return g;
}

ScmParams draw_prior(NormalStream& s) {
  auto coef = [&] { return -10.0 + 20.0 * s.uniform(); };
  auto var = [&] { return 0.01 + 1.99 * s.uniform(); };
  ScmParams p;
  p.a = coef();
  p.b = coef();
  p.c = coef();
  p.d = coef();
  p.var_uw = var();
  p.var_ux = var();
  p.var_um = var();
  p.var_uy = var();
  return p;
}

namespace {

McRow make_row(std::string name, std::size_t n, std::uint64_t seed, double truth,
               std::vector<double> estimates) {
  McRow row;
  row.estimator = std::move(name);
  row.n = n;
  row.seed = seed;
  row.truth = truth;
  std::vector<double> ok, sq;
  row.squared_errors.resize(estimates.size());
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double v = estimates[i];
    if (std::isfinite(v)) {
      ok.push_back(v);
      const double e2 = (v - truth) * (v - truth);
      sq.push_back(e2);
      row.squared_errors[i] = e2;
    } else {
      row.squared_errors[i] = kNaN;
      ++row.excluded;
    }
  }
  row.reps = ok.size();
  const Moments m = sample_moments(ok);
  row.mean = m.mean;
  row.variance = m.variance;
  const Moments se = sample_moments(sq);
  row.mse = se.mean;
  row.mse_se = sq.size() > 1 ? std::sqrt(se.variance / static_cast<double>(sq.size())) : 0.0;
  row.estimates = std::move(estimates);
  return row;
}

double method_estimate(Method m, const Dataset& d) {
  switch (m) {
    case Method::Backdoor: return backdoor_point(d);
    case Method::Frontdoor: return frontdoor_parts(d).product();
    case Method::Combined: return combined_parts(d).product();
  }
  return kNaN;
}

void check_n_values(const McConfig& c) {
  if (c.reps < 1) throw Error(ErrorCode::Config, "reps must be >= 1");
  if (c.n_values.empty()) throw Error(ErrorCode::Config, "no sample sizes given");
  for (std::size_t n : c.n_values) {
    if (n < 6) throw Error(ErrorCode::Config, "every n must be >= 6");
  }
}

void attach_theory(McRow& row, Method m, const ScmParams& p) {
  try {
    const VarianceTheory t = theory_for(m, p, row.n);
    row.theory_variance = t.point();
    if (const auto* iv = std::get_if<Interval>(&t.finite_sample)) row.theory_interval = *iv;
  } catch (const Error&) {
  }
}

}  // namespace

McSummary mape_experiment(const McConfig& config) {
  check_n_values(config);
  if (config.reps < 2) {
    throw Error(ErrorCode::Config, "MAPE needs reps >= 2: the empirical variance of one draw is undefined");
  }
  McSummary out;
  out.seed = config.seed;
  if (config.fixed) {
    out.params.push_back(*config.fixed);
  } else {
    NormalStream prior(config.seed ^ kPriorStreamSalt);
    while (out.params.size() < config.draws) {
      const ScmParams p = draw_prior(prior);
      if (std::abs(p.a) < 0.05 || std::abs(p.c) < 0.05) {
        ++out.resampled_draws;
        continue;
      }
      out.params.push_back(p);
    }
  }
  const std::size_t draws = out.params.size(), nn = config.n_values.size();
  const std::size_t nm = config.methods.size(), reps = config.reps;
  const std::size_t jobs = draws * nn * reps;
  std::vector<double> est(jobs * nm, kNaN);
  parallel_for(
      jobs,
      [&](std::size_t job) {
        const std::size_t cell = job / reps;
        const std::size_t j = cell / nn, ni = cell % nn;
        const Dataset data = sample(out.params[j], config.n_values[ni], config.seed + job);
        for (std::size_t k = 0; k < nm; ++k) {
          try {
            est[job * nm + k] = method_estimate(config.methods[k], data);
          } catch (const Error&) {
          }
        }
      },
      config.threads);

  for (std::size_t k = 0; k < nm; ++k) {
    const Method method = config.methods[k];
    for (std::size_t ni = 0; ni < nn; ++ni) {
      const std::size_t n = config.n_values[ni];
      std::vector<double> mapes;
      std::size_t inside = 0;
      for (std::size_t j = 0; j < draws; ++j) {
        const std::size_t cell = j * nn + ni;
        std::vector<double> values(reps);
        for (std::size_t r = 0; r < reps; ++r) values[r] = est[(cell * reps + r) * nm + k];
        const ScmParams& p = out.params[j];
        McRow row = make_row(std::string(to_string(method)), n, config.seed + cell * reps,
                             true_effect(p), std::move(values));
        attach_theory(row, method, p);
        if (row.theory_variance && row.reps >= 2 && row.variance > 0.0) {
          mapes.push_back(std::abs(*row.theory_variance - row.variance) / row.variance * 100.0);
          if (row.theory_interval && row.theory_interval->contains(row.variance)) ++inside;
        }
        if (config.fixed) out.rows.push_back(std::move(row));
      }
      MapeRow mr;
      mr.estimator = std::string(to_string(method));
      mr.n = n;
      mr.draws = mapes.size();
      mr.reps = reps;
      const Moments m = sample_moments(mapes);
      mr.mape_mean = m.mean;
      mr.mape_std = std::sqrt(m.variance);
      if (method == Method::Combined && !mapes.empty()) {
        mr.inside_fraction = static_cast<double>(inside) / static_cast<double>(mapes.size());
      }
      out.mape.push_back(mr);
    }
  }
  return out;
}

McSummary mse_comparison(const McConfig& config, const ScmParams& params) {
  check_n_values(config);
  params.validate();
  McSummary out;
  out.seed = config.seed;
  out.params.push_back(params);
  const std::size_t nn = config.n_values.size(), nm = config.methods.size(), reps = config.reps;
  std::vector<double> est(nn * reps * nm, kNaN);
  parallel_for(
      nn * reps,
      [&](std::size_t job) {
        const Dataset data = sample(params, config.n_values[job / reps], config.seed + job);
        for (std::size_t k = 0; k < nm; ++k) {
          try {
            est[job * nm + k] = method_estimate(config.methods[k], data);
          } catch (const Error&) {
          }
        }
      },
      config.threads);
  for (std::size_t ni = 0; ni < nn; ++ni) {
    for (std::size_t k = 0; k < nm; ++k) {
      std::vector<double> values(reps);
      for (std::size_t r = 0; r < reps; ++r) values[r] = est[((ni * reps) + r) * nm + k];
      McRow row = make_row(std::string(to_string(config.methods[k])), config.n_values[ni],
                           config.seed + ni * reps, true_effect(params), std::move(values));
      attach_theory(row, config.methods[k], params);
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

McSummary partial_mse_comparison(const McConfig& config, const ScmParams& params) {
  check_n_values(config);
  params.validate();
  McSummary out;
  out.seed = config.seed;
  out.params.push_back(params);
  const std::size_t nn = config.n_values.size(), reps = config.reps;
  const std::size_t jobs = nn * reps;
  std::vector<double> bd(jobs, kNaN), fd(jobs, kNaN), mle(jobs, kNaN);
  std::vector<char> nonconv(jobs, 0);
  parallel_for(
      jobs,
      [&](std::size_t job) {
        const std::size_t n = config.n_values[job / reps];
        const Dataset data = sample(params, n, config.seed + job);
        const PartialData pd = PartialData::split(data, n / 2);
        try {
          bd[job] = backdoor_point(pd.confounder_block());
        } catch (const Error&) {
        }
        try {
          fd[job] = frontdoor_parts(pd.mediator_block()).product();
        } catch (const Error&) {
        }
        try {
          MleConfig mc;
          mc.seed = config.seed + job;
          mc.bootstrap_reps = config.mle_bootstrap_reps;
          const MleResult r = mle_fit(pd, mc);
          mle[job] = r.theta.e;
          nonconv[job] = r.converged ? 0 : 1;
        } catch (const Error&) {
        }
      },
      config.threads);
  const double truth = true_effect(params);
  for (std::size_t ni = 0; ni < nn; ++ni) {
    const std::size_t n = config.n_values[ni];
    auto slice = [&](const std::vector<double>& v) {
      return std::vector<double>(v.begin() + static_cast<long>(ni * reps),
                                 v.begin() + static_cast<long>((ni + 1) * reps));
    };
    const std::uint64_t s = config.seed + ni * reps;
    out.rows.push_back(make_row("backdoor", n, s, truth, slice(bd)));
    out.rows.push_back(make_row("frontdoor", n, s, truth, slice(fd)));
    McRow m = make_row("partial-mle", n, s, truth, slice(mle));
    for (std::size_t r = 0; r < reps; ++r) m.flagged += nonconv[ni * reps + r];
    out.rows.push_back(std::move(m));
  }
  return out;
}

IhdpSetting ihdp_setting(std::string_view label) {
  if (label == "S1" || label == "s1") return {"S1", 10.0, 5.0, 1.0};
  if (label == "S2" || label == "s2") return {"S2", 10.0, 1.0, 2.0};
  throw Error(ErrorCode::Config, "unknown semi-synthetic setting '" + std::string(label) + "'");
}

Eigen::MatrixXd standardize(const Eigen::MatrixXd& w) {
  Eigen::MatrixXd out = w.rowwise() - w.colwise().mean();
  const double n = static_cast<double>(w.rows());
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double sd = std::sqrt(out.col(j).squaredNorm() / n);
    if (sd > 0.0) out.col(j) /= sd;
  }
  return out;
}

Covariates synthetic_ihdp_covariates(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows < 20 || cols < 1) throw Error(ErrorCode::Config, "covariate table too small");
  NormalStream s(seed);
  const auto r = static_cast<Eigen::Index>(rows), k = static_cast<Eigen::Index>(cols);
  const Eigen::Index continuous = std::min<Eigen::Index>(6, k);
  Eigen::VectorXd rate(k);
  for (Eigen::Index j = 0; j < k; ++j) rate(j) = 0.1 + 0.5 * s.uniform();
  Eigen::MatrixXd raw(r, k);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      raw(i, j) = j < continuous ? s.standard() : (s.uniform() < rate(j) ? 1.0 : 0.0);
    }
  }
  Covariates out;
  out.w = standardize(raw);
  Eigen::VectorXd beta(k);
  for (Eigen::Index j = 0; j < k; ++j) beta(j) = s(0.3);
  out.x.resize(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    const double eta = -1.5 + out.w.row(i).dot(beta);
    out.x(i) = s.uniform() < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
  }
  return out;
}

double run_estimator(Estimator e, const Dataset& data, bool center_data) {
  switch (e) {
    case Estimator::Backdoor:
    case Estimator::Frontdoor:
    case Estimator::Combined: {
      const Dataset d = center_data ? center(data) : data;
      const Method m = e == Estimator::Backdoor    ? Method::Backdoor
                       : e == Estimator::Frontdoor ? Method::Frontdoor
                                                   : Method::Combined;
      return method_estimate(m, d);
    }
    case Estimator::IfFrontdoor: return if_ate(data, IfVariant::Frontdoor).ate;
    case Estimator::IfFulcher: return if_ate(data, IfVariant::Fulcher).ate;
    case Estimator::IfRestricted: return if_ate(data, IfVariant::Restricted).ate;
    case Estimator::IfRestrictedDensity: return if_ate(data, IfVariant::RestrictedDensity).ate;
    case Estimator::PartialMle: {
      const Dataset d = center_data ? center(data) : data;
      MleConfig mc;
      mc.bootstrap_reps = 20;
      return mle_fit(PartialData::split(d, d.size() / 2), mc).theta.e;
    }
  }
  return kNaN;
}

McSummary ihdp_protocol(const Covariates& cov, const IhdpSetting& setting, std::size_t reps,
                        std::uint64_t seed, unsigned threads) {
  const auto n = cov.w.rows();
  if (cov.x.size() != n) throw Error(ErrorCode::Schema, "treatment length differs from covariates");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (cov.x(i) != 0.0 && cov.x(i) != 1.0) {
      throw Error(ErrorCode::Schema, "treatment must be binary in {0, 1}");
    }
  }
  if (reps < 1) throw Error(ErrorCode::Config, "reps must be >= 1");
  const std::vector<Estimator> ests{Estimator::Backdoor,    Estimator::Frontdoor,
                                    Estimator::Combined,    Estimator::IfFrontdoor,
                                    Estimator::IfFulcher,   Estimator::IfRestricted};
  const std::size_t ne = ests.size();
  std::vector<double> est(reps * ne, kNaN);
  static constexpr double kCdf[] = {0.5, 0.7, 0.85, 0.95, 1.0};
  parallel_for(
      reps,
      [&](std::size_t r) {
        NormalStream s(seed + r);
        Eigen::VectorXd b(cov.w.cols());
        for (Eigen::Index j = 0; j < b.size(); ++j) {
          const double u = s.uniform();
          int v = 0;
          while (v < 4 && u >= kCdf[v]) ++v;
          b(j) = v;
        }
        Eigen::VectorXd m(n), y(n);
        const Eigen::VectorXd wb = cov.w * b;
        for (Eigen::Index i = 0; i < n; ++i) {
          m(i) = setting.c * cov.x(i) + s(setting.sigma_um);
          y(i) = setting.a * m(i) + wb(i) + s.standard();
        }
        const Dataset data = Dataset::full(cov.x, y, cov.w, m);
        for (std::size_t k = 0; k < ne; ++k) {
          try {
            est[r * ne + k] = run_estimator(ests[k], data, true);
          } catch (const Error&) {
          }
        }
      },
      threads);
  McSummary out;
  out.seed = seed;
  const double truth = setting.a * setting.c;
  for (std::size_t k = 0; k < ne; ++k) {
    std::vector<double> values(reps);
    for (std::size_t r = 0; r < reps; ++r) values[r] = est[r * ne + k];
    out.rows.push_back(make_row(std::string(to_string(ests[k])), static_cast<std::size_t>(n), seed,
                                truth, std::move(values)));
  }
  return out;
}

McSummary bootstrap_eval(const Dataset& data, const BootstrapConfig& config) {
  if (config.b < 2) throw Error(ErrorCode::Config, "bootstrap needs B >= 2");
  const std::size_t n = data.size();
  std::vector<std::string> names;
  for (Estimator e : config.estimators) names.emplace_back(to_string(e));
  if (config.partial) {
    names.emplace_back("backdoor-half");
    names.emplace_back("frontdoor-half");
    names.emplace_back("partial-mle");
  }
  const std::size_t ne = names.size();
  std::vector<double> est(config.b * ne, kNaN);
  parallel_for(
      config.b,
      [&](std::size_t r) {
        Engine engine(config.seed + r);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::vector<std::size_t> rows(n);
        for (auto& i : rows) i = pick(engine);
        const Dataset resample = data.select_rows(rows);
        std::size_t k = 0;
        for (Estimator e : config.estimators) {
          try {
            est[r * ne + k] = run_estimator(e, resample, config.center);
          } catch (const Error&) {
          }
          ++k;
        }
        if (config.partial) {
          // Rows are i.i.d. draws, so the halves form a random equal split.
          const Dataset d = config.center ? center(resample) : resample;
          try {
            const PartialData pd = PartialData::split(d, n / 2);
            try {
              est[r * ne + k] = backdoor_point(pd.confounder_block());
            } catch (const Error&) {
            }
            try {
              est[r * ne + k + 1] = frontdoor_parts(pd.mediator_block()).product();
            } catch (const Error&) {
            }
            MleConfig mc;
            mc.seed = config.seed + r;
            mc.bootstrap_reps = config.mle_bootstrap_reps;
            est[r * ne + k + 2] = mle_fit(pd, mc).theta.e;
          } catch (const Error&) {
          }
        }
      },
      config.threads);

  McSummary out;
  out.seed = config.seed;
  for (std::size_t k = 0; k < ne; ++k) {
    std::vector<double> values(config.b);
    for (std::size_t r = 0; r < config.b; ++r) values[r] = est[r * ne + k];
    McRow row = make_row(names[k], n, config.seed, config.truth.value_or(0.0), std::move(values));
    if (!config.truth) {
      row.mse = kNaN;
      row.mse_se = kNaN;
      row.squared_errors.clear();
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace overid
