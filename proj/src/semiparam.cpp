#include "overid/semiparam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "overid/error.hpp"

namespace overid {

std::string_view to_string(IfVariant v) {
  switch (v) {
    case IfVariant::Frontdoor: return "frontdoor";
    case IfVariant::Fulcher: return "fulcher";
    case IfVariant::Restricted: return "restricted";
    case IfVariant::RestrictedDensity: return "restricted-density";
  }
  return "?";
}

IfVariant parse_if_variant(std::string_view name) {
  if (name == "frontdoor") return IfVariant::Frontdoor;
  if (name == "fulcher") return IfVariant::Fulcher;
  if (name == "restricted") return IfVariant::Restricted;
  if (name == "restricted-density") return IfVariant::RestrictedDensity;
  throw Error(ErrorCode::Config, "unknown influence-function variant '" + std::string(name) + "'");
}

namespace {

double sigmoid(double t) {
  return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

// Minimum-norm least squares; rank deficiency (e.g. a constant confounder next
// to the intercept) leaves fitted values well defined.
Eigen::VectorXd lstsq(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(X);
  cod.setThreshold(1e-10);
  return cod.solve(y);
}

Eigen::MatrixXd design(const Eigen::VectorXd* first, const Eigen::VectorXd* second,
                       const Eigen::MatrixXd* w, Eigen::Index n) {
  Eigen::Index cols = 1 + (first ? 1 : 0) + (second ? 1 : 0) + (w ? w->cols() : 0);
  Eigen::MatrixXd X(n, cols);
  X.col(0).setOnes();
  Eigen::Index j = 1;
  if (first) X.col(j++) = *first;
  if (second) X.col(j++) = *second;
  if (w) X.rightCols(w->cols()) = *w;
  return X;
}

Eigen::VectorXd logistic_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd p(eta.size()), wts(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      p(i) = sigmoid(eta(i));
      wts(i) = std::max(p(i) * (1.0 - p(i)), 1e-12);
    }
    const Eigen::MatrixXd Xw = X.array().colwise() * wts.array().sqrt();
    const Eigen::VectorXd z = (y - p).array() / wts.array().sqrt();
    const Eigen::VectorXd step = lstsq(Xw, z);
    beta += step;
    if (!beta.allFinite() || beta.lpNorm<Eigen::Infinity>() > 50.0) {
      throw Error(ErrorCode::PropensityDegenerate,
                  "logistic propensity fit diverges: treatment is separated by the confounders");
    }
    if (step.lpNorm<Eigen::Infinity>() < 1e-10 * (1.0 + beta.lpNorm<Eigen::Infinity>())) break;
  }
  return beta;
}

double dot_tail(const Eigen::VectorXd& coef, Eigen::Index start,
                const Eigen::Ref<const Eigen::RowVectorXd>& w) {
  return w.size() == 0 ? 0.0 : coef.segment(start, w.size()).dot(w.transpose());
}

}  // namespace

double NuisanceSet::outcome_mean(double m, double x,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& w) const {
  double v = outcome_coef(0) + outcome_coef(1) * m;
  Eigen::Index j = 2;
  if (outcome_uses_x) v += outcome_coef(j++) * x;
  if (outcome_uses_w) v += dot_tail(outcome_coef, j, w);
  return v;
}

double NuisanceSet::mediator_mean(double x, const Eigen::Ref<const Eigen::RowVectorXd>& w) const {
  double v = mediator_coef(0) + mediator_coef(1) * x;
  if (mediator_uses_w) v += dot_tail(mediator_coef, 2, w);
  return v;
}

double NuisanceSet::mediator_density(double m, double x,
                                     const Eigen::Ref<const Eigen::RowVectorXd>& w) const {
  const double z = (m - mediator_mean(x, w)) / mediator_sd;
  return std::exp(-0.5 * z * z) / (mediator_sd * std::sqrt(2.0 * std::numbers::pi));
}

double NuisanceSet::propensity(const Eigen::Ref<const Eigen::RowVectorXd>& w) const {
  double eta = propensity_coef(0);
  if (propensity_uses_w) eta += dot_tail(propensity_coef, 1, w);
  return sigmoid(eta);
}

NuisanceSet fit_nuisances(const Dataset& data, IfVariant variant) {
  if (data.schema() != Schema::Full) {
    throw Error(ErrorCode::Schema, "influence-function estimators need columns x, y, w, m");
  }
  const auto n = static_cast<Eigen::Index>(data.size());
  if (n < 20) throw Error(ErrorCode::DegreesOfFreedom, "influence-function fit needs n >= 20");
  const Eigen::VectorXd& x = data.x();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (x(i) != 0.0 && x(i) != 1.0) {
      throw Error(ErrorCode::Schema, "treatment column x must be binary in {0, 1}");
    }
  }
  NuisanceSet ns;
  ns.variant = variant;
  ns.outcome_uses_x = variant != IfVariant::Restricted;
  ns.outcome_uses_w = variant != IfVariant::Frontdoor;
  ns.mediator_uses_w = variant == IfVariant::Fulcher;
  ns.propensity_uses_w = variant != IfVariant::Frontdoor;

  const Eigen::VectorXd& m = data.m();
  const Eigen::MatrixXd& w = data.w();

  ns.outcome_coef = lstsq(design(&m, ns.outcome_uses_x ? &x : nullptr,
                                 ns.outcome_uses_w ? &w : nullptr, n),
                          data.y());

  const Eigen::MatrixXd Xm = design(&x, nullptr, ns.mediator_uses_w ? &w : nullptr, n);
  ns.mediator_coef = lstsq(Xm, m);
  const Eigen::VectorXd resid = m - Xm * ns.mediator_coef;
  ns.mediator_sd = std::sqrt(resid.squaredNorm() / static_cast<double>(n));
  if (!(ns.mediator_sd > 0.0)) {
    throw Error(ErrorCode::Collinearity, "mediator is an exact function of its conditioners");
  }

  const double treated = x.sum();
  if (treated == 0.0 || treated == static_cast<double>(n)) {
    throw Error(ErrorCode::PropensityDegenerate, "treatment column has a single level");
  }
  ns.propensity_coef =
      logistic_irls(design(nullptr, nullptr, ns.propensity_uses_w ? &w : nullptr, n), x);
  return ns;
}

IfEstimate if_estimate(const Dataset& data, const NuisanceSet& ns, int x_star,
                       const IfOptions& opt) {
  if (x_star != 0 && x_star != 1) throw Error(ErrorCode::Config, "x_star must be 0 or 1");
  const auto n = static_cast<Eigen::Index>(data.size());
  const Eigen::VectorXd& x = data.x();
  const Eigen::VectorXd& y = data.y();
  const Eigen::VectorXd& m = data.m();
  const Eigen::MatrixXd& w = data.w();
  const double xs = static_cast<double>(x_star);

  IfEstimate out;
  out.contributions.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto wi = w.row(i);
    double p1 = ns.propensity(wi);
    const double pc = std::clamp(p1, opt.propensity_clip, 1.0 - opt.propensity_clip);
    if (pc != p1) ++out.clipped;
    p1 = pc;
    const double p_star = x_star == 1 ? p1 : 1.0 - p1;

    // Density-ratio weighted outcome residual.
    const double f_star = ns.mediator_density(m(i), xs, wi);
    const double f_obs = ns.mediator_density(m(i), x(i), wi);
    double ratio;
    if (f_obs < 1e-12) {
      ratio = opt.ratio_cap;
      ++out.trimmed;
    } else {
      ratio = f_star / f_obs;
      if (ratio > opt.ratio_cap) {
        ratio = opt.ratio_cap;
        ++out.trimmed;
      }
    }
    const double t1 = (y(i) - ns.outcome_mean(m(i), x(i), wi)) * ratio;

    // Inverse-propensity weighted, centered outcome regression. Sums over m
    // are exact for a linear outcome mean: evaluate it at the mediator mean.
    const double nu_star = ns.mediator_mean(xs, wi);
    double t2 = 0.0;
    if (x(i) == xs) {
      const double at_m = (1.0 - p1) * ns.outcome_mean(m(i), 0.0, wi) +
                          p1 * ns.outcome_mean(m(i), 1.0, wi);
      const double at_nu = (1.0 - p1) * ns.outcome_mean(nu_star, 0.0, wi) +
                           p1 * ns.outcome_mean(nu_star, 1.0, wi);
      t2 = (at_m - at_nu) / p_star;
    }

    const double t3 = ns.outcome_mean(nu_star, x(i), wi);
    out.contributions(i) = t1 + t2 + t3;
    out.residual_term += t1;
  }
  out.psi = out.contributions.mean();
  out.residual_term /= static_cast<double>(n);
  return out;
}

IfReport if_ate(const Dataset& data, const NuisanceSet& ns, const IfOptions& options) {
  const IfEstimate e1 = if_estimate(data, ns, 1, options);
  const IfEstimate e0 = if_estimate(data, ns, 0, options);
  IfReport r;
  r.variant = ns.variant;
  r.psi_treated = e1.psi;
  r.psi_control = e0.psi;
  r.ate = e1.psi - e0.psi;
  const Eigen::VectorXd diff = e1.contributions - e0.contributions;
  const double n = static_cast<double>(diff.size());
  const double var = (diff.array() - diff.mean()).square().sum() / (n - 1.0);
  r.std_error = std::sqrt(var / n);
  r.trimmed = e1.trimmed + e0.trimmed;
  r.clipped = e1.clipped + e0.clipped;
  return r;
}

IfReport if_ate(const Dataset& data, IfVariant variant, const IfOptions& options) {
  return if_ate(data, fit_nuisances(data, variant), options);
}

}  // namespace overid
