#include "overid/scm.hpp"

#include <cmath>
#include <string>

#include "overid/error.hpp"
#include "overid/rng.hpp"

namespace overid {

void ScmParams::validate() const {
  const double vars[] = {var_uw, var_ux, var_um, var_uy};
  const char* names[] = {"var_uw", "var_ux", "var_um", "var_uy"};
  for (int i = 0; i < 4; ++i) {
    if (!(vars[i] > 0.0) || !std::isfinite(vars[i])) {
      throw Error(ErrorCode::InvalidParams,
                  std::string(names[i]) + " must be finite and > 0, got " +
                      std::to_string(vars[i]));
    }
  }
  for (double coef : {a, b, c, d}) {
    if (!std::isfinite(coef)) {
      throw Error(ErrorCode::InvalidParams, "structural coefficients must be finite");
    }
  }
}

double true_effect(const ScmParams& params) { return params.a * params.c; }

std::string_view to_string(Var v) {
  switch (v) {
    case Var::X: return "x";
    case Var::Y: return "y";
    case Var::W: return "w";
    case Var::M: return "m";
  }
  return "?";
}

Var parse_var(std::string_view name) {
  if (name == "x" || name == "X") return Var::X;
  if (name == "y" || name == "Y") return Var::Y;
  if (name == "w" || name == "W") return Var::W;
  if (name == "m" || name == "M") return Var::M;
  throw Error(ErrorCode::Schema, "unknown variable '" + std::string(name) + "'");
}

std::string_view to_string(Schema s) {
  switch (s) {
    case Schema::Full: return "full";
    case Schema::ConfounderOnly: return "confounder_only";
    case Schema::MediatorOnly: return "mediator_only";
  }
  return "?";
}

namespace {

// Population covariance of (X, Y, W, M) in that index order.
Eigen::Matrix4d full_covariance(const ScmParams& p) {
  const double vw = p.var_uw;
  const double vx = p.var_x();
  const double cov_xw = p.d * vw;
  const double cov_mx = p.c * vx;
  const double cov_mw = p.c * cov_xw;
  const double vm = p.c * p.c * vx + p.var_um;
  // y = a m + b w + u_y
  const double cov_yx = p.a * cov_mx + p.b * cov_xw;
  const double cov_yw = p.a * cov_mw + p.b * vw;
  const double cov_ym = p.a * vm + p.b * cov_mw;
  const double vy = p.a * p.a * vm + p.b * p.b * vw + 2.0 * p.a * p.b * cov_mw + p.var_uy;

  Eigen::Matrix4d s;
  s << vx, cov_yx, cov_xw, cov_mx,
       cov_yx, vy, cov_yw, cov_ym,
       cov_xw, cov_yw, vw, cov_mw,
       cov_mx, cov_ym, cov_mw, vm;
  return s;
}

int index_of(Var v) { return static_cast<int>(v); }

}  // namespace

CovMatrix implied_covariance(const ScmParams& params, std::span<const Var> order) {
  params.validate();
  const Eigen::Matrix4d full = full_covariance(params);
  const auto k = static_cast<Eigen::Index>(order.size());
  CovMatrix out{std::vector<Var>(order.begin(), order.end()), Eigen::MatrixXd(k, k)};
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      out.entries(i, j) = full(index_of(order[i]), index_of(order[j]));
    }
  }
  return out;
}

Dataset::Dataset(Schema schema, Eigen::VectorXd x, Eigen::VectorXd y, Eigen::MatrixXd w,
                 Eigen::VectorXd m)
    : schema_(schema), x_(std::move(x)), y_(std::move(y)), w_(std::move(w)), m_(std::move(m)) {
  const Eigen::Index n = x_.size();
  if (n < 1) throw Error(ErrorCode::EmptyDataset, "dataset has no rows");
  if (y_.size() != n) throw Error(ErrorCode::Schema, "column y length differs from x");
  if (has_w()) {
    if (w_.cols() < 1) throw Error(ErrorCode::Schema, "schema requires confounder column w");
    if (w_.rows() != n) throw Error(ErrorCode::Schema, "column w length differs from x");
  } else {
    w_.resize(n, 0);
  }
  if (has_m()) {
    if (m_.size() != n) throw Error(ErrorCode::Schema, "column m length differs from x");
  } else {
    m_.resize(0);
  }
}

Dataset Dataset::full(Eigen::VectorXd x, Eigen::VectorXd y, Eigen::MatrixXd w,
                      Eigen::VectorXd m) {
  return Dataset(Schema::Full, std::move(x), std::move(y), std::move(w), std::move(m));
}

Dataset Dataset::confounder_only(Eigen::VectorXd x, Eigen::VectorXd y, Eigen::MatrixXd w) {
  return Dataset(Schema::ConfounderOnly, std::move(x), std::move(y), std::move(w), {});
}

Dataset Dataset::mediator_only(Eigen::VectorXd x, Eigen::VectorXd y, Eigen::VectorXd m) {
  return Dataset(Schema::MediatorOnly, std::move(x), std::move(y), Eigen::MatrixXd(),
                 std::move(m));
}

const Eigen::MatrixXd& Dataset::w() const {
  if (!has_w()) throw Error(ErrorCode::Schema, "dataset has no confounder column w");
  return w_;
}

const Eigen::VectorXd& Dataset::m() const {
  if (!has_m()) throw Error(ErrorCode::Schema, "dataset has no mediator column m");
  return m_;
}

Eigen::VectorXd Dataset::column(Var v) const {
  switch (v) {
    case Var::X: return x_;
    case Var::Y: return y_;
    case Var::M: return m();
    case Var::W:
      if (w().cols() != 1) {
        throw Error(ErrorCode::Schema, "scalar w requested from multivariate confounders");
      }
      return w_.col(0);
  }
  throw Error(ErrorCode::Schema, "unknown variable");
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  const auto k = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd x(k), y(k), m(has_m() ? k : 0);
  Eigen::MatrixXd w(has_w() ? k : 0, w_.cols());
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
    x(i) = x_(r);
    y(i) = y_(r);
    if (has_w()) w.row(i) = w_.row(r);
    if (has_m()) m(i) = m_(r);
  }
  return Dataset(schema_, std::move(x), std::move(y), std::move(w), std::move(m));
}

namespace {

Dataset draw(const ScmParams& params, std::size_t n, std::uint64_t seed, bool binary) {
  params.validate();
  if (n == 0) throw Error(ErrorCode::EmptyDataset, "sample size must be >= 1");
  NormalStream rng(seed);
  const double sw = std::sqrt(params.var_uw), sx = std::sqrt(params.var_ux);
  const double sm = std::sqrt(params.var_um), sy = std::sqrt(params.var_uy);
  const auto k = static_cast<Eigen::Index>(n);
  Eigen::VectorXd x(k), y(k), m(k);
  Eigen::MatrixXd w(k, 1);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double wi = rng(sw);
    const double xl = params.d * wi + rng(sx);
    const double xi = binary ? (xl > 0.0 ? 1.0 : 0.0) : xl;
    const double mi = params.c * xi + rng(sm);
    const double yi = params.a * mi + params.b * wi + rng(sy);
    w(i, 0) = wi;
    x(i) = xi;
    m(i) = mi;
    y(i) = yi;
  }
  return Dataset::full(std::move(x), std::move(y), std::move(w), std::move(m));
}

}  // namespace

Dataset sample(const ScmParams& params, std::size_t n, std::uint64_t seed) {
  return draw(params, n, seed, false);
}

Dataset sample_binary_treatment(const ScmParams& params, std::size_t n, std::uint64_t seed) {
  return draw(params, n, seed, true);
}

Dataset restrict(const Dataset& data, Schema schema) {
  if (schema == data.schema()) return data;
  switch (schema) {
    case Schema::Full:
      throw Error(ErrorCode::Schema, "cannot widen a partial dataset to the full schema");
    case Schema::ConfounderOnly:
      return Dataset::confounder_only(data.x(), data.y(), data.w());
    case Schema::MediatorOnly:
      return Dataset::mediator_only(data.x(), data.y(), data.m());
  }
  throw Error(ErrorCode::Schema, "unknown schema");
}

Dataset center(const Dataset& data) {
  auto demean = [](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return v.array() - v.mean();
  };
  Eigen::MatrixXd w;
  if (data.has_w()) {
    w = data.w().rowwise() - data.w().colwise().mean();
  }
  Eigen::VectorXd m;
  if (data.has_m()) m = demean(data.m());
  return Dataset(data.schema(), demean(data.x()), demean(data.y()), std::move(w), std::move(m));
}

Eigen::MatrixXd second_moment(const Dataset& data, std::span<const Var> order) {
  const auto k = static_cast<Eigen::Index>(order.size());
  Eigen::MatrixXd cols(static_cast<Eigen::Index>(data.size()), k);
  for (Eigen::Index j = 0; j < k; ++j) cols.col(j) = data.column(order[j]);
  return (cols.transpose() * cols) / static_cast<double>(data.size());
}

}  // namespace overid
