#include "overid/partial_mle.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "overid/error.hpp"
#include "overid/estimators.hpp"
#include "overid/optim.hpp"
#include "overid/rng.hpp"

namespace overid {

ThetaVec ThetaVec::from_params(const ScmParams& p) {
  return {p.a * p.c, p.a, p.b, p.d, p.var_uw, p.var_ux, p.var_um, p.var_uy};
}

ScmParams ThetaVec::to_params() const {
  if (a == 0.0) throw Error(ErrorCode::Reparameterization, "a = 0: c = e / a is undefined");
  return {a, b, e / a, d, var_uw, var_ux, var_um, var_uy};
}

Eigen::VectorXd ThetaVec::to_vector() const {
  Eigen::VectorXd v(kDim);
  v << e, a, b, d, var_uw, var_ux, var_um, var_uy;
  return v;
}

ThetaVec ThetaVec::from_vector(const Eigen::VectorXd& v) {
  return {v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7)};
}

const std::array<const char*, ThetaVec::kDim>& ThetaVec::names() {
  static const std::array<const char*, kDim> n{"e",      "a",      "b",      "d",
                                               "var_uw", "var_ux", "var_um", "var_uy"};
  return n;
}

namespace {

std::array<Var, 3> kOrderP{Var::X, Var::Y, Var::W};
std::array<Var, 3> kOrderQ{Var::X, Var::Y, Var::M};

// Forward-mode dual number carrying the gradient with respect to theta.
struct Dual {
  using Grad = Eigen::Matrix<double, ThetaVec::kDim, 1>;
  double v = 0.0;
  Grad g = Grad::Zero();

  static Dual var(double value, int index) {
    Dual d{value};
    d.g(index) = 1.0;
    return d;
  }
};

Dual operator+(const Dual& x, const Dual& y) { return {x.v + y.v, x.g + y.g}; }
Dual operator-(const Dual& x, const Dual& y) { return {x.v - y.v, x.g - y.g}; }
Dual operator*(const Dual& x, const Dual& y) { return {x.v * y.v, y.v * x.g + x.v * y.g}; }
Dual operator/(const Dual& x, const Dual& y) {
  return {x.v / y.v, (x.g * y.v - x.v * y.g) / (y.v * y.v)};
}
Dual operator*(double s, const Dual& x) { return {s * x.v, s * x.g}; }

struct DualCov {
  Dual p[3][3];
  Dual q[3][3];
};

DualCov dual_cov(const ThetaVec& t) {
  if (t.a == 0.0) throw Error(ErrorCode::Reparameterization, "a = 0: c = e / a is undefined");
  const Dual e = Dual::var(t.e, 0), a = Dual::var(t.a, 1), b = Dual::var(t.b, 2),
             d = Dual::var(t.d, 3), vw = Dual::var(t.var_uw, 4), vx = Dual::var(t.var_ux, 5),
             vm = Dual::var(t.var_um, 6), vy = Dual::var(t.var_uy, 7);
  const Dual c = e / a;
  const Dual D = d * d * vw + vx;
  const Dual cov_xw = d * vw;
  const Dual var_m = c * c * D + vm;
  const Dual cov_mw = c * cov_xw;
  const Dual cov_yx = e * D + b * cov_xw;
  const Dual cov_yw = a * cov_mw + b * vw;
  const Dual cov_ym = a * var_m + b * cov_mw;
  const Dual var_y = a * a * var_m + b * b * vw + 2.0 * (a * b * cov_mw) + vy;
  const Dual cov_mx = c * D;

  DualCov s;
  auto fill = [](Dual (&m)[3][3], const Dual& v00, const Dual& v01, const Dual& v02,
                 const Dual& v11, const Dual& v12, const Dual& v22) {
    m[0][0] = v00; m[0][1] = v01; m[0][2] = v02;
    m[1][0] = v01; m[1][1] = v11; m[1][2] = v12;
    m[2][0] = v02; m[2][1] = v12; m[2][2] = v22;
  };
  fill(s.p, D, cov_yx, cov_xw, var_y, cov_yw, vw);
  fill(s.q, D, cov_yx, cov_mx, var_y, cov_ym, var_m);
  return s;
}

Dual log(const Dual& x) { return {std::log(x.v), x.g / x.v}; }

// Gaussian block term log det Sigma + tr(S Sigma^-1) through the recursive
// factorization of each block: every variable is regressed on its
// predecessors, so the term is sum_j log D_j + u_j' S u_j / D_j. This avoids
// inverting the implied covariance, which is badly conditioned when some
// noise variances are small.
//
// The quadratic forms are evaluated as |L' u|^2 with S = L L' factored in the
// causal order, which keeps the large moments from cancelling.
struct MomentFactor {
  Eigen::Matrix3d l;  // lower Cholesky factor in causal order
  std::array<int, 3> slot;  // causal position of each moment-matrix index
};

MomentFactor factor(const Eigen::Matrix3d& s, const std::array<int, 3>& causal) {
  // causal[j] = moment-matrix index of the j-th variable in causal order
  Eigen::Matrix3d r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = s(causal[i], causal[j]);
  MomentFactor f;
  Eigen::LLT<Eigen::Matrix3d> llt(r);
  if (llt.info() == Eigen::Success) {
    f.l = llt.matrixL();
  } else {
    // Singular moments (degenerate data); an eigen square root still gives S = L L'.
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(r);
    f.l = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  for (int j = 0; j < 3; ++j) f.slot[causal[j]] = j;
  return f;
}

// u' S u for u given in moment-matrix index order.
Dual quad(const MomentFactor& f, const Dual (&u)[3]) {
  Dual w[3];
  for (int i = 0; i < 3; ++i) w[f.slot[i]] = u[i];
  Dual out;
  for (int i = 0; i < 3; ++i) {
    Dual v;
    for (int k = 0; k < 3; ++k) v = v + f.l(k, i) * w[k];
    out = out + v * v;
  }
  return out;
}

struct DualObjective {
  Dual p;  // block of [X, Y, W]
  Dual q;  // block of [X, Y, M]
  bool ok = false;
};

DualObjective dual_terms(const ThetaVec& t, const Eigen::Matrix3d& sp, const Eigen::Matrix3d& sq) {
  const Dual e = Dual::var(t.e, 0), a = Dual::var(t.a, 1), b = Dual::var(t.b, 2),
             d = Dual::var(t.d, 3), vw = Dual::var(t.var_uw, 4), vx = Dual::var(t.var_ux, 5),
             vm = Dual::var(t.var_um, 6), vy = Dual::var(t.var_uy, 7);
  const Dual zero, one{1.0};
  DualObjective out;

  // [X, Y, W]: W, then X | W, then Y | X, W with M marginalized.
  {
    const MomentFactor f = factor(sp, {2, 0, 1});
    const Dual uw[3] = {zero, zero, one};
    const Dual ux[3] = {one, zero, zero - d};
    const Dual uy[3] = {zero - e, one, zero - b};
    const Dual dy = a * a * vm + vy;
    out.p = log(vw) + quad(f, uw) / vw + log(vx) + quad(f, ux) / vx + log(dy) + quad(f, uy) / dy;
  }
  // [X, Y, M]: X, then M | X, then Y | M, X with W marginalized.
  {
    const MomentFactor f = factor(sq, {0, 2, 1});
    const Dual c = e / a;
    const Dual dx = d * d * vw + vx;
    const Dual g = b * d * vw / dx;
    const Dual dy = b * b * vw * vx / dx + vy;
    const Dual ux[3] = {one, zero, zero};
    const Dual um[3] = {zero - c, zero, one};
    const Dual uy[3] = {zero - g, one, zero - a};
    out.q = log(dx) + quad(f, ux) / dx + log(vm) + quad(f, um) / vm + log(dy) + quad(f, uy) / dy;
  }
  out.ok = std::isfinite(out.p.v) && std::isfinite(out.q.v) && out.p.g.allFinite() &&
           out.q.g.allFinite();
  return out;
}

Eigen::Matrix3d value_of(const Dual (&m)[3][3]) {
  Eigen::Matrix3d out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out(i, j) = m[i][j].v;
  return out;
}

Eigen::Matrix3d partial_of(const Dual (&m)[3][3], int k) {
  Eigen::Matrix3d out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out(i, j) = m[i][j].g(k);
  return out;
}

void check_theta(const ThetaVec& t) {
  const double vars[] = {t.var_uw, t.var_ux, t.var_um, t.var_uy};
  for (double v : vars) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::InvalidTheta, "theta variances must be finite and > 0");
    }
  }
}

double trace_prod(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  return (a.array() * b.transpose().array()).sum();
}

Eigen::Matrix3d moments(const Dataset& data, const std::array<Var, 3>& order) {
  return second_moment(data, order);
}

}  // namespace

PartialData::PartialData(Dataset confounder_block, Dataset mediator_block)
    : conf_(restrict(confounder_block, Schema::ConfounderOnly)),
      med_(restrict(mediator_block, Schema::MediatorOnly)) {
  if (conf_.w_dim() != 1) {
    throw Error(ErrorCode::Schema, "partial-data likelihood needs a scalar confounder");
  }
  sp_ = moments(conf_, kOrderP);
  sq_ = moments(med_, kOrderQ);
}

PartialData PartialData::split(const Dataset& full, std::size_t p) {
  if (p == 0 || p >= full.size()) {
    throw Error(ErrorCode::EmptyDataset, "split needs both blocks non-empty");
  }
  std::vector<std::size_t> first(p), second(full.size() - p);
  for (std::size_t i = 0; i < p; ++i) first[i] = i;
  for (std::size_t i = p; i < full.size(); ++i) second[i - p] = i;
  return PartialData(full.select_rows(first), full.select_rows(second));
}

Eigen::Matrix3d sigma_p(const ThetaVec& theta) {
  return implied_covariance(theta.to_params(), kOrderP).entries;
}

Eigen::Matrix3d sigma_q(const ThetaVec& theta) {
  return implied_covariance(theta.to_params(), kOrderQ).entries;
}

SigmaJacobian sigma_jacobian(const ThetaVec& theta) {
  const DualCov s = dual_cov(theta);
  SigmaJacobian j;
  j.p = value_of(s.p);
  j.q = value_of(s.q);
  for (int k = 0; k < ThetaVec::kDim; ++k) {
    j.dp[k] = partial_of(s.p, k);
    j.dq[k] = partial_of(s.q, k);
  }
  return j;
}

double partial_loglik(const ThetaVec& theta, const Eigen::Matrix3d& moments_p,
                      const Eigen::Matrix3d& moments_q, double n_total, double k) {
  check_theta(theta);
  if (theta.a == 0.0) throw Error(ErrorCode::Reparameterization, "a = 0: c = e / a is undefined");
  const DualObjective t = dual_terms(theta, moments_p, moments_q);
  if (!t.ok) throw Error(ErrorCode::InvalidTheta, "log-likelihood is not finite at theta");
  return -0.5 * n_total * (k * t.p.v + (1.0 - k) * t.q.v);
}

double partial_loglik(const ThetaVec& theta, const PartialData& data) {
  return partial_loglik(theta, data.moments_p(), data.moments_q(),
                        static_cast<double>(data.total()), data.k());
}

namespace {

double bootstrap_variance(const Dataset& data, std::size_t reps, std::uint64_t seed,
                          double (*stat)(const Dataset&)) {
  Engine engine(seed);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  std::vector<std::size_t> rows(data.size());
  std::vector<double> values;
  values.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    for (auto& i : rows) i = pick(engine);
    try {
      values.push_back(stat(data.select_rows(rows)));
    } catch (const Error&) {
      // Degenerate resample; skipped.
    }
  }
  if (values.size() < 2) return std::numeric_limits<double>::infinity();
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size() - 1);
}

double frontdoor_product(const Dataset& d) { return frontdoor_parts(d).product(); }

}  // namespace

ThetaVec init_theta(const PartialData& data, std::size_t bootstrap_reps, std::uint64_t seed) {
  if (data.p() < 8 || data.q() < 8) {
    throw Error(ErrorCode::Initialization, "initialization needs at least 8 rows per block");
  }
  const Eigen::Matrix3d& sp = data.moments_p();  // x, y, w
  const Eigen::Matrix3d& sq = data.moments_q();  // x, y, m
  ThetaVec t;
  try {
    t.var_uw = sp(2, 2);
    t.d = sp(0, 2) / sp(2, 2);
    t.var_ux = sp(0, 0) - t.d * sp(0, 2);

    Eigen::Matrix2d g;
    g << sp(0, 0), sp(0, 2), sp(0, 2), sp(2, 2);
    const Eigen::Vector2d beta = g.ldlt().solve(Eigen::Vector2d(sp(0, 1), sp(1, 2)));
    const double e_bd = beta(0);
    t.b = beta(1);
    const double r_bd = sp(1, 1) - beta.dot(Eigen::Vector2d(sp(0, 1), sp(1, 2)));

    const double c = sq(0, 2) / sq(0, 0);
    t.var_um = sq(2, 2) - c * sq(0, 2);
    Eigen::Matrix2d h;
    h << sq(2, 2), sq(0, 2), sq(0, 2), sq(0, 0);
    const Eigen::Vector2d gamma = h.ldlt().solve(Eigen::Vector2d(sq(1, 2), sq(0, 1)));
    const double e_fd = gamma(0) * c;

    const double var_bd = bootstrap_variance(data.confounder_block(), bootstrap_reps, seed,
                                             &backdoor_point);
    const double var_fd = bootstrap_variance(data.mediator_block(), bootstrap_reps, seed + 1,
                                             &frontdoor_product);
    t.e = var_bd <= var_fd ? e_bd : e_fd;
    if (!(std::abs(c) > 0.0)) throw Error(ErrorCode::Initialization, "c_hat is zero");
    t.a = t.e / c;
    if (t.a == 0.0) t.a = gamma(0);
    t.var_uy = std::max(r_bd - t.a * t.a * t.var_um, 1e-4 * r_bd);
  } catch (const Error& err) {
    if (err.code() == ErrorCode::Initialization) throw;
    throw Error(ErrorCode::Initialization, std::string("initialization failed: ") + err.what());
  }
  const double vars[] = {t.var_uw, t.var_ux, t.var_um, t.var_uy, t.a, t.e, t.b, t.d};
  for (double v : vars) {
    if (!std::isfinite(v)) throw Error(ErrorCode::Initialization, "non-finite initial value");
  }
  if (!(t.var_uw > 0 && t.var_ux > 0 && t.var_um > 0 && t.var_uy > 0) || t.a == 0.0) {
    throw Error(ErrorCode::Initialization, "degenerate block: non-positive initial variance");
  }
  return t;
}

namespace {

// Optimizer coordinates: e, a, b, d, then log-variances.
Eigen::VectorXd to_z(const ThetaVec& t) {
  Eigen::VectorXd z = t.to_vector();
  for (int i = 4; i < 8; ++i) z(i) = std::log(z(i));
  return z;
}

ThetaVec from_z(const Eigen::VectorXd& z) {
  Eigen::VectorXd v = z;
  for (int i = 4; i < 8; ++i) v(i) = std::exp(z(i));
  return ThetaVec::from_vector(v);
}

double neg_loglik_z(const Eigen::VectorXd& z, Eigen::VectorXd& grad, const PartialData& data) {
  const ThetaVec t = from_z(z);
  grad.setZero(ThetaVec::kDim);
  if (t.a == 0.0 || !z.allFinite()) return std::numeric_limits<double>::infinity();
  const DualObjective terms = dual_terms(t, data.moments_p(), data.moments_q());
  if (!terms.ok) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(data.total()), k = data.k();
  for (int i = 0; i < ThetaVec::kDim; ++i) {
    double gi = 0.5 * n * (k * terms.p.g(i) + (1.0 - k) * terms.q.g(i));
    if (i >= 4) gi *= std::exp(z(i));
    grad(i) = gi;
  }
  return 0.5 * n * (k * terms.p.v + (1.0 - k) * terms.q.v);
}

}  // namespace

MleResult mle_fit(const PartialData& data, const MleConfig& config) {
  MleResult res;
  res.initial = init_theta(data, config.bootstrap_reps, config.seed);
  res.init_loglik = partial_loglik(res.initial, data);

  const Objective fn = [&data](const Eigen::VectorXd& z, Eigen::VectorXd& g) {
    return neg_loglik_z(z, g, data);
  };
  BfgsOptions opt;
  opt.max_iter = config.max_iter;
  opt.grad_tol_rel = config.tol;

  const Eigen::VectorXd z0 = to_z(res.initial);
  BfgsResult best = bfgs_minimize(fn, z0, opt);
  if (config.multi_start) {
    NormalStream jitter(config.seed ^ 0x9e3779b97f4a7c15ULL);
    for (int s = 0; s < 8; ++s) {
      Eigen::VectorXd zs = z0;
      for (int i = 0; i < zs.size(); ++i) zs(i) += jitter(0.1) * (1.0 + std::abs(z0(i)));
      BfgsResult r = bfgs_minimize(fn, zs, opt);
      if (r.f < best.f) best = r;
    }
  }
  res.theta = from_z(best.x);
  res.loglik = -best.f;
  // The optimizer keeps the best point visited, which includes the start.
  if (res.loglik < res.init_loglik) {
    res.theta = res.initial;
    res.loglik = res.init_loglik;
  }
  res.converged = best.converged;
  res.iterations = best.iterations;
  res.grad_norm = best.grad_norm;
  return res;
}

Eigen::MatrixXd fisher_information(const ThetaVec& theta, double k) {
  check_theta(theta);
  if (!(k >= 0.0 && k <= 1.0)) throw Error(ErrorCode::Config, "k must lie in [0, 1]");
  const SigmaJacobian j = sigma_jacobian(theta);
  const Eigen::Matrix3d ip = j.p.llt().solve(Eigen::Matrix3d::Identity());
  const Eigen::Matrix3d iq = j.q.llt().solve(Eigen::Matrix3d::Identity());
  std::array<Eigen::Matrix3d, ThetaVec::kDim> ap, aq;
  for (int i = 0; i < ThetaVec::kDim; ++i) {
    ap[i] = ip * j.dp[i];
    aq[i] = iq * j.dq[i];
  }
  Eigen::MatrixXd info(ThetaVec::kDim, ThetaVec::kDim);
  for (int r = 0; r < ThetaVec::kDim; ++r) {
    for (int c = r; c < ThetaVec::kDim; ++c) {
      const double v = 0.5 * (k * trace_prod(ap[r], ap[c]) + (1.0 - k) * trace_prod(aq[r], aq[c]));
      info(r, c) = v;
      info(c, r) = v;
    }
  }
  return info;
}

double cramer_rao_ve(const ThetaVec& theta, double k) {
  if (!(k > 0.0 && k < 1.0)) {
    throw Error(ErrorCode::SingularInformation,
                "k must be strictly inside (0, 1): a single block leaves parameters unidentified");
  }
  const Eigen::MatrixXd info = fisher_information(theta, k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
  const auto& ev = eig.eigenvalues();
  if (!(ev.minCoeff() > 1e-13 * ev.maxCoeff())) {
    throw Error(ErrorCode::SingularInformation, "Fisher information is singular");
  }
  // (I^-1)_{00} from the eigendecomposition.
  const Eigen::VectorXd u = eig.eigenvectors().row(0).transpose();
  return (u.array().square() / ev.array()).sum();
}

OptimalK optimal_k(const ThetaVec& theta, double grid_step) {
  if (!(grid_step > 0.0 && grid_step <= 0.5)) {
    throw Error(ErrorCode::Config, "grid step must lie in (0, 0.5]");
  }
  OptimalK out;
  out.ve_star = std::numeric_limits<double>::infinity();
  const auto steps = static_cast<long>(std::floor(1.0 / grid_step + 1e-9));
  for (long i = 1; i < steps; ++i) {
    const double k = static_cast<double>(i) * grid_step;
    if (k >= 1.0 - 1e-12) break;
    try {
      const double ve = cramer_rao_ve(theta, k);
      out.curve.emplace_back(k, ve);
      if (ve < out.ve_star) {
        out.ve_star = ve;
        out.k_star = k;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularInformation) throw;
    }
  }
  if (out.curve.empty()) {
    throw Error(ErrorCode::SingularInformation, "Fisher information singular on the whole k grid");
  }
  return out;
}

}  // namespace overid
