#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <utility>

#include "overid/partial_mle.hpp"
#include "overid/rng.hpp"
#include "overid/scm.hpp"

namespace support {

using namespace overid;

// n x k rows whose uncentered second-moment matrix is exactly `sigma`.
inline Eigen::MatrixXd exact_moment_rows(const Eigen::MatrixXd& sigma, std::size_t n,
                                         std::uint64_t seed) {
  const auto k = sigma.rows();
  NormalStream s(seed);
  Eigen::MatrixXd z(static_cast<Eigen::Index>(n), k);
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < k; ++j) z(i, j) = s.standard();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
  const Eigen::MatrixXd q =
      qr.householderQ() * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), k);
  const Eigen::MatrixXd L = sigma.llt().matrixL();
  return std::sqrt(static_cast<double>(n)) * q * L.transpose();
}

// Two blocks whose moments equal the implied covariances under theta.
inline PartialData exact_partial(const ThetaVec& theta, std::size_t p, std::size_t q) {
  const Eigen::MatrixXd rp = exact_moment_rows(sigma_p(theta), p, 11);
  const Eigen::MatrixXd rq = exact_moment_rows(sigma_q(theta), q, 12);
  return PartialData(Dataset::confounder_only(rp.col(0), rp.col(1), rp.col(2)),
                     Dataset::mediator_only(rq.col(0), rq.col(1), rq.col(2)));
}

using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LVec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// Block covariances built from the structural matrix, Sigma = (I - B)^-1 Omega
// (I - B)^-T over (W, X, M, Y), in extended precision. This path shares no
// code with the library's closed-form covariances.
inline std::pair<LMat, LMat> sem_blocks(const LVec& th) {
  const long double e = th(0), a = th(1), b = th(2), d = th(3);
  const long double c = e / a;
  LMat B = LMat::Zero(4, 4);
  B(1, 0) = d;
  B(2, 1) = c;
  B(3, 2) = a;
  B(3, 0) = b;
  LMat omega = LMat::Zero(4, 4);
  for (int i = 0; i < 4; ++i) omega(i, i) = th(4 + i);
  const LMat inv = (LMat::Identity(4, 4) - B).inverse();
  const LMat sigma = inv * omega * inv.transpose();
  auto pick = [&](std::array<int, 3> idx) {
    LMat out(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out(i, j) = sigma(idx[i], idx[j]);
    return out;
  };
  return {pick({1, 3, 0}), pick({1, 3, 2})};
}

// Per-sample expected negative log-likelihood (without constants) at theta
// when the data covariances are sp0 and sq0. At sp0, sq0 implied by theta0
// its Hessian at theta0 is the per-sample Fisher information.
inline long double expected_nll(const LVec& th, const LMat& sp0, const LMat& sq0, long double k) {
  const auto [sp, sq] = sem_blocks(th);
  auto term = [](const LMat& s, const LMat& s0) {
    Eigen::LLT<LMat> llt(s);
    const LMat L = llt.matrixL();
    return 2.0L * L.diagonal().array().log().sum() + llt.solve(s0).trace();
  };
  return 0.5L * (k * term(sp, sp0) + (1.0L - k) * term(sq, sq0));
}

// Central-difference Hessian of expected_nll with two Richardson extrapolation
// steps (truncation error O(h^6)).
inline Eigen::MatrixXd fd_fisher(const ThetaVec& theta, double k, double rel_step = 0.02) {
  const Eigen::VectorXd xd = theta.to_vector();
  const LVec x0 = xd.cast<long double>();
  const auto [sp0, sq0] = sem_blocks(x0);
  LVec h(8);
  for (int i = 0; i < 8; ++i) {
    h(i) = i >= 4 ? rel_step * x0(i) : rel_step * std::max(std::abs(x0(i)), 0.5L);
  }
  const long double kl = k;
  auto f = [&](const LVec& x) { return expected_nll(x, sp0, sq0, kl); };
  auto central = [&](int i, int j, long double scale) {
    const long double hi = h(i) * scale, hj = h(j) * scale;
    LVec a = x0, b = x0, c = x0, d = x0;
    a(i) += hi; a(j) += hj;
    b(i) += hi; b(j) -= hj;
    c(i) -= hi; c(j) += hj;
    d(i) -= hi; d(j) -= hj;
    return (f(a) - f(b) - f(c) + f(d)) / (4.0L * hi * hj);
  };
  Eigen::MatrixXd out(8, 8);
  for (int i = 0; i < 8; ++i) {
    for (int j = i; j < 8; ++j) {
      const long double d1 = central(i, j, 1), d2 = central(i, j, 0.5L), d3 = central(i, j, 0.25L);
      const long double r1 = (4 * d2 - d1) / 3, r2 = (4 * d3 - d2) / 3;
      out(i, j) = out(j, i) = static_cast<double>((16 * r2 - r1) / 15);
    }
  }
  return out;
}

}  // namespace support
