#pragma once

#include <cstdint>
#include <random>

namespace overid {

using Engine = std::mt19937_64;

/// Gaussian variates by inversion.
///
/// Each draw consumes exactly one 64-bit word from a mt19937_64 engine: the
/// top 53 bits become a uniform u in the open interval (0, 1) via
/// u = (bits + 0.5) / 2^53, and the variate is Phi^{-1}(u) computed as
/// -sqrt(2) * erfc_inv(2u). Any implementation reproducing mt19937_64 and an
/// accurate normal quantile reproduces the stream bit-for-bit up to the
/// quantile's last-ulp rounding.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double uniform();
  double standard();
  double operator()(double sd) { return sd * standard(); }

  Engine& engine() { return engine_; }

 private:
  Engine engine_;
};

double normal_quantile(double u);

}  // namespace overid
