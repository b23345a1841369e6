#include "overid/rng.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>

namespace overid {

double NormalStream::uniform() {
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double NormalStream::standard() { return normal_quantile(uniform()); }

double normal_quantile(double u) {
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

}  // namespace overid
