#pragma once

#include <cmath>

#include <boost/math/special_functions/erf.hpp>

namespace robustiv {

/// Standard normal cdf.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Standard normal quantile, p in (0, 1).
inline double normal_quantile(double p) {
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

}  // namespace robustiv
