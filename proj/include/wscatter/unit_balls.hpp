#pragma once

#include <cmath>
#include <numbers>

#include "wscatter/error.hpp"

namespace wscatter::measure {

/// Area sigma_m of the unit m-sphere in E^{m+1}: 2 pi^{(m+1)/2} / Gamma((m+1)/2).
inline double sphere_area(int m) {
  if (m < 0) throw Error(ErrorCode::InvalidArgument, "sphere_area needs m >= 0");
  const double h = 0.5 * (m + 1);
  return 2.0 * std::pow(std::numbers::pi, h) / std::tgamma(h);
}

/// Volume theta_m of the unit m-ball: pi^{m/2} / Gamma(m/2 + 1).
inline double ball_volume(int m) {
  if (m < 0) throw Error(ErrorCode::InvalidArgument, "ball_volume needs m >= 0");
  return std::pow(std::numbers::pi, 0.5 * m) / std::tgamma(0.5 * m + 1.0);
}

}  // namespace wscatter::measure
