#pragma once

#include <cmath>
#include <functional>

namespace rexnet::testsupport {

// central finite difference of a scalar function along one parameter
template <typename F>
double central_difference(F&& f, float& param, double step) {
  const float saved = param;
  // use the realized float step: +/-step rarely lands exactly on a float,
  // and dividing by the nominal 2*step would bias the quotient
  const float hi_param = static_cast<float>(saved + step);
  const float lo_param = static_cast<float>(saved - step);
  param = hi_param;
  const double hi = f();
  param = lo_param;
  const double lo = f();
  param = saved;
  return (hi - lo) /
         (static_cast<double>(hi_param) - static_cast<double>(lo_param));
}

inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
  return std::fabs(analytic - numeric) / denom;
}

}  // namespace rexnet::testsupport
