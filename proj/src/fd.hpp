#pragma once

#include <vector>

namespace mlab::detail {

// Fourth-order centered first derivative from samples at m-2, m-1, m+1, m+2.
template <class V>
V centered_dt(const V& am2, const V& am1, const V& ap1, const V& ap2, double dt) {
  V out = am1;
  const double s = 1.0 / (12.0 * dt);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (am2[i] - 8.0 * am1[i] + 8.0 * ap1[i] - ap2[i]) * s;
  return out;
}

}  // namespace mlab::detail
