#pragma once

#include "swn/core.hpp"

namespace swn::testutil {

inline SpinorMat random_spinor(CounterRng& rng, int n) {
  SpinorMat m(2, n);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < n; ++c) m(r, c) = rng.cnormal();
  return m;
}

inline Mat2 random_antihermitian_traceless(CounterRng& rng) {
  Mat2 m;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) m(r, c) = rng.cnormal();
  Mat2 ah = 0.5 * (m - m.adjoint());
  return ah - 0.5 * ah.trace() * Mat2::Identity();
}

}  // namespace swn::testutil
