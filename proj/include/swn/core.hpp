#pragma once

#include <complex>
#include <cstdint>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace swn {

using Complex = std::complex<double>;

// 2x2 complex matrices carry everything acting on the spinor factor.
using Mat2 = Eigen::Matrix2cd;

// A spinor value is a 2 x n complex matrix, n = rank of E (n <= 4, stack allocated).
using SpinorMat = Eigen::Matrix<Complex, 2, Eigen::Dynamic, Eigen::ColMajor, 2, 4>;

// An SU(n) link transporter, n <= 4.
using LinkMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 4, 4>;

// Real inner product Re tr(X Y*) on complex matrices of equal shape.
template <class A, class B>
inline double re_inner(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  return (x.array() * y.array().conjugate()).sum().real();
}

// Complex pairing tr(Y* X), linear in X.
template <class A, class B>
inline Complex c_inner(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  return (y.adjoint() * x).trace();
}

inline Complex unit_phase(Complex z) {
  double m = std::abs(z);
  if (m == 0.0) throw std::domain_error("unit_phase: zero argument");
  return z / m;
}

inline double sqr(double x) { return x * x; }

// Process-wide worker count for the per-site stencil loops. Per-site writes
// are disjoint and reductions stay sequential, so results do not depend on it.
inline int& runtime_threads() {
  static int threads = 1;
  return threads;
}

// Counter-based deterministic generator: SplitMix64 applied to a keyed counter.
// Identical (seed, stream) sequences are reproducible across runs on one platform.
struct CounterRng {
  std::uint64_t key;
  std::uint64_t ctr = 0;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key(seed ^ (0x9e3779b97f4a7c15ull * (stream + 1))) {}

  std::uint64_t next_u64() {
    std::uint64_t z = key + 0x9e3779b97f4a7c15ull * ++ctr;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  Complex cnormal() {
    double re = normal();
    double im = normal();
    return {re, im};
  }
};

}  // namespace swn
