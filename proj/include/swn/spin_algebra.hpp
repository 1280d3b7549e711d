#pragma once

#include <array>
#include <stdexcept>

#include "swn/core.hpp"

// Spin(3) Clifford algebra on the rank-2 spinor bundle and the dictionary
// between 2-forms and su(S).
//
// Conventions, fixed once here and used everywhere else:
//   sigma_1 = 0  1    sigma_2 = 0 -i    sigma_3 = 1  0
//             1  0              i  0             0 -1
//   gamma_j = -i sigma_j, so that
//     gamma_j^2 = -id,  gamma_i gamma_j + gamma_j gamma_i = 0 (i != j),
//     (1/2)[gamma_i, gamma_j] = eps_ijk gamma_k  with eps_123 = +1.
//   A 2-form w = c1 e2^e3 + c2 e3^e1 + c3 e1^e2 maps to sum_k c_k gamma_k.
//   Matrix inner product: <M,N> = Re tr(M N*).

namespace swn {

struct GammaRep {
  std::array<Mat2, 3> gamma;
};

inline Mat2 pauli(int k) {
  Mat2 s;
  const Complex i(0.0, 1.0);
  switch (k) {
    case 0: s << 0, 1, 1, 0; break;
    case 1: s << 0, -i, i, 0; break;
    case 2: s << 1, 0, 0, -1; break;
    default: throw std::out_of_range("pauli: index must be 0, 1 or 2");
  }
  return s;
}

inline GammaRep make_gamma() {
  GammaRep g;
  const Complex mi(0.0, -1.0);
  for (int k = 0; k < 3; ++k) g.gamma[k] = mi * pauli(k);
  return g;
}

// Coefficients of (e2^e3, e3^e1, e1^e2). Units 1/length^2 when holding curvature.
struct TwoForm {
  std::array<double, 3> c{0.0, 0.0, 0.0};

  double norm2() const { return c[0] * c[0] + c[1] * c[1] + c[2] * c[2]; }
};

// mu(Psi) and friends live in the traceless Hermitian 2x2 matrices, i.e. i su(S).
using TracelessHermitian2 = Mat2;

inline Mat2 two_form_to_su(const TwoForm& w, const GammaRep& g) {
  return w.c[0] * g.gamma[0] + w.c[1] * g.gamma[1] + w.c[2] * g.gamma[2];
}

inline bool is_anti_hermitian_traceless(const Mat2& m, double tol) {
  double scale = m.norm() + 1.0;
  return (m + m.adjoint()).norm() <= tol * scale && std::abs(m.trace()) <= tol * scale;
}

inline bool is_traceless_hermitian(const Mat2& m, double tol) {
  double scale = m.norm() + 1.0;
  return (m - m.adjoint()).norm() <= tol * scale && std::abs(m.trace()) <= tol * scale;
}

// Inverse dictionary. Rejects input that is not anti-Hermitian traceless
// (malformed curvature data).
inline TwoForm su_to_two_form(const Mat2& m, const GammaRep& g) {
  if (!is_anti_hermitian_traceless(m, 1e-10))
    throw std::invalid_argument("su_to_two_form: matrix is not anti-Hermitian traceless");
  TwoForm w;
  // <gamma_k, gamma_k> = 2
  for (int k = 0; k < 3; ++k) w.c[k] = 0.5 * re_inner(m, g.gamma[k]);
  return w;
}

// mu(Psi) = Psi Psi* - (1/2)|Psi|^2 id
inline TracelessHermitian2 moment_map(const SpinorMat& psi) {
  Mat2 q = psi * psi.adjoint();
  Mat2 out = q - 0.5 * q.trace() * Mat2::Identity();
  return out;
}

// Symmetric bilinear polarization with mu(psi, psi) = mu(psi):
//   mu(phi, psi) = (1/2)(phi psi* + psi phi*) - (1/2) Re tr(psi phi*) id
inline TracelessHermitian2 moment_map_polarized(const SpinorMat& phi, const SpinorMat& psi) {
  Mat2 q = phi * psi.adjoint();
  Mat2 sym = 0.5 * (q + q.adjoint());
  return sym - 0.5 * sym.trace().real() * Mat2::Identity();
}

// Component of a traceless Hermitian matrix along sigma_k; for mu(psi) these are
// the coefficients of the TwoForm whose Eq.-dictionary image is i^-1 times it.
inline double pauli_component(const Mat2& m, int k) {
  return 0.5 * (m * pauli(k)).trace().real();
}

// The TwoForm w with i * two_form_to_su(w) = m, for traceless Hermitian m.
inline TwoForm hermitian_as_two_form(const Mat2& m) {
  TwoForm w;
  for (int k = 0; k < 3; ++k) w.c[k] = pauli_component(m, k);
  return w;
}

}  // namespace swn
