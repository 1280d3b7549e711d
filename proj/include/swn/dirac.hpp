#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "swn/core.hpp"
#include "swn/gauge_field.hpp"
#include "swn/lattice.hpp"
#include "swn/parallel.hpp"
#include "swn/spin_algebra.hpp"

// Twisted Dirac operator and connection Laplacian with central / 7-point
// stencils on the periodic lattice.
//
//   grad_j psi(x) = [u_j(x) psi(x+j) v_j(x)^-1 - u_j(x-j)^-1 psi(x-j) v_j(x-j)] / 2h
//   D psi        = sum_j gamma_j grad_j psi          (symmetric under the L2 pairing)
//   lap psi(x)   = sum_j [2 psi(x) - transports from x+j and x-j] / h^2   (>= 0 as a form)
//
// Curvature terms act through the 2-form dictionary: the U(1) part as
// + sum_m F_m sigma_m psi, the su(n) part by right composition with minus the
// plaquette generator (Hom(E, .) variance).

namespace swn {

using SpinorArray = std::vector<SpinorMat>;

namespace detail {
inline SpinorMat transport_fwd(const U1Connection& a, const SUnConnection& b,
                               const SpinorField& f, const TorusLattice& lat, int s, int ax) {
  int sp = lat.neighbor(s, ax, +1);
  if (b.is_trivial) return a.at(s, ax) * f.psi[sp];
  return a.at(s, ax) * (f.psi[sp] * b.at(s, ax).adjoint());
}

inline SpinorMat transport_bwd(const U1Connection& a, const SUnConnection& b,
                               const SpinorField& f, const TorusLattice& lat, int s, int ax) {
  int sm = lat.neighbor(s, ax, -1);
  if (b.is_trivial) return std::conj(a.at(sm, ax)) * f.psi[sm];
  return std::conj(a.at(sm, ax)) * (f.psi[sm] * b.at(sm, ax));
}

// Compile-time column count views over the per-site 2 x n storage; the hot
// stencil loops dispatch on n once per call.
template <int NC>
using FixedSpinor = Eigen::Matrix<Complex, 2, NC>;
template <int NC>
using FixedLink = Eigen::Matrix<Complex, NC, NC>;

template <int NC>
inline Eigen::Map<const FixedSpinor<NC>> view(const SpinorMat& m) {
  return Eigen::Map<const FixedSpinor<NC>>(m.data());
}
template <int NC>
inline Eigen::Map<const FixedLink<NC>> view_link(const LinkMat& m) {
  return Eigen::Map<const FixedLink<NC>>(m.data());
}

// gamma action by rows: gamma_0 [a;b] = [-ib;-ia], gamma_1 [a;b] = [-b;a],
// gamma_2 [a;b] = [-ia;ib] (the fixed -i sigma convention)
template <int NC, class T>
inline void add_gamma_times(int ax, const T& t, FixedSpinor<NC>& acc) {
  const Complex mi(0, -1), pi_(0, 1);
  if (ax == 0) {
    acc.row(0) += mi * t.row(1);
    acc.row(1) += mi * t.row(0);
  } else if (ax == 1) {
    acc.row(0) -= t.row(1);
    acc.row(1) += t.row(0);
  } else {
    acc.row(0) += mi * t.row(0);
    acc.row(1) += pi_ * t.row(1);
  }
}

template <int NC>
inline void dirac_impl(const U1Connection& a, const SUnConnection& b, const SpinorField& f,
                       const TorusLattice& lat, SpinorArray& out) {
  double inv2h = 1.0 / (2.0 * lat.spacing);
  int V = lat.sites();
  parallel_for(V, runtime_threads(), [&](int begin, int end) {
    for (int s = begin; s < end; ++s) {
      FixedSpinor<NC> acc = FixedSpinor<NC>::Zero();
      for (int ax = 0; ax < 3; ++ax) {
        int sp = lat.neighbor(s, ax, +1), sm = lat.neighbor(s, ax, -1);
        FixedSpinor<NC> t;
        if (b.is_trivial)
          t = a.at(s, ax) * view<NC>(f.psi[sp]) - std::conj(a.at(sm, ax)) * view<NC>(f.psi[sm]);
        else
          t = a.at(s, ax) * (view<NC>(f.psi[sp]) * view_link<NC>(b.at(s, ax)).adjoint()) -
              std::conj(a.at(sm, ax)) * (view<NC>(f.psi[sm]) * view_link<NC>(b.at(sm, ax)));
        add_gamma_times<NC>(ax, t, acc);
      }
      out[s] = inv2h * acc;
    }
  });
}
}  // namespace detail

inline std::array<SpinorArray, 3> covariant_derivative(const U1Connection& a,
                                                       const SUnConnection& b,
                                                       const SpinorField& f,
                                                       const TorusLattice& lat) {
  std::array<SpinorArray, 3> out;
  double inv2h = 1.0 / (2.0 * lat.spacing);
  for (int ax = 0; ax < 3; ++ax) {
    out[ax].resize(lat.sites());
    for (int s = 0; s < lat.sites(); ++s)
      out[ax][s] = inv2h * (detail::transport_fwd(a, b, f, lat, s, ax) -
                            detail::transport_bwd(a, b, f, lat, s, ax));
  }
  return out;
}

inline SpinorArray dirac(const U1Connection& a, const SUnConnection& b, const SpinorField& f,
                         const GammaRep& g, const TorusLattice& lat) {
  SpinorArray out(lat.sites());
  switch (f.n) {
    case 1: detail::dirac_impl<1>(a, b, f, lat, out); return out;
    case 2: detail::dirac_impl<2>(a, b, f, lat, out); return out;
    case 3: detail::dirac_impl<3>(a, b, f, lat, out); return out;
    case 4: detail::dirac_impl<4>(a, b, f, lat, out); return out;
    default: break;
  }
  double inv2h = 1.0 / (2.0 * lat.spacing);
  for (int s = 0; s < lat.sites(); ++s) {
    SpinorMat acc = SpinorMat::Zero(2, f.n);
    for (int ax = 0; ax < 3; ++ax)
      acc += g.gamma[ax] * (detail::transport_fwd(a, b, f, lat, s, ax) -
                            detail::transport_bwd(a, b, f, lat, s, ax));
    out[s] = inv2h * acc;
  }
  return out;
}

inline SpinorArray connection_laplacian(const U1Connection& a, const SUnConnection& b,
                                        const SpinorField& f, const TorusLattice& lat) {
  SpinorArray out(lat.sites());
  double invh2 = 1.0 / (lat.spacing * lat.spacing);
  for (int s = 0; s < lat.sites(); ++s) {
    // grouped per axis so covariantly constant fields give exact zeros
    SpinorMat acc = SpinorMat::Zero(2, f.n);
    for (int ax = 0; ax < 3; ++ax)
      acc += 2.0 * f.psi[s] - detail::transport_fwd(a, b, f, lat, s, ax) -
             detail::transport_bwd(a, b, f, lat, s, ax);
    out[s] = invh2 * acc;
  }
  return out;
}

inline double field_l2(const SpinorArray& v, const TorusLattice& lat) {
  double acc = 0.0;
  for (const auto& p : v) acc += p.squaredNorm();
  return std::sqrt(acc * lat.cell_volume());
}

inline double re_inner_l2(const SpinorArray& x, const SpinorArray& y, const TorusLattice& lat) {
  double acc = 0.0;
  for (size_t s = 0; s < x.size(); ++s) acc += re_inner(x[s], y[s]);
  return acc * lat.cell_volume();
}

// Site-centered (clover) U(1) curvature: per plane, the four plaquettes
// touching the site are averaged.
inline std::vector<TwoForm> clover_curvature(const U1Connection& a, const TorusLattice& lat) {
  std::vector<TwoForm> F(lat.sites());
  double h2 = lat.spacing * lat.spacing;
  const double branch = M_PI * (1.0 - 1e-9);
  for (int s = 0; s < lat.sites(); ++s)
    for (int m = 0; m < 3; ++m) {
      int j, k;
      plane_axes(m, j, k);
      int smj = lat.neighbor(s, j, -1);
      int smk = lat.neighbor(s, k, -1);
      int smjk = lat.neighbor(smj, k, -1);
      double acc = 0.0;
      for (int corner : {s, smj, smk, smjk}) {
        double ang = std::arg(plaquette(a, lat, corner, j, k));
        if (std::abs(ang) >= branch)
          throw BranchCutError("clover_curvature: plaquette angle at the branch cut");
        acc += ang;
      }
      F[s].c[m] = acc / (4.0 * h2);
    }
  return F;
}

// Site-centered su(n) curvature generators G_m(x), zero for a trivial background.
inline std::vector<std::array<LinkMat, 3>> clover_curvature_sun(const SUnConnection& b,
                                                                const TorusLattice& lat) {
  std::vector<std::array<LinkMat, 3>> G(lat.sites());
  if (b.is_trivial) {
    for (auto& g3 : G)
      for (auto& g : g3) g = LinkMat::Zero(b.n, b.n);
    return G;
  }
  double h2 = lat.spacing * lat.spacing;
  for (int s = 0; s < lat.sites(); ++s)
    for (int m = 0; m < 3; ++m) {
      int j, k;
      plane_axes(m, j, k);
      int smj = lat.neighbor(s, j, -1);
      int smk = lat.neighbor(s, k, -1);
      int smjk = lat.neighbor(smj, k, -1);
      LinkMat acc = LinkMat::Zero(b.n, b.n);
      for (int corner : {s, smj, smk, smjk}) {
        int cj = lat.neighbor(corner, j, +1);
        int ck = lat.neighbor(corner, k, +1);
        LinkMat p = b.at(corner, j) * b.at(cj, k) * b.at(ck, j).adjoint() *
                    b.at(corner, k).adjoint();
        acc += logm_unitary(p);
      }
      G[s][m] = acc / (4.0 * h2);
    }
  return G;
}

// L2 norm of D(D psi) - [lap psi + sum_m F_m sigma_m psi - sum_m gamma_m psi G_m].
inline double weitzenbock_residual(const U1Connection& a, const SUnConnection& b,
                                   const SpinorField& f, const GammaRep& g,
                                   const TorusLattice& lat) {
  SpinorField df;
  df.n = f.n;
  df.psi = dirac(a, b, f, g, lat);
  SpinorArray ddf = dirac(a, b, df, g, lat);
  SpinorArray lap = connection_laplacian(a, b, f, lat);
  auto FA = clover_curvature(a, lat);
  auto FB = clover_curvature_sun(b, lat);
  std::array<Mat2, 3> sig = {pauli(0), pauli(1), pauli(2)};
  double acc = 0.0;
  for (int s = 0; s < lat.sites(); ++s) {
    SpinorMat expect = lap[s];
    for (int m = 0; m < 3; ++m) {
      expect += FA[s].c[m] * (sig[m] * f.psi[s]);
      if (!b.is_trivial) expect -= g.gamma[m] * (f.psi[s] * FB[s][m]);
    }
    acc += (ddf[s] - expect).squaredNorm();
  }
  return std::sqrt(acc * lat.cell_volume());
}

struct Region {
  bool whole_torus = true;
  int center = 0;
  double radius = 0.0;

  static Region whole() { return Region{}; }
  static Region ball(int center, double radius) { return Region{false, center, radius}; }
};

// Both sides of the integration-by-parts identity with s = 0:
//   lhs = int_U  Lap f |Psi|^2 + f (2<F_B Psi,Psi> + 2 tan(alpha)^-2 |mu|^2 + 2|grad Psi|^2)
//   rhs = int_dU f d_nu |Psi|^2 - d_nu f |Psi|^2
// Lap is the positive (d*d) 7-point Laplacian; U is either the whole torus
// (rhs = 0) or a shell-bounded ball.
inline std::pair<double, double> integration_by_parts_check(
    const U1Connection& a, const SUnConnection& b, const SpinorField& f, double alpha,
    const std::vector<double>& weight_f, const Region& region, const GammaRep& g,
    const TorusLattice& lat) {
  int V = lat.sites();
  double h = lat.spacing;
  double cot2 = std::pow(std::tan(alpha), -2.0);

  std::vector<double> psi2(V), integrand(V);
  auto grad = covariant_derivative(a, b, f, lat);
  auto FB = clover_curvature_sun(b, lat);
  for (int s = 0; s < V; ++s) psi2[s] = f.psi[s].squaredNorm();
  for (int s = 0; s < V; ++s) {
    double lap_f = 0.0;
    for (int ax = 0; ax < 3; ++ax)
      lap_f += 2.0 * weight_f[s] - weight_f[lat.neighbor(s, ax, +1)] -
               weight_f[lat.neighbor(s, ax, -1)];
    lap_f /= h * h;

    double grad2 = 0.0;
    for (int ax = 0; ax < 3; ++ax) grad2 += grad[ax][s].squaredNorm();
    double mu2 = moment_map(f.psi[s]).squaredNorm();
    double fb_term = 0.0;
    if (!b.is_trivial)
      for (int m = 0; m < 3; ++m)
        fb_term -= re_inner(g.gamma[m] * (f.psi[s] * FB[s][m]), f.psi[s]);
    integrand[s] =
        lap_f * psi2[s] + weight_f[s] * (2.0 * fb_term + 2.0 * cot2 * mu2 + 2.0 * grad2);
  }

  if (region.whole_torus) {
    double lhs = 0.0;
    for (int s = 0; s < V; ++s) lhs += integrand[s];
    return {lhs * lat.cell_volume(), 0.0};
  }

  double lhs = ball_sum(integrand, region.center, region.radius, lat);
  double rhs = radial_derivative_sum(psi2, region.center, region.radius, lat, &weight_f) -
               radial_derivative_sum(weight_f, region.center, region.radius, lat, &psi2);
  return {lhs, rhs};
}

// Fraction of spinor energy carried by Fourier modes above half the Nyquist
// frequency (fermion-doubling monitor for the central-difference stencil).
inline double high_band_fraction(const SpinorField& f, const TorusLattice& lat) {
  int N = lat.n_per_axis;
  int V = lat.sites();
  int comps = 2 * f.n;
  // naive DFT axis by axis; N <= 32 keeps this cheap
  std::vector<Complex> data(static_cast<size_t>(V) * comps);
  for (int s = 0; s < V; ++s)
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < f.n; ++c) data[static_cast<size_t>(s) * comps + r * f.n + c] = f.psi[s](r, c);

  std::vector<Complex> twiddle(static_cast<size_t>(N) * N);
  for (int k = 0; k < N; ++k)
    for (int x = 0; x < N; ++x)
      twiddle[static_cast<size_t>(k) * N + x] = std::exp(Complex(0.0, -2.0 * M_PI * k * x / N));

  std::vector<Complex> buf(N);
  for (int axis = 0; axis < 3; ++axis) {
    int stride = 1;
    for (int a2 = axis + 1; a2 < 3; ++a2) stride *= N;
    for (int s = 0; s < V; ++s) {
      if ((s / stride) % N != 0) continue;  // line base points only
      for (int comp = 0; comp < comps; ++comp) {
        for (int k = 0; k < N; ++k) {
          Complex acc = 0.0;
          for (int x = 0; x < N; ++x)
            acc += twiddle[static_cast<size_t>(k) * N + x] *
                   data[static_cast<size_t>(s + x * stride) * comps + comp];
          buf[k] = acc;
        }
        for (int k = 0; k < N; ++k)
          data[static_cast<size_t>(s + k * stride) * comps + comp] = buf[k];
      }
    }
  }

  double total = 0.0, high = 0.0;
  int quarter = N / 4;
  for (int s = 0; s < V; ++s) {
    auto [kx, ky, kz] = lat.coord[s];
    auto folded = [N](int k) { return std::min(k, N - k); };
    bool is_high = folded(kx) > quarter || folded(ky) > quarter || folded(kz) > quarter;
    for (int comp = 0; comp < comps; ++comp) {
      double e = std::norm(data[static_cast<size_t>(s) * comps + comp]);
      total += e;
      if (is_high) high += e;
    }
  }
  return total > 0.0 ? high / total : 0.0;
}

}  // namespace swn
