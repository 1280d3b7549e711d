#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "swn/coulomb.hpp"
#include "swn/dirac.hpp"
#include "swn/gauge_field.hpp"
#include "swn/lattice.hpp"
#include "swn/spin_algebra.hpp"

// Projected nonlinear least squares for the blown-up system
//
//   ||psi||_{L2} = 1,   D psi = 0,   sin(alpha)^2 F_A = cos(alpha)^2 mu(psi),
//
// at fixed alpha: Barzilai-Borwein gradient descent with Armijo backtracking
// on E = (1/2)(||D psi||^2 + ||C||^2), psi re-projected to the unit sphere
// after every step, links updated multiplicatively. The residual norm is
// sqrt(2E). At alpha = pi/2 the curvature equation is linear in the link
// phases and a flattening polish (least-squares curl solve + holonomy snap)
// finishes what plain descent leaves.

namespace swn {

struct SWOptions {
  int max_iters = 5000;
  double tol = 1e-6;
  int armijo_max = 40;
  double armijo_c = 1e-4;
  double step_init = 1.0;
  double step_min = 1e-16;
  double step_max = 1e8;
  bool use_gauss_newton = true;  // Levenberg-Marquardt steps (damped Gauss-Newton)
  int bb_warmup = 30;            // preconditioned BB iterations before LM starts
  int gn_inner = 200;            // CG iteration cap per LM step
  double lm_lambda0 = 1e-2;      // initial damping, relative to the block scales
  bool coulomb_exit = true;      // gauge-fix the returned state
  bool flat_polish = true;       // alpha = pi/2 linear finish
  bool verbose = false;
};

struct SWState {
  U1Connection a;
  SpinorField psi;
  double alpha = M_PI / 2;
  double residual = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct ResidualParts {
  SpinorArray dirac_part;
  std::vector<TwoForm> curvature_part;
  double norm = 0.0;
};

inline ResidualParts residual_parts(const U1Connection& a, const SpinorField& psi, double alpha,
                                    const SUnConnection& b, const GammaRep& g,
                                    const TorusLattice& lat) {
  if (!(alpha > 0.0 && alpha <= M_PI / 2 + 1e-15))
    throw std::invalid_argument("residual_parts: alpha must lie in (0, pi/2]");
  ResidualParts parts;
  parts.dirac_part = dirac(a, b, psi, g, lat);
  auto F = curvature(a, lat);
  double s2 = sqr(std::sin(alpha)), c2 = sqr(std::cos(alpha));
  parts.curvature_part.resize(lat.sites());
  double acc = 0.0;
  for (int s = 0; s < lat.sites(); ++s) {
    TwoForm w = hermitian_as_two_form(moment_map(psi.psi[s]));
    for (int m = 0; m < 3; ++m) parts.curvature_part[s].c[m] = s2 * F[s].c[m] - c2 * w.c[m];
    acc += parts.curvature_part[s].norm2() + parts.dirac_part[s].squaredNorm();
  }
  parts.norm = std::sqrt(acc * lat.cell_volume());
  return parts;
}

inline double energy(const U1Connection& a, const SpinorField& psi, double alpha,
                     const SUnConnection& b, const GammaRep& g, const TorusLattice& lat) {
  ResidualParts parts = residual_parts(a, psi, alpha, b, g, lat);
  return 0.5 * sqr(parts.norm);
}

namespace detail {

struct SWGradient {
  std::vector<double> theta;   // per link
  std::vector<SpinorMat> psi;  // per site
};

struct ResidualVec {
  SpinorArray dirac;
  std::vector<TwoForm> curv;
};

inline double res_dot(const ResidualVec& x, const ResidualVec& y, const TorusLattice& lat) {
  double acc = 0.0;
  for (size_t s = 0; s < x.dirac.size(); ++s) {
    acc += re_inner(x.dirac[s], y.dirac[s]);
    for (int m = 0; m < 3; ++m) acc += x.curv[s].c[m] * y.curv[s].c[m];
  }
  return acc * lat.cell_volume();
}

namespace detail_fixed {
template <int NC>
using FS = Eigen::Matrix<Complex, 2, NC>;
}

// sigma action by rows: sigma_1 [a;b] = [b;a], sigma_2 [a;b] = [-ib;ia],
// sigma_3 [a;b] = [a;-b]
template <int NC, class T>
inline detail_fixed::FS<NC> sigma_times(int m, const T& t) {
  detail_fixed::FS<NC> out;
  const Complex mi(0, -1), pi_(0, 1);
  if (m == 0) {
    out.row(0) = t.row(1);
    out.row(1) = t.row(0);
  } else if (m == 1) {
    out.row(0) = mi * t.row(1);
    out.row(1) = pi_ * t.row(0);
  } else {
    out.row(0) = t.row(0);
    out.row(1) = -t.row(1);
  }
  return out;
}

// per-link transports of psi itself, shared by the theta couplings
template <int NC>
inline void link_transports(const U1Connection& a, const SUnConnection& b, const SpinorField& psi,
                            const TorusLattice& lat, int x, int ax, detail_fixed::FS<NC>& fwd,
                            detail_fixed::FS<NC>& bwd) {
  int xp = lat.neighbor(x, ax, +1);
  if (b.is_trivial) {
    fwd = a.at(x, ax) * detail::view<NC>(psi.psi[xp]);
    bwd = std::conj(a.at(x, ax)) * detail::view<NC>(psi.psi[x]);
  } else {
    fwd = a.at(x, ax) * (detail::view<NC>(psi.psi[xp]) * detail::view_link<NC>(b.at(x, ax)).adjoint());
    bwd = std::conj(a.at(x, ax)) * (detail::view<NC>(psi.psi[x]) * detail::view_link<NC>(b.at(x, ax)));
  }
}

template <int NC>
inline void apply_jacobian_impl(const U1Connection& a, const SpinorField& psi, double alpha,
                                const SUnConnection& b, const GammaRep& g,
                                const TorusLattice& lat, const SWGradient& v, ResidualVec& out) {
  using FS = detail_fixed::FS<NC>;
  int V = lat.sites();
  double h = lat.spacing;
  double s2 = sqr(std::sin(alpha)), c2 = sqr(std::cos(alpha));
  const Complex i1(0.0, 1.0);

  out.curv.assign(V, TwoForm{});

  // Dirac block: D(dpsi) + dD/dtheta applied to psi
  SpinorField dpsi_field;
  dpsi_field.n = psi.n;
  dpsi_field.psi.assign(v.psi.begin(), v.psi.end());
  out.dirac = dirac(a, b, dpsi_field, g, lat);
  double inv2h = 1.0 / (2.0 * h);
  FS fwd, bwd, acc;
  for (int x = 0; x < V; ++x)
    for (int ax = 0; ax < 3; ++ax) {
      double th = v.theta[static_cast<size_t>(x) * 3 + ax];
      if (th == 0.0) continue;
      int xp = lat.neighbor(x, ax, +1);
      link_transports<NC>(a, b, psi, lat, x, ax, fwd, bwd);
      acc.setZero();
      detail::add_gamma_times<NC>(ax, FS(i1 * fwd), acc);
      out.dirac[x] += (th * inv2h) * acc;
      acc.setZero();
      detail::add_gamma_times<NC>(ax, FS(i1 * bwd), acc);
      out.dirac[xp] += (th * inv2h) * acc;
    }

  // curvature block: sin^2 curl(dtheta)/h^2 - cos^2 d(mu as two-form)[dpsi]
  double invh2 = 1.0 / (h * h);
  for (int y = 0; y < V; ++y)
    for (int m = 0; m < 3; ++m) {
      int j, k;
      plane_axes(m, j, k);
      double curl = v.theta[static_cast<size_t>(y) * 3 + j] +
                    v.theta[static_cast<size_t>(lat.neighbor(y, j, +1)) * 3 + k] -
                    v.theta[static_cast<size_t>(lat.neighbor(y, k, +1)) * 3 + j] -
                    v.theta[static_cast<size_t>(y) * 3 + k];
      out.curv[y].c[m] =
          s2 * curl * invh2 -
          c2 * re_inner(sigma_times<NC>(m, detail::view<NC>(psi.psi[y])), detail::view<NC>(v.psi[y]));
    }
}

// Directional derivative of the residual map at (a, psi) along v.
inline ResidualVec apply_jacobian(const U1Connection& a, const SpinorField& psi, double alpha,
                                  const SUnConnection& b, const GammaRep& g,
                                  const TorusLattice& lat, const SWGradient& v) {
  ResidualVec out;
  switch (psi.n) {
    case 1: apply_jacobian_impl<1>(a, psi, alpha, b, g, lat, v, out); break;
    case 2: apply_jacobian_impl<2>(a, psi, alpha, b, g, lat, v, out); break;
    case 3: apply_jacobian_impl<3>(a, psi, alpha, b, g, lat, v, out); break;
    case 4: apply_jacobian_impl<4>(a, psi, alpha, b, g, lat, v, out); break;
    default: throw std::invalid_argument("apply_jacobian: n must be 1..4");
  }
  return out;
}

template <int NC>
inline void apply_jacobian_t_impl(const U1Connection& a, const SpinorField& psi, double alpha,
                                  const SUnConnection& b, const GammaRep& g,
                                  const TorusLattice& lat, const ResidualVec& r,
                                  SWGradient& grad) {
  using FS = detail_fixed::FS<NC>;
  int V = lat.sites();
  double h = lat.spacing;
  double vol = lat.cell_volume();
  double s2 = sqr(std::sin(alpha)), c2 = sqr(std::cos(alpha));
  grad.theta.assign(static_cast<size_t>(V) * 3, 0.0);
  grad.psi.resize(V);

  // psi block: D(r_dirac) - cos^2 sum_m r_m sigma_m psi
  SpinorField rd;
  rd.n = psi.n;
  rd.psi = r.dirac;
  SpinorArray drd = dirac(a, b, rd, g, lat);
  for (int s = 0; s < V; ++s) {
    FS acc = detail::view<NC>(drd[s]);
    for (int m = 0; m < 3; ++m)
      acc -= (c2 * r.curv[s].c[m]) * sigma_times<NC>(m, detail::view<NC>(psi.psi[s]));
    grad.psi[s] = vol * acc;
  }

  // theta block, curvature part: d arg(P)/d theta is +-1 per traversal
  double wcurv = vol * s2 / (h * h);
  for (int y = 0; y < V; ++y)
    for (int m = 0; m < 3; ++m) {
      int j, k;
      plane_axes(m, j, k);
      double w = wcurv * r.curv[y].c[m];
      grad.theta[static_cast<size_t>(y) * 3 + j] += w;
      grad.theta[static_cast<size_t>(lat.neighbor(y, j, +1)) * 3 + k] += w;
      grad.theta[static_cast<size_t>(lat.neighbor(y, k, +1)) * 3 + j] -= w;
      grad.theta[static_cast<size_t>(y) * 3 + k] -= w;
    }

  // theta block, Dirac part
  const Complex i1(0.0, 1.0);
  double wd = vol / (2.0 * h);
  FS fwd, bwd, tmp;
  for (int x = 0; x < V; ++x)
    for (int ax = 0; ax < 3; ++ax) {
      int xp = lat.neighbor(x, ax, +1);
      link_transports<NC>(a, b, psi, lat, x, ax, fwd, bwd);
      tmp.setZero();
      detail::add_gamma_times<NC>(ax, FS(i1 * fwd), tmp);
      double gv = re_inner(tmp, detail::view<NC>(r.dirac[x]));
      tmp.setZero();
      detail::add_gamma_times<NC>(ax, FS(i1 * bwd), tmp);
      gv += re_inner(tmp, detail::view<NC>(r.dirac[xp]));
      grad.theta[static_cast<size_t>(x) * 3 + ax] += wd * gv;
    }
}

// Adjoint of the Jacobian against a residual-space vector, in descent
// coordinates (includes the L2 volume weight). The energy gradient is
// apply_jacobian_t at the residual itself.
inline SWGradient apply_jacobian_t(const U1Connection& a, const SpinorField& psi, double alpha,
                                   const SUnConnection& b, const GammaRep& g,
                                   const TorusLattice& lat, const ResidualVec& r) {
  SWGradient grad;
  switch (psi.n) {
    case 1: apply_jacobian_t_impl<1>(a, psi, alpha, b, g, lat, r, grad); break;
    case 2: apply_jacobian_t_impl<2>(a, psi, alpha, b, g, lat, r, grad); break;
    case 3: apply_jacobian_t_impl<3>(a, psi, alpha, b, g, lat, r, grad); break;
    case 4: apply_jacobian_t_impl<4>(a, psi, alpha, b, g, lat, r, grad); break;
    default: throw std::invalid_argument("apply_jacobian_t: n must be 1..4");
  }
  return grad;
}

inline SWGradient sw_gradient(const U1Connection& a, const SpinorField& psi, double alpha,
                              const SUnConnection& b, const GammaRep& g, const TorusLattice& lat,
                              const ResidualParts& parts) {
  ResidualVec r{parts.dirac_part, parts.curvature_part};
  return apply_jacobian_t(a, psi, alpha, b, g, lat, r);
}

inline double grad_dot(const SWGradient& x, const SWGradient& y) {
  double acc = 0.0;
  for (size_t i = 0; i < x.theta.size(); ++i) acc += x.theta[i] * y.theta[i];
  for (size_t s = 0; s < x.psi.size(); ++s) acc += re_inner(x.psi[s], y.psi[s]);
  return acc;
}

inline void apply_step(const U1Connection& a0, const SpinorField& f0, double t,
                       const SWGradient& g, const TorusLattice& lat, U1Connection& a1,
                       SpinorField& f1) {
  a1.link.resize(a0.link.size());
  for (size_t i = 0; i < a0.link.size(); ++i)
    a1.link[i] = a0.link[i] * std::exp(Complex(0.0, -t * g.theta[i]));
  f1.n = f0.n;
  f1.psi.resize(f0.psi.size());
  for (size_t s = 0; s < f0.psi.size(); ++s) f1.psi[s] = f0.psi[s] - t * g.psi[s];
  f1 = normalize(f1, lat);
}

// Difference of two states in descent coordinates (link phase increments and
// spinor increments), for the Barzilai-Borwein ratios.
inline SWGradient state_diff(const U1Connection& a1, const SpinorField& f1,
                             const U1Connection& a0, const SpinorField& f0) {
  SWGradient d;
  d.theta.resize(a0.link.size());
  for (size_t i = 0; i < a0.link.size(); ++i)
    d.theta[i] = std::arg(a1.link[i] * std::conj(a0.link[i]));
  d.psi.resize(f0.psi.size());
  for (size_t s = 0; s < f0.psi.size(); ++s) d.psi[s] = f1.psi[s] - f0.psi[s];
  return d;
}

// Least-squares flattening of the link phases: solves curl^T curl delta =
// -curl^T b for the plaquette angle field b, then snaps the three axis
// holonomies to +1. Returns false when nothing improved (e.g. flux sector
// obstruction).
inline bool flatten_connection(U1Connection& a, const TorusLattice& lat) {
  int V = lat.sites();
  size_t nl = static_cast<size_t>(V) * 3;

  auto plaq_angles = [&](const U1Connection& conn) {
    std::vector<double> bfield(static_cast<size_t>(V) * 3);
    for (int y = 0; y < V; ++y)
      for (int m = 0; m < 3; ++m) {
        int j, k;
        plane_axes(m, j, k);
        bfield[static_cast<size_t>(y) * 3 + m] = std::arg(plaquette(conn, lat, y, j, k));
      }
    return bfield;
  };

  auto curl = [&](const std::vector<double>& th, std::vector<double>& out) {
    for (int y = 0; y < V; ++y)
      for (int m = 0; m < 3; ++m) {
        int j, k;
        plane_axes(m, j, k);
        out[static_cast<size_t>(y) * 3 + m] =
            th[static_cast<size_t>(y) * 3 + j] +
            th[static_cast<size_t>(lat.neighbor(y, j, +1)) * 3 + k] -
            th[static_cast<size_t>(lat.neighbor(y, k, +1)) * 3 + j] -
            th[static_cast<size_t>(y) * 3 + k];
      }
  };

  auto curl_t = [&](const std::vector<double>& p, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (int y = 0; y < V; ++y)
      for (int m = 0; m < 3; ++m) {
        int j, k;
        plane_axes(m, j, k);
        double v = p[static_cast<size_t>(y) * 3 + m];
        out[static_cast<size_t>(y) * 3 + j] += v;
        out[static_cast<size_t>(lat.neighbor(y, j, +1)) * 3 + k] += v;
        out[static_cast<size_t>(lat.neighbor(y, k, +1)) * 3 + j] -= v;
        out[static_cast<size_t>(y) * 3 + k] -= v;
      }
  };

  std::vector<double> bfield = plaq_angles(a);
  std::vector<double> rhs(nl), tmp(nl);
  curl_t(bfield, rhs);
  for (auto& v : rhs) v = -v;

  auto normal_op = [&](const std::vector<double>& x, std::vector<double>& out) {
    curl(x, tmp);
    curl_t(tmp, out);
  };
  std::vector<double> delta;
  if (conjugate_gradient(normal_op, rhs, delta, 1e-12, 4000) < 0) return false;

  U1Connection flat = a;
  for (size_t i = 0; i < nl; ++i) flat.link[i] *= std::exp(Complex(0.0, delta[i]));

  // snap the axis holonomies to +1 so the Dirac kernel is reachable
  for (int ax = 0; ax < 3; ++ax) {
    Complex hol(1.0, 0.0);
    int s = 0;
    for (int i = 0; i < lat.n_per_axis; ++i) {
      hol *= flat.at(s, ax);
      s = lat.neighbor(s, ax, +1);
    }
    double shift = -std::arg(hol) / lat.n_per_axis;
    Complex ph = std::exp(Complex(0.0, shift));
    for (int site = 0; site < V; ++site) flat.at(site, ax) *= ph;
  }

  double before = 0.0, after = 0.0;
  std::vector<double> bnew = plaq_angles(flat);
  for (size_t i = 0; i < bfield.size(); ++i) {
    before += bfield[i] * bfield[i];
    after += bnew[i] * bnew[i];
  }
  if (after >= before) return false;
  a = flat;
  return true;
}

}  // namespace detail

namespace detail {

// The theta and psi blocks carry very different curvature scales
// (E_2's theta-Hessian ~ 16 sin^4(alpha) vol / h^4, the psi block ~ 3 vol / h^2).
// A diagonal preconditioner rescales the theta block to the psi scale.
inline double theta_precon_scale(double alpha, const TorusLattice& lat) {
  double s2 = sqr(std::sin(alpha));
  double h2 = sqr(lat.spacing);
  return 3.0 / (16.0 * s2 * s2 / h2 + 1.0);
}

// Levenberg-Marquardt direction: preconditioned CG on
//   (J^T J + lambda P^-1) s = -grad
// from a zero start (a descent direction for any lambda >= 0).
inline SWGradient lm_direction(const U1Connection& a, const SpinorField& psi, double alpha,
                               const SUnConnection& b, const GammaRep& g, const TorusLattice& lat,
                               const SWGradient& grad, double lambda, double p_theta,
                               int max_inner, double rel_tol, bool move_links = true) {
  SWGradient x;
  x.theta.assign(grad.theta.size(), 0.0);
  x.psi.assign(grad.psi.size(), SpinorMat::Zero(2, psi.n));

  auto precon = [&](const SWGradient& v) {
    SWGradient out = v;
    for (auto& t : out.theta) t *= p_theta;
    return out;
  };
  auto op = [&](const SWGradient& v) {
    ResidualVec jv = apply_jacobian(a, psi, alpha, b, g, lat, v);
    SWGradient out = apply_jacobian_t(a, psi, alpha, b, g, lat, jv);
    for (size_t i = 0; i < out.theta.size(); ++i)
      out.theta[i] = move_links ? out.theta[i] + lambda / p_theta * v.theta[i] : 0.0;
    for (size_t i = 0; i < out.psi.size(); ++i) out.psi[i] += lambda * v.psi[i];
    return out;
  };

  SWGradient r = grad;
  for (auto& v : r.theta) v = move_links ? -v : 0.0;
  for (auto& m : r.psi) m = -m;
  SWGradient z = precon(r);
  SWGradient p = z;
  double rz = grad_dot(r, z);
  double r0 = grad_dot(r, r);
  double target = sqr(rel_tol) * r0;
  for (int it = 0; it < max_inner && rz > 0.0; ++it) {
    SWGradient ap = op(p);
    double pap = grad_dot(p, ap);
    if (pap <= 0.0) break;
    double step = rz / pap;
    for (size_t i = 0; i < x.theta.size(); ++i) {
      x.theta[i] += step * p.theta[i];
      r.theta[i] -= step * ap.theta[i];
    }
    for (size_t i = 0; i < x.psi.size(); ++i) {
      x.psi[i] += step * p.psi[i];
      r.psi[i] -= step * ap.psi[i];
    }
    if (grad_dot(r, r) <= target) break;
    z = precon(r);
    double rz_new = grad_dot(r, z);
    double beta = rz_new / rz;
    rz = rz_new;
    for (size_t i = 0; i < p.theta.size(); ++i) p.theta[i] = r.theta[i] * p_theta + beta * p.theta[i];
    for (size_t i = 0; i < p.psi.size(); ++i) p.psi[i] = r.psi[i] + beta * p.psi[i];
  }
  return x;
}

}  // namespace detail

inline SWState solve_fixed_alpha(const SWState& init, const SUnConnection& b, const GammaRep& g,
                                 const TorusLattice& lat, const SWOptions& opts = {}) {
  if (!(init.alpha > 0.0 && init.alpha <= M_PI / 2 + 1e-15))
    throw std::invalid_argument("solve_fixed_alpha: alpha must lie in (0, pi/2]");

  SWState cur = init;
  cur.psi = normalize(init.psi, lat);

  ResidualParts parts = residual_parts(cur.a, cur.psi, cur.alpha, b, g, lat);
  double E = 0.5 * sqr(parts.norm);
  cur.residual = parts.norm;
  cur.iterations = 0;
  if (parts.norm <= opts.tol) {
    cur.converged = true;
    if (opts.coulomb_exit) {
      CoulombResult cres = coulomb_gauge_fix(cur.a, lat);
      auto [ca, cf] = apply_gauge(cres.g, cur.a, cur.psi, lat);
      cur.a = std::move(ca);
      cur.psi = std::move(cf);
    }
    return cur;
  }

  detail::SWGradient grad = detail::sw_gradient(cur.a, cur.psi, cur.alpha, b, g, lat, parts);
  double step = opts.step_init;
  detail::SWGradient prev_grad;
  U1Connection prev_a;
  SpinorField prev_psi;

  // Armijo backtracking along -dir; returns false when no decrease was found.
  auto try_step = [&](const detail::SWGradient& dir, double t0, double slope) {
    double t = t0;
    U1Connection trial_a;
    SpinorField trial_psi;
    for (int bt = 0; bt < opts.armijo_max; ++bt) {
      detail::apply_step(cur.a, cur.psi, t, dir, lat, trial_a, trial_psi);
      double trial_E = energy(trial_a, trial_psi, cur.alpha, b, g, lat);
      bool sufficient = trial_E <= E - opts.armijo_c * t * slope;
      bool plain = bt >= opts.armijo_max / 2 && trial_E < E;
      if (sufficient || plain) {
        prev_a = std::move(cur.a);
        prev_psi = std::move(cur.psi);
        prev_grad = grad;
        cur.a = std::move(trial_a);
        cur.psi = std::move(trial_psi);
        parts = residual_parts(cur.a, cur.psi, cur.alpha, b, g, lat);
        E = 0.5 * sqr(parts.norm);
        grad = detail::sw_gradient(cur.a, cur.psi, cur.alpha, b, g, lat, parts);
        ++cur.iterations;
        return true;
      }
      t *= 0.5;
      if (t < opts.step_min) break;
    }
    return false;
  };

  const double p_theta = detail::theta_precon_scale(cur.alpha, lat);
  double lambda = opts.lm_lambda0;

  // preconditioned steepest descent with a BB step in the rescaled metric
  auto bb_iteration = [&](bool move_links) {
    detail::SWGradient dir = grad;
    for (auto& v : dir.theta) v = move_links ? v * p_theta : 0.0;
    double slope = detail::grad_dot(grad, dir);
    if (slope <= 0.0) return false;
    double t = std::clamp(step, opts.step_min, opts.step_max);
    if (!try_step(dir, t, slope)) return false;
    detail::SWGradient s = detail::state_diff(cur.a, cur.psi, prev_a, prev_psi);
    detail::SWGradient y = grad;
    for (size_t i = 0; i < y.theta.size(); ++i) y.theta[i] -= prev_grad.theta[i];
    for (size_t i = 0; i < y.psi.size(); ++i) y.psi[i] -= prev_grad.psi[i];
    double ss = 0.0;  // <s, P^-1 s> in the preconditioned metric
    for (size_t i = 0; i < s.theta.size(); ++i) ss += s.theta[i] * s.theta[i] / p_theta;
    for (size_t i = 0; i < s.psi.size(); ++i) ss += re_inner(s.psi[i], s.psi[i]);
    double sy = detail::grad_dot(s, y);
    step = (sy > 0.0) ? std::clamp(ss / sy, opts.step_min, opts.step_max) : 2.0 * t;
    return true;
  };

  auto lm_iteration = [&](bool move_links) {
    double rel = std::clamp(std::sqrt(parts.norm), 1e-4, 0.1);
    for (int attempt = 0; attempt < 4; ++attempt) {
      detail::SWGradient dir =
          detail::lm_direction(cur.a, cur.psi, cur.alpha, b, g, lat, grad, lambda, p_theta,
                               opts.gn_inner, rel, move_links);
      for (auto& v : dir.theta) v = -v;  // try_step moves along -dir
      for (auto& m : dir.psi) m = -m;
      double slope = -detail::grad_dot(grad, dir);
      if (slope > 0.0) {
        double e_before = E;
        if (try_step(dir, 1.0, slope)) {
          // trust the model more when the full step nearly solved it
          lambda = (E < 0.1 * e_before) ? lambda / 4.0 : lambda / 1.5;
          lambda = std::max(lambda, 1e-14);
          return true;
        }
      }
      lambda *= 8.0;
      if (lambda > 1e8) break;
    }
    return false;
  };

  auto run_descent = [&](int budget, bool move_links) {
    int start = cur.iterations;
    int it_here = 0;
    while (cur.iterations - start < budget && parts.norm > opts.tol) {
      bool ok;
      if (!opts.use_gauss_newton || it_here < opts.bb_warmup) {
        ok = bb_iteration(move_links);
        if (!ok && opts.use_gauss_newton) ok = lm_iteration(move_links);
      } else {
        ok = lm_iteration(move_links);
        if (!ok) ok = bb_iteration(move_links);
      }
      if (!ok) break;
      ++it_here;
    }
  };

  run_descent(opts.max_iters, true);

  // alpha = pi/2: curvature equation degenerates to F_A = 0; finish with a
  // linear flatten plus spinor-only descent, keeping the move only if the
  // energy went down.
  if (opts.flat_polish && sqr(std::cos(cur.alpha)) < 1e-20 && parts.norm > 1e-14) {
    U1Connection saved_a = cur.a;
    SpinorField saved_psi = cur.psi;
    double saved_E = E;
    int saved_iters = cur.iterations;
    if (detail::flatten_connection(cur.a, lat)) {
      parts = residual_parts(cur.a, cur.psi, cur.alpha, b, g, lat);
      E = 0.5 * sqr(parts.norm);
      grad = detail::sw_gradient(cur.a, cur.psi, cur.alpha, b, g, lat, parts);
      step = opts.step_init;
      run_descent(opts.max_iters, false);
      if (E >= saved_E) {
        cur.a = std::move(saved_a);
        cur.psi = std::move(saved_psi);
        cur.iterations = saved_iters;
        parts = residual_parts(cur.a, cur.psi, cur.alpha, b, g, lat);
        E = 0.5 * sqr(parts.norm);
      }
    }
  }

  cur.residual = parts.norm;
  cur.converged = parts.norm <= opts.tol;

  if (opts.coulomb_exit) {
    CoulombResult cres = coulomb_gauge_fix(cur.a, lat);
    auto [ca, cf] = apply_gauge(cres.g, cur.a, cur.psi, lat);
    cur.a = std::move(ca);
    cur.psi = std::move(cf);
    cur.residual = residual_parts(cur.a, cur.psi, cur.alpha, b, g, lat).norm;
  }
  return cur;
}

struct StageRecord {
  double alpha = 0.0;
  double residual = 0.0;
  double energy = 0.0;
  double sup_psi = 0.0;
  double l2_mu = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct ContinuationTrace {
  std::vector<SWState> states;
  std::vector<StageRecord> records;
};

// Warm-started continuation along a strictly decreasing alpha schedule.
// Aborts (returning the partial trace) after two consecutive stages fail.
inline ContinuationTrace continue_alpha(const SWState& start, const std::vector<double>& schedule,
                                        const SUnConnection& b, const GammaRep& g,
                                        const TorusLattice& lat, const SWOptions& opts = {}) {
  if (schedule.empty()) throw std::invalid_argument("continue_alpha: empty schedule");
  for (size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] > 0.0 && schedule[i] <= M_PI / 2 + 1e-15))
      throw std::invalid_argument("continue_alpha: schedule entries must lie in (0, pi/2]");
    if (i > 0 && !(schedule[i] < schedule[i - 1]))
      throw std::invalid_argument("continue_alpha: schedule must be strictly decreasing");
  }

  ContinuationTrace trace;
  SWState cur = start;
  int consecutive_failures = 0;
  for (double alpha : schedule) {
    cur.alpha = alpha;
    cur.psi = normalize(cur.psi, lat);
    SWState solved = solve_fixed_alpha(cur, b, g, lat, opts);

    StageRecord rec;
    rec.alpha = alpha;
    rec.residual = solved.residual;
    rec.energy = 0.5 * sqr(solved.residual);
    rec.sup_psi = sup_norm(solved.psi);
    rec.l2_mu = mu_l2(solved.psi, lat);
    rec.iterations = solved.iterations;
    rec.converged = solved.converged;
    trace.states.push_back(solved);
    trace.records.push_back(rec);

    consecutive_failures = solved.converged ? 0 : consecutive_failures + 1;
    if (consecutive_failures >= 2) break;
    cur = solved;
  }
  return trace;
}

}  // namespace swn
