#pragma once

#include <cmath>
#include <queue>
#include <stdexcept>
#include <vector>

#include <Eigen/SVD>

#include "swn/core.hpp"
#include "swn/gauge_field.hpp"
#include "swn/lattice.hpp"
#include "swn/spin_algebra.hpp"

// The framed centred charge-one instanton moduli as the hyperkaehler quotient
// (Hom(E, S+ x L) \ 0) /// U(1): representatives live in mu^-1(0), the
// canonical connection is horizontal transport orthogonal to the U(1) orbits,
// and sections over the torus feed a discrete Fueter operator. Bundles are
// trivialized, so sections are plain maps and the base derivative is flat.

namespace swn {

struct QuotientPoint {
  SpinorMat rep;     // mu(rep) = 0, rep != 0
  double norm = 0.0;
};

inline bool quotient_point_valid(const QuotientPoint& p, double tol = 1e-10) {
  double n2 = p.rep.squaredNorm();
  return n2 > 0.0 && moment_map(p.rep).norm() <= tol * n2;
}

namespace detail_fueter {

// gradient flow toward mu^-1(0): descends |mu|^2 (gradient 4 mu(x) x) until
// |mu| <= tol_rel |x|^2
inline void mu_flow(SpinorMat& x, double tol_rel, int max_iter) {
  SpinorMat grad = 4.0 * (moment_map(x) * x);
  double step = 0.25 / std::max(x.squaredNorm(), 1e-30);
  SpinorMat x_prev = x, g_prev = grad;
  for (int it = 0; it < max_iter; ++it) {
    if (moment_map(x).norm() <= tol_rel * x.squaredNorm()) return;
    SpinorMat x_new = x - step * grad;
    int guard = 0;
    while (moment_map(x_new).squaredNorm() > moment_map(x).squaredNorm() && guard++ < 60) {
      step *= 0.5;
      x_new = x - step * grad;
    }
    x_prev = x;
    g_prev = grad;
    x = x_new;
    grad = 4.0 * (moment_map(x) * x);
    SpinorMat s = x - x_prev, y = grad - g_prev;
    double sy = re_inner(s, y);
    step = sy > 0.0 ? re_inner(s, s) / sy : 2.0 * step;
  }
}

// remove the span of the three constraint gradients sigma_k x (the normal
// space of mu^-1(0); orbit motion stays allowed)
inline SpinorMat constraint_project(const SpinorMat& x, const SpinorMat& v) {
  std::vector<SpinorMat> basis;
  basis.reserve(3);
  for (int k = 0; k < 3; ++k) basis.push_back(pauli(k) * x);
  Eigen::Matrix3d gram;
  Eigen::Vector3d rhs;
  for (int i = 0; i < 3; ++i) {
    rhs(i) = re_inner(v, basis[i]);
    for (int j = 0; j < 3; ++j) gram(i, j) = re_inner(basis[i], basis[j]);
  }
  Eigen::Vector3d coef = gram.ldlt().solve(rhs);
  SpinorMat out = v;
  for (int i = 0; i < 3; ++i) out -= coef(i) * basis[i];
  return out;
}

}  // namespace detail_fueter

// Nearest point of mu^-1(0) in Frobenius distance: a gradient flow on |mu|^2
// reaches the zero set, then projected gradient steps on (1/2)|x - psi|^2
// along ker(d mu) slide to a local distance minimizer. For n = 1 the zero set
// is empty away from the origin: structural infeasibility.
inline QuotientPoint project_to_zero_set(const SpinorMat& psi, double tol_rel = 1e-12,
                                         int max_iter = 4000) {
  if (psi.cols() < 1 || psi.norm() == 0.0)
    throw std::invalid_argument("project_to_zero_set: nonzero input required");
  if (psi.cols() == 1)
    throw std::domain_error(
        "project_to_zero_set: mu(psi) = 0 forces psi psi* = (1/2)|psi|^2 id, impossible at rank one");

  SpinorMat x = psi;
  detail_fueter::mu_flow(x, tol_rel, max_iter);

  // distance polish constrained to the zero set
  double step = 0.5;
  for (int it = 0; it < max_iter; ++it) {
    SpinorMat d = detail_fueter::constraint_project(x, x - psi);
    if (d.norm() <= 1e-9 * psi.norm()) break;
    double dist2 = (x - psi).squaredNorm();
    SpinorMat x_new;
    int guard = 0;
    for (;;) {
      x_new = x - step * d;
      detail_fueter::mu_flow(x_new, tol_rel, 200);
      if ((x_new - psi).squaredNorm() < dist2 || guard++ >= 40) break;
      step *= 0.5;
    }
    if ((x_new - psi).squaredNorm() >= dist2) break;  // no further progress
    x = x_new;
    step = std::min(step * 1.5, 1.0);
  }

  QuotientPoint out;
  out.rep = x;
  out.norm = x.norm();
  if (moment_map(x).norm() > tol_rel * x.squaredNorm() * 10.0)
    throw std::runtime_error("project_to_zero_set: descent stalled at |mu| = " +
                             std::to_string(moment_map(x).norm()));
  return out;
}

// Real dimension of the quotient at p: 4n - rank of the combined differential
// of the three moment-map components and the orbit direction (numerical rank
// with threshold 1e-8 relative to the top singular value). Expected 4n - 4.
inline int quotient_dimension_probe(const QuotientPoint& p, double rank_threshold = 1e-8) {
  if (!quotient_point_valid(p, 1e-8))
    throw std::invalid_argument("quotient_dimension_probe: invalid quotient point");
  int n = static_cast<int>(p.rep.cols());
  int dim_real = 4 * n;
  Eigen::MatrixXd rows(4, dim_real);
  auto flatten = [&](const SpinorMat& m, int row) {
    int col = 0;
    for (int c = 0; c < n; ++c)
      for (int r = 0; r < 2; ++r) {
        rows(row, col++) = m(r, c).real();
        rows(row, col++) = m(r, c).imag();
      }
  };
  for (int k = 0; k < 3; ++k) flatten(pauli(k) * p.rep, k);  // d m_k = <sigma_k psi, .>
  flatten(Complex(0, 1) * p.rep, 3);                         // orbit direction
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows);
  double top = svd.singularValues()(0);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) >= rank_threshold * top) ++rank;
  return dim_real - rank;
}

// Horizontal transport of a unit lift along a path of representatives closed
// in the quotient; returns the holonomy comparing the final lift with lift0.
inline Complex canonical_transport(const std::vector<SpinorMat>& path, const SpinorMat& lift0) {
  if (path.size() < 2) throw std::invalid_argument("canonical_transport: path too short");
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    double dist = (path[i + 1] - path[i]).norm();
    if (dist > 0.1 * path[i].norm())
      throw std::invalid_argument("canonical_transport: step too large for horizontal lifting");
  }
  // endpoints must be U(1)-equivalent
  {
    const SpinorMat& p0 = path.front();
    const SpinorMat& p1 = path.back();
    Complex lambda = c_inner(p1, p0) / p0.squaredNorm();
    if ((p1 - lambda * p0).norm() > 1e-8 * p1.norm())
      throw std::invalid_argument("canonical_transport: path is not closed in the quotient");
  }

  SpinorMat q = lift0 / lift0.norm();
  for (size_t i = 1; i < path.size(); ++i) {
    SpinorMat next = path[i] / path[i].norm();
    Complex z = c_inner(next, q);
    if (std::abs(z) == 0.0)
      throw std::runtime_error("canonical_transport: orthogonal consecutive lifts");
    q = (std::conj(z) / std::abs(z)) * next;  // Im<q', q> = 0, Re > 0
  }
  return c_inner(q, lift0 / lift0.norm());
}

struct SectionOfM {
  std::vector<SpinorMat> rep;  // per site, each in mu^-1(0) \ {0}
};

inline void validate_section(const SectionOfM& sec, double tol = 1e-8) {
  for (const auto& m : sec.rep) {
    double n2 = m.squaredNorm();
    if (!(n2 > 0.0) || moment_map(m).norm() > tol * n2)
      throw std::invalid_argument("section leaves mu^-1(0) \\ {0}");
  }
}

namespace detail_fueter {

// orthogonal projection onto ker(d mu) intersect orbit-orthogonal complement:
// removes the span of {sigma_k rep, i rep}
inline SpinorMat tangent_project(const SpinorMat& rep, const SpinorMat& v) {
  int n = static_cast<int>(rep.cols());
  std::vector<SpinorMat> basis;
  basis.reserve(4);
  for (int k = 0; k < 3; ++k) basis.push_back(pauli(k) * rep);
  basis.push_back(Complex(0, 1) * rep);
  Eigen::Matrix4d gram;
  Eigen::Vector4d rhs;
  for (int i = 0; i < 4; ++i) {
    rhs(i) = re_inner(v, basis[i]);
    for (int j = 0; j < 4; ++j) gram(i, j) = re_inner(basis[i], basis[j]);
  }
  Eigen::Vector4d coef = gram.ldlt().solve(rhs);
  SpinorMat out = v;
  for (int i = 0; i < 4; ++i) out -= coef(i) * basis[i];
  (void)n;
  return out;
}

inline Complex align_phase(const SpinorMat& neighbor, const SpinorMat& base) {
  Complex z = c_inner(neighbor, base);
  if (std::abs(z) == 0.0)
    throw std::runtime_error("fueter: orthogonal neighboring representatives");
  return std::conj(z) / std::abs(z);
}

}  // namespace detail_fueter

// L2 norm of the pointwise tangential projection of
//   sum_j gamma_j (phase-aligned central difference of the section along j).
inline double fueter_residual(const SectionOfM& sec, const GammaRep& g, const TorusLattice& lat) {
  validate_section(sec);
  double acc = 0.0;
  double inv2h = 1.0 / (2.0 * lat.spacing);
  for (int s = 0; s < lat.sites(); ++s) {
    const SpinorMat& base = sec.rep[s];
    SpinorMat v = SpinorMat::Zero(2, base.cols());
    for (int ax = 0; ax < 3; ++ax) {
      const SpinorMat& fwd = sec.rep[lat.neighbor(s, ax, +1)];
      const SpinorMat& bwd = sec.rep[lat.neighbor(s, ax, -1)];
      SpinorMat diff = inv2h * (detail_fueter::align_phase(fwd, base) * fwd -
                                detail_fueter::align_phase(bwd, base) * bwd);
      v += g.gamma[ax] * diff;
    }
    acc += detail_fueter::tangent_project(base, v).squaredNorm();
  }
  return std::sqrt(acc * lat.cell_volume());
}

struct LiftReport {
  U1Connection a;
  SpinorField psi;
  double flatness_sup = 0.0;              // sup |arg P| over plaquettes
  std::array<Complex, 3> torus_holonomy;  // loops through the tree root
  bool consistent = false;                // flatness below the obstruction tolerance
};

// Reconstructs (A, Psi) from a section: unit representatives phase-aligned
// along a BFS spanning tree, links from relative phases, loop-closure defects
// reported as curvature. Sections that do not lift at this resolution are
// reported through flatness_sup, not silently accepted.
inline LiftReport lift_section(const SectionOfM& sec, const TorusLattice& lat,
                               double obstruction_tol = 1e-8) {
  validate_section(sec);
  int V = lat.sites();
  int n = static_cast<int>(sec.rep[0].cols());

  std::vector<SpinorMat> lift(V);
  std::vector<char> seen(V, 0);
  std::queue<int> frontier;
  lift[0] = sec.rep[0] / sec.rep[0].norm();
  seen[0] = 1;
  frontier.push(0);
  while (!frontier.empty()) {
    int s = frontier.front();
    frontier.pop();
    for (int ax = 0; ax < 3; ++ax)
      for (int dir : {+1, -1}) {
        int t = lat.neighbor(s, ax, dir);
        if (seen[t]) continue;
        SpinorMat unit = sec.rep[t] / sec.rep[t].norm();
        lift[t] = detail_fueter::align_phase(unit, lift[s]) * unit;
        seen[t] = 1;
        frontier.push(t);
      }
  }

  LiftReport rep;
  rep.a = U1Connection::trivial(lat);
  for (int s = 0; s < V; ++s)
    for (int ax = 0; ax < 3; ++ax) {
      Complex z = c_inner(lift[lat.neighbor(s, ax, +1)], lift[s]);
      if (std::abs(z) == 0.0) throw std::runtime_error("lift_section: orthogonal neighbor lifts");
      rep.a.at(s, ax) = std::conj(z) / std::abs(z);
    }

  rep.psi = SpinorField::zero(lat, n);
  for (int s = 0; s < V; ++s) rep.psi.psi[s] = sec.rep[s].norm() * lift[s];
  refresh_norm(rep.psi, lat);

  for (int s = 0; s < V; ++s)
    for (int m = 0; m < 3; ++m) {
      int j, k;
      plane_axes(m, j, k);
      rep.flatness_sup = std::max(rep.flatness_sup, std::abs(std::arg(plaquette(rep.a, lat, s, j, k))));
    }
  for (int ax = 0; ax < 3; ++ax)
    rep.torus_holonomy[ax] = loop_holonomy(rep.a, axis_loop(lat, 0, ax), lat);
  rep.consistent = rep.flatness_sup <= obstruction_tol;
  return rep;
}

// Masked variant for sections defined only on a Z-free subgrid: the spanning
// tree grows over unmasked sites (which must be connected), plaquettes and
// holonomies are evaluated only where every participating site is unmasked.
// Torus holonomies are reported only for axes with a fully unmasked line.
struct MaskedLiftReport {
  double flatness_sup = 0.0;
  std::array<Complex, 3> torus_holonomy{Complex(0, 0), Complex(0, 0), Complex(0, 0)};
  std::array<bool, 3> holonomy_defined{false, false, false};
  int covered_sites = 0;
};

inline MaskedLiftReport lift_section_masked(const SectionOfM& sec, const std::vector<char>& keep,
                                            const TorusLattice& lat) {
  int V = lat.sites();
  int root = -1;
  for (int s = 0; s < V; ++s)
    if (keep[s]) {
      root = s;
      break;
    }
  if (root < 0) throw std::invalid_argument("lift_section_masked: empty subgrid");

  std::vector<SpinorMat> lift(V);
  std::vector<char> seen(V, 0);
  std::queue<int> frontier;
  lift[root] = sec.rep[root] / sec.rep[root].norm();
  seen[root] = 1;
  frontier.push(root);
  MaskedLiftReport rep;
  rep.covered_sites = 1;
  while (!frontier.empty()) {
    int s = frontier.front();
    frontier.pop();
    for (int ax = 0; ax < 3; ++ax)
      for (int dir : {+1, -1}) {
        int t = lat.neighbor(s, ax, dir);
        if (!keep[t] || seen[t]) continue;
        SpinorMat unit = sec.rep[t] / sec.rep[t].norm();
        lift[t] = detail_fueter::align_phase(unit, lift[s]) * unit;
        seen[t] = 1;
        ++rep.covered_sites;
        frontier.push(t);
      }
  }

  U1Connection a = U1Connection::trivial(lat);
  for (int s = 0; s < V; ++s)
    for (int ax = 0; ax < 3; ++ax) {
      int t = lat.neighbor(s, ax, +1);
      if (!seen[s] || !seen[t]) continue;
      Complex z = c_inner(lift[t], lift[s]);
      if (std::abs(z) == 0.0) continue;
      a.at(s, ax) = std::conj(z) / std::abs(z);
    }

  for (int s = 0; s < V; ++s)
    for (int m = 0; m < 3; ++m) {
      int j, k;
      plane_axes(m, j, k);
      int sj = lat.neighbor(s, j, +1), sk = lat.neighbor(s, k, +1);
      int sjk = lat.neighbor(sj, k, +1);
      if (!(seen[s] && seen[sj] && seen[sk] && seen[sjk])) continue;
      rep.flatness_sup = std::max(rep.flatness_sup, std::abs(std::arg(plaquette(a, lat, s, j, k))));
    }

  for (int ax = 0; ax < 3; ++ax) {
    // look for a fully covered straight line around this axis
    for (int base = 0; base < V; ++base) {
      if (!seen[base]) continue;
      bool clean = true;
      int s = base;
      for (int i = 0; i < lat.n_per_axis && clean; ++i) {
        if (!seen[s]) clean = false;
        s = lat.neighbor(s, ax, +1);
      }
      if (clean) {
        rep.torus_holonomy[ax] = loop_holonomy(a, axis_loop(lat, base, ax), lat);
        rep.holonomy_defined[ax] = true;
        break;
      }
    }
  }
  return rep;
}

// Explicit closed path generating pi_1 = Z_2 for n = 2: rep(t) =
// diag(exp(i pi t), exp(-i pi t)) / sqrt(2) runs from rep0 to -rep0 inside
// mu^-1(0).
inline std::vector<SpinorMat> z2_generator_path(int steps) {
  std::vector<SpinorMat> path;
  path.reserve(steps + 1);
  for (int t = 0; t <= steps; ++t) {
    double phase = M_PI * t / steps;
    SpinorMat m(2, 2);
    m << std::exp(Complex(0, phase)) / std::sqrt(2.0), 0, 0,
        std::exp(Complex(0, -phase)) / std::sqrt(2.0);
    path.push_back(m);
  }
  return path;
}

}  // namespace swn
