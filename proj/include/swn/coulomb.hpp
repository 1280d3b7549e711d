#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "swn/gauge_field.hpp"
#include "swn/lattice.hpp"

namespace swn {

// Conjugate gradients for an SPD operator given as a callback. Returns iterations
// used, or -1 if the residual target was not reached within the budget.
inline int conjugate_gradient(const std::function<void(const std::vector<double>&, std::vector<double>&)>& apply,
                              const std::vector<double>& rhs, std::vector<double>& x,
                              double tol, int max_iter) {
  size_t n = rhs.size();
  x.assign(n, 0.0);
  std::vector<double> r = rhs, p = rhs, ap(n);
  double rr = 0.0;
  for (double v : r) rr += v * v;
  double rhs_norm = std::sqrt(rr);
  if (rhs_norm == 0.0) return 0;
  for (int it = 1; it <= max_iter; ++it) {
    apply(p, ap);
    double pap = 0.0;
    for (size_t i = 0; i < n; ++i) pap += p[i] * ap[i];
    if (pap <= 0.0) return -1;
    double alpha = rr / pap;
    double rr_new = 0.0;
    for (size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
      rr_new += r[i] * r[i];
    }
    if (std::sqrt(rr_new) <= tol * rhs_norm) return it;
    double beta = rr_new / rr;
    rr = rr_new;
    for (size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  return -1;
}

// Discrete divergence of the link phase field: sum over axes of
// arg u_j(x) - arg u_j(x-j).
inline std::vector<double> link_phase_divergence(const U1Connection& a, const TorusLattice& lat) {
  std::vector<double> div(lat.sites(), 0.0);
  for (int s = 0; s < lat.sites(); ++s)
    for (int ax = 0; ax < 3; ++ax) {
      int sm = lat.neighbor(s, ax, -1);
      div[s] += std::arg(a.at(s, ax)) - std::arg(a.at(sm, ax));
    }
  return div;
}

inline double coulomb_residual(const U1Connection& a, const TorusLattice& lat) {
  double m = 0.0;
  for (double d : link_phase_divergence(a, lat)) m = std::max(m, std::abs(d));
  return m;
}

struct CoulombResult {
  GaugeTransform g;
  U1Connection a;
  double residual = 0.0;
  int outer_rounds = 0;
};

// Solves the discrete Poisson equation for the transform phase by CG; the
// torus Laplacian kernel (constants) is fixed by a zero-mean phase.
inline CoulombResult coulomb_gauge_fix(const U1Connection& a_in, const TorusLattice& lat,
                                       double tol = 1e-8, int max_cg = 20000,
                                       int max_outer = 12) {
  int V = lat.sites();
  CoulombResult res;
  res.a = a_in;
  res.g.u.assign(V, Complex(1.0, 0.0));
  std::vector<double> phi_total(V, 0.0);

  auto laplace = [&lat, V](const std::vector<double>& x, std::vector<double>& out) {
    for (int s = 0; s < V; ++s) {
      double acc = 6.0 * x[s];
      for (int ax = 0; ax < 3; ++ax)
        acc -= x[lat.neighbor(s, ax, +1)] + x[lat.neighbor(s, ax, -1)];
      out[s] = acc;
    }
  };

  for (int round = 1; round <= max_outer; ++round) {
    res.residual = coulomb_residual(res.a, lat);
    res.outer_rounds = round - 1;
    if (res.residual < tol) {
      for (int s = 0; s < V; ++s) res.g.u[s] = std::exp(Complex(0.0, phi_total[s]));
      return res;
    }

    std::vector<double> div = link_phase_divergence(res.a, lat);
    double mean = 0.0;
    for (double d : div) mean += d;
    mean /= V;
    for (double& d : div) d = -(d - mean);  // solve L phi = -div

    std::vector<double> phi;
    int its = conjugate_gradient(laplace, div, phi, 1e-3 * tol, max_cg);
    if (its < 0)
      throw std::runtime_error("coulomb_gauge_fix: CG did not converge within budget");

    for (int s = 0; s < V; ++s) phi_total[s] += phi[s];
    GaugeTransform g;
    g.u.resize(V);
    for (int s = 0; s < V; ++s) g.u[s] = std::exp(Complex(0.0, phi[s]));
    for (int s = 0; s < V; ++s)
      for (int ax = 0; ax < 3; ++ax)
        res.a.at(s, ax) = g.u[s] * res.a.at(s, ax) * std::conj(g.u[lat.neighbor(s, ax, +1)]);
  }
  res.residual = coulomb_residual(res.a, lat);
  if (res.residual >= tol)
    throw std::runtime_error("coulomb_gauge_fix: residual target not reached in outer budget");
  for (int s = 0; s < V; ++s) res.g.u[s] = std::exp(Complex(0.0, phi_total[s]));
  res.outer_rounds = max_outer;
  return res;
}

}  // namespace swn
