#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "swn/core.hpp"

// Flat 3-torus lattice: N sites per axis, spacing h = L/N, periodic indices.
// Radial machinery bins sites into shells of width h centered at radii k*h;
// a "ball" of radius r is the union of shells with k*h <= r, which makes
// ball sums and shell sums exactly compatible.

namespace swn {

struct TorusLattice {
  int n_per_axis = 0;
  double side_length = 0.0;
  double spacing = 0.0;

  std::vector<std::array<int, 3>> coord;   // site -> (x1, x2, x3)
  std::vector<std::array<int, 6>> neigh;   // site -> neighbors [axis*2 + (0:+,1:-)]

  int sites() const { return n_per_axis * n_per_axis * n_per_axis; }

  int index(int x, int y, int z) const {
    int n = n_per_axis;
    auto wrap = [n](int v) { return ((v % n) + n) % n; };
    return (wrap(x) * n + wrap(y)) * n + wrap(z);
  }

  int neighbor(int site, int axis, int dir) const {
    return neigh[site][axis * 2 + (dir < 0 ? 1 : 0)];
  }

  double cell_volume() const { return spacing * spacing * spacing; }

  // Minimal-image displacement from site a to site b, in length units.
  std::array<double, 3> displacement(int a, int b) const {
    std::array<double, 3> d;
    int n = n_per_axis;
    for (int ax = 0; ax < 3; ++ax) {
      int diff = coord[b][ax] - coord[a][ax];
      // wrap into (-n/2, n/2]; exact-half ties go positive
      if (2 * diff > n) diff -= n;
      else if (2 * diff <= -n) diff += n;
      d[ax] = diff * spacing;
    }
    return d;
  }

  double distance(int a, int b) const {
    auto d = displacement(a, b);
    return std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  }
};

inline TorusLattice build_lattice(int N, double L) {
  if (N < 4) throw std::invalid_argument("build_lattice: N >= 4 required (5-point stencils)");
  if (!(L > 0.0)) throw std::invalid_argument("build_lattice: L > 0 required");
  TorusLattice lat;
  lat.n_per_axis = N;
  lat.side_length = L;
  lat.spacing = L / N;
  int V = N * N * N;
  lat.coord.resize(V);
  lat.neigh.resize(V);
  for (int x = 0; x < N; ++x)
    for (int y = 0; y < N; ++y)
      for (int z = 0; z < N; ++z) {
        int s = (x * N + y) * N + z;
        lat.coord[s] = {x, y, z};
      }
  for (int s = 0; s < V; ++s) {
    auto [x, y, z] = lat.coord[s];
    lat.neigh[s][0] = lat.index(x + 1, y, z);
    lat.neigh[s][1] = lat.index(x - 1, y, z);
    lat.neigh[s][2] = lat.index(x, y + 1, z);
    lat.neigh[s][3] = lat.index(x, y - 1, z);
    lat.neigh[s][4] = lat.index(x, y, z + 1);
    lat.neigh[s][5] = lat.index(x, y, z - 1);
  }
  return lat;
}

inline double torus_distance(int a, int b, const TorusLattice& lat) { return lat.distance(a, b); }

inline int max_shell_index(const TorusLattice& lat) { return lat.n_per_axis / 2; }

// Shell index of a distance: nearest integer multiple of h.
inline int shell_of(double dist, double h) { return static_cast<int>(std::llround(dist / h)); }

struct ShellDecomposition {
  int center = 0;
  std::vector<double> radii;              // r_k = k*h, k = 0..K, K*h <= L/2
  std::vector<std::vector<int>> members;  // members[k]: sites at distance in [r_k - h/2, r_k + h/2)
};

inline ShellDecomposition build_shells(const TorusLattice& lat, int center) {
  ShellDecomposition sd;
  sd.center = center;
  int K = max_shell_index(lat);
  sd.radii.resize(K + 1);
  sd.members.assign(K + 1, {});
  double h = lat.spacing;
  for (int k = 0; k <= K; ++k) sd.radii[k] = k * h;
  for (int s = 0; s < lat.sites(); ++s) {
    int k = shell_of(lat.distance(center, s), h);
    if (k <= K) sd.members[k].push_back(s);
  }
  return sd;
}

namespace detail {
inline int ball_top_shell(double r, const TorusLattice& lat) {
  double rmax = lat.side_length / 2.0;
  if (r > rmax * (1.0 + 1e-12))
    throw std::invalid_argument("radius exceeds L/2 (injectivity-radius analogue)");
  int k = static_cast<int>(std::floor(r / lat.spacing + 1e-9));
  return std::min(k, max_shell_index(lat));
}

inline int exact_shell(double r, const TorusLattice& lat) {
  double h = lat.spacing;
  int k = static_cast<int>(std::llround(r / h));
  if (k < 0 || k > max_shell_index(lat) || std::abs(r - k * h) > 1e-9 * std::max(h, r))
    throw std::invalid_argument("radius is not on the shell grid");
  return k;
}
}  // namespace detail

// sum_{shell(y) <= shell(r)} f(y) h^3
inline double ball_sum(const std::vector<double>& f, int x, double r, const TorusLattice& lat) {
  int top = detail::ball_top_shell(r, lat);
  double h = lat.spacing;
  double acc = 0.0;
  for (int s = 0; s < lat.sites(); ++s)
    if (shell_of(lat.distance(x, s), h) <= top) acc += f[s];
  return acc * lat.cell_volume();
}

// Shell mass per unit thickness: sum_{y in shell(r)} f(y) h^2.
inline double sphere_sum(const std::vector<double>& f, int x, double r, const TorusLattice& lat) {
  int k = detail::exact_shell(r, lat);
  double h = lat.spacing;
  double acc = 0.0;
  for (int s = 0; s < lat.sites(); ++s)
    if (shell_of(lat.distance(x, s), h) == k) acc += f[s];
  return acc * h * h;
}

// Shell sum of the radial component of the centered-difference gradient of f.
// The optional weight multiplies the integrand pointwise.
inline double radial_derivative_sum(const std::vector<double>& f, int x, double r,
                                    const TorusLattice& lat,
                                    const std::vector<double>* weight = nullptr) {
  int k = detail::exact_shell(r, lat);
  double h = lat.spacing;
  double acc = 0.0;
  for (int s = 0; s < lat.sites(); ++s) {
    double d = lat.distance(x, s);
    if (shell_of(d, h) != k) continue;
    if (d == 0.0) continue;  // radial direction undefined at the center
    auto disp = lat.displacement(x, s);
    double dot = 0.0;
    for (int ax = 0; ax < 3; ++ax) {
      double g = (f[lat.neighbor(s, ax, +1)] - f[lat.neighbor(s, ax, -1)]) / (2.0 * h);
      dot += g * disp[ax] / d;
    }
    acc += (weight ? (*weight)[s] : 1.0) * dot;
  }
  return acc * h * h;
}

}  // namespace swn
