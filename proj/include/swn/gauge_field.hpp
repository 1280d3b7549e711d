#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "swn/core.hpp"
#include "swn/lattice.hpp"
#include "swn/spin_algebra.hpp"

// Discrete configuration space: connections stored as link transporters
// (exact gauge covariance, plaquette curvature), spinor fields as per-site
// 2 x n matrices.
//
// Link layout: link[site*3 + axis] transports from site+axis^ to site, i.e.
// the covariant forward difference reads u_j(x) psi(x+j) v_j(x)^-1 - psi(x).

namespace swn {

struct BranchCutError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct U1Connection {
  std::vector<Complex> link;  // unit modulus

  Complex& at(int site, int axis) { return link[site * 3 + axis]; }
  const Complex& at(int site, int axis) const { return link[site * 3 + axis]; }

  static U1Connection trivial(const TorusLattice& lat) {
    U1Connection a;
    a.link.assign(static_cast<size_t>(lat.sites()) * 3, Complex(1.0, 0.0));
    return a;
  }
};

struct SUnConnection {
  int n = 1;
  bool is_trivial = true;        // fast path: identity links everywhere
  std::vector<LinkMat> link;     // empty when is_trivial

  const LinkMat& at(int site, int axis) const { return link[site * 3 + axis]; }
  LinkMat& at(int site, int axis) { return link[site * 3 + axis]; }

  static SUnConnection trivial(const TorusLattice&, int n) {
    SUnConnection b;
    b.n = n;
    b.is_trivial = true;
    return b;
  }
};

struct GaugeTransform {
  std::vector<Complex> u;  // unit modulus per site
};

struct SpinorField {
  int n = 1;
  std::vector<SpinorMat> psi;
  double l2 = 0.0;  // cached discrete L2 norm; refreshed by the norm ops below

  static SpinorField zero(const TorusLattice& lat, int n) {
    SpinorField f;
    f.n = n;
    f.psi.assign(lat.sites(), SpinorMat::Zero(2, n));
    return f;
  }

  static SpinorField constant(const TorusLattice& lat, const SpinorMat& value) {
    SpinorField f;
    f.n = static_cast<int>(value.cols());
    f.psi.assign(lat.sites(), value);
    return f;
  }
};

inline double l2_norm(const SpinorField& f, const TorusLattice& lat) {
  double acc = 0.0;
  for (const auto& p : f.psi) acc += p.squaredNorm();
  return std::sqrt(acc * lat.cell_volume());
}

inline void refresh_norm(SpinorField& f, const TorusLattice& lat) { f.l2 = l2_norm(f, lat); }

inline SpinorField normalize(const SpinorField& f, const TorusLattice& lat) {
  double nrm = l2_norm(f, lat);
  if (nrm <= 0.0) throw std::invalid_argument("normalize: zero spinor field");
  SpinorField out = f;
  for (auto& p : out.psi) p /= nrm;
  out.l2 = 1.0;
  return out;
}

inline double sup_norm(const SpinorField& f) {
  double m = 0.0;
  for (const auto& p : f.psi) m = std::max(m, p.norm());
  return m;
}

// link'_j(x) = u(x) link_j(x) u(x+j)^-1,  psi'(x) = u(x) psi(x)
inline std::pair<U1Connection, SpinorField> apply_gauge(const GaugeTransform& g,
                                                        const U1Connection& a,
                                                        const SpinorField& f,
                                                        const TorusLattice& lat) {
  U1Connection a2 = a;
  SpinorField f2 = f;
  for (int s = 0; s < lat.sites(); ++s) {
    for (int ax = 0; ax < 3; ++ax)
      a2.at(s, ax) = g.u[s] * a.at(s, ax) * std::conj(g.u[lat.neighbor(s, ax, +1)]);
    f2.psi[s] = g.u[s] * f.psi[s];
  }
  f2.l2 = f.l2;
  return {std::move(a2), std::move(f2)};
}

// Plaquette planes: m=0 -> (j,k)=(1,2), m=1 -> (2,0), m=2 -> (0,1), eps_{m j k} = +1.
inline void plane_axes(int m, int& j, int& k) {
  j = (m + 1) % 3;
  k = (m + 2) % 3;
}

inline Complex plaquette(const U1Connection& a, const TorusLattice& lat, int site, int j, int k) {
  int sj = lat.neighbor(site, j, +1);
  int sk = lat.neighbor(site, k, +1);
  return a.at(site, j) * a.at(sj, k) * std::conj(a.at(sk, j)) * std::conj(a.at(site, k));
}

// F_m(x) = arg(P_{jk}(x)) / h^2 per plane m. Plaquette angles at the branch cut
// are beyond the discretization's validity and raise BranchCutError.
inline std::vector<TwoForm> curvature(const U1Connection& a, const TorusLattice& lat) {
  std::vector<TwoForm> F(lat.sites());
  double h2 = lat.spacing * lat.spacing;
  const double branch = M_PI * (1.0 - 1e-9);
  for (int s = 0; s < lat.sites(); ++s) {
    for (int m = 0; m < 3; ++m) {
      int j, k;
      plane_axes(m, j, k);
      double ang = std::arg(plaquette(a, lat, s, j, k));
      if (std::abs(ang) >= branch)
        throw BranchCutError("curvature: plaquette angle at the +-pi branch cut");
      F[s].c[m] = ang / h2;
    }
  }
  return F;
}

inline double curvature_l2(const std::vector<TwoForm>& F, const TorusLattice& lat) {
  double acc = 0.0;
  for (const auto& w : F) acc += w.norm2();
  return std::sqrt(acc * lat.cell_volume());
}

inline std::vector<Mat2> mu_field(const SpinorField& f) {
  std::vector<Mat2> out(f.psi.size());
  for (size_t s = 0; s < f.psi.size(); ++s) out[s] = moment_map(f.psi[s]);
  return out;
}

inline double mu_l2(const SpinorField& f, const TorusLattice& lat) {
  double acc = 0.0;
  for (const auto& p : f.psi) acc += moment_map(p).squaredNorm();
  return std::sqrt(acc * lat.cell_volume());
}

// Ordered product of link transporters along a closed site path
// (path[0] == path.back()), inverses on negatively traversed links.
inline Complex loop_holonomy(const U1Connection& a, const std::vector<int>& path,
                             const TorusLattice& lat) {
  if (path.size() < 2 || path.front() != path.back())
    throw std::invalid_argument("loop_holonomy: path must be closed (first == last site)");
  Complex hol(1.0, 0.0);
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    int s = path[i], t = path[i + 1];
    bool stepped = false;
    for (int ax = 0; ax < 3 && !stepped; ++ax) {
      if (lat.neighbor(s, ax, +1) == t) {
        hol *= a.at(s, ax);
        stepped = true;
      } else if (lat.neighbor(s, ax, -1) == t) {
        hol *= std::conj(a.at(t, ax));
        stepped = true;
      }
    }
    if (!stepped) throw std::invalid_argument("loop_holonomy: path is not link-connected");
  }
  return hol;
}

// Straight loop winding once around the given axis through a base site.
inline std::vector<int> axis_loop(const TorusLattice& lat, int base, int axis) {
  std::vector<int> path;
  path.reserve(lat.n_per_axis + 1);
  int s = base;
  path.push_back(s);
  for (int i = 0; i < lat.n_per_axis; ++i) {
    s = lat.neighbor(s, axis, +1);
    path.push_back(s);
  }
  return path;
}

// --- generators and manufactured configurations ---

inline LinkMat expm_antihermitian(const LinkMat& x) {
  // i*x is Hermitian
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Complex(0, 1) * Eigen::MatrixXcd(x));
  Eigen::VectorXcd ph(es.eigenvalues().size());
  for (int i = 0; i < ph.size(); ++i)
    ph[i] = std::exp(Complex(0, -es.eigenvalues()[i]));
  Eigen::MatrixXcd out =
      es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
  return out;
}

// Principal log of a unitary matrix near the identity (series in U - id),
// projected back to su(n).
inline LinkMat logm_unitary(const LinkMat& u) {
  int n = static_cast<int>(u.rows());
  LinkMat e = u - LinkMat::Identity(n, n);
  if (e.norm() > 0.9)
    throw std::domain_error("logm_unitary: matrix too far from the identity");
  LinkMat term = e, acc = e;
  for (int k = 2; k <= 40; ++k) {
    term = term * e;
    acc += (k % 2 == 0 ? -1.0 : 1.0) / k * term;
    if (term.norm() < 1e-18) break;
  }
  LinkMat ah = 0.5 * (acc - acc.adjoint());
  ah -= (ah.trace() / static_cast<double>(n)) * LinkMat::Identity(n, n);
  return ah;
}

inline double max_plaquette_angle_sun(const SUnConnection& b, const TorusLattice& lat) {
  if (b.is_trivial) return 0.0;
  double m = 0.0;
  for (int s = 0; s < lat.sites(); ++s)
    for (int mm = 0; mm < 3; ++mm) {
      int j, k;
      plane_axes(mm, j, k);
      int sj = lat.neighbor(s, j, +1);
      int sk = lat.neighbor(s, k, +1);
      LinkMat p = b.at(s, j) * b.at(sj, k) * b.at(sk, j).adjoint() * b.at(s, k).adjoint();
      m = std::max(m, (p - LinkMat::Identity(b.n, b.n)).norm());
    }
  return m;
}

// Smooth random U(1) links sampling a fixed continuum gauge potential:
// link phase = h * a_j(x) with a_j a low-frequency profile of the given
// amplitude (units 1/length), so refining the mesh keeps the connection.
inline U1Connection random_smooth_u1(const TorusLattice& lat, CounterRng& rng, double amplitude) {
  U1Connection a = U1Connection::trivial(lat);
  int N = lat.n_per_axis;
  for (int ax = 0; ax < 3; ++ax) {
    // three single-frequency modes per axis direction
    double c[3], ph[3];
    int dir[3];
    for (int m = 0; m < 3; ++m) {
      c[m] = amplitude * rng.uniform(-1.0, 1.0);
      ph[m] = rng.uniform(0.0, 2.0 * M_PI);
      dir[m] = static_cast<int>(rng.next_u64() % 3);
    }
    for (int s = 0; s < lat.sites(); ++s) {
      double pot = 0.0;
      for (int m = 0; m < 3; ++m)
        pot += c[m] * std::sin(2.0 * M_PI * lat.coord[s][dir[m]] / N + ph[m]);
      a.at(s, ax) = std::exp(Complex(0.0, lat.spacing * pot));
    }
  }
  return a;
}

// Smooth random SU(n) background with plaquette defect bounded by max_angle.
inline SUnConnection random_smooth_sun(const TorusLattice& lat, int n, CounterRng& rng,
                                       double max_angle = 0.2) {
  SUnConnection b;
  b.n = n;
  if (n == 1) return b;  // SU(1) = {1}
  b.is_trivial = false;
  b.link.assign(static_cast<size_t>(lat.sites()) * 3, LinkMat::Identity(n, n));
  int N = lat.n_per_axis;

  // random anti-Hermitian traceless coefficient matrices for low modes
  auto rand_ah = [&]() {
    LinkMat m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = rng.cnormal();
    LinkMat ah = 0.5 * (m - m.adjoint());
    ah -= (ah.trace() / static_cast<double>(n)) * LinkMat::Identity(n, n);
    return ah;
  };

  struct Mode { LinkMat coef; int dir; double phase; };
  std::vector<std::array<Mode, 2>> modes(3);
  for (int ax = 0; ax < 3; ++ax)
    for (int m = 0; m < 2; ++m)
      modes[ax][m] = {rand_ah(), static_cast<int>(rng.next_u64() % 3),
                      rng.uniform(0.0, 2.0 * M_PI)};

  // link generator = h * (continuum potential); the profile is mesh independent
  double scale = 0.4 / lat.side_length;
  for (int attempt = 0; attempt < 12; ++attempt) {
    for (int s = 0; s < lat.sites(); ++s)
      for (int ax = 0; ax < 3; ++ax) {
        LinkMat gen = LinkMat::Zero(n, n);
        for (const auto& md : modes[ax])
          gen += (scale * lat.spacing) *
                 std::sin(2.0 * M_PI * lat.coord[s][md.dir] / N + md.phase) * md.coef;
        b.at(s, ax) = expm_antihermitian(gen);
      }
    double got = max_plaquette_angle_sun(b, lat);
    if (got <= max_angle) break;
    scale *= 0.8 * max_angle / got;
  }
  return b;
}

// Constant-curvature connection in the given plane with the fundamental torus
// quantization F_{jk} = 2*pi*units/L^2 (eps_{m j k} = +1): Landau gauge plus a
// transition twist on the wrap row, so every plaquette carries the same angle.
inline U1Connection constant_flux_connection(const TorusLattice& lat, int plane, int units) {
  U1Connection a = U1Connection::trivial(lat);
  int j, k;
  plane_axes(plane, j, k);
  int N = lat.n_per_axis;
  double phi = 2.0 * M_PI * units / (static_cast<double>(N) * N);  // plaquette angle
  for (int s = 0; s < lat.sites(); ++s) {
    a.at(s, j) = std::exp(Complex(0.0, -phi * lat.coord[s][k]));
    if (lat.coord[s][k] == N - 1)
      a.at(s, k) = std::exp(Complex(0.0, phi * N * lat.coord[s][j]));
  }
  return a;
}

inline GaugeTransform random_gauge_transform(const TorusLattice& lat, CounterRng& rng) {
  GaugeTransform g;
  g.u.resize(lat.sites());
  for (auto& u : g.u) u = std::exp(Complex(0.0, rng.uniform(0.0, 2.0 * M_PI)));
  return g;
}

inline SpinorField random_spinor_field(const TorusLattice& lat, int n, CounterRng& rng) {
  SpinorField f = SpinorField::zero(lat, n);
  for (auto& p : f.psi)
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < n; ++c) p(r, c) = rng.cnormal();
  refresh_norm(f, lat);
  return f;
}

// Smooth (low-frequency) random spinor field; suitable for stencil-order tests.
inline SpinorField random_smooth_spinor_field(const TorusLattice& lat, int n, CounterRng& rng,
                                              int modes = 3) {
  SpinorField f = SpinorField::zero(lat, n);
  int N = lat.n_per_axis;
  for (int m = 0; m < modes; ++m) {
    SpinorMat coef(2, n);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < n; ++c) coef(r, c) = rng.cnormal();
    int kx = static_cast<int>(rng.next_u64() % 2), ky = static_cast<int>(rng.next_u64() % 2),
        kz = static_cast<int>(rng.next_u64() % 2);
    double ph = rng.uniform(0.0, 2.0 * M_PI);
    for (int s = 0; s < lat.sites(); ++s) {
      double arg = 2.0 * M_PI *
                       (kx * lat.coord[s][0] + ky * lat.coord[s][1] + kz * lat.coord[s][2]) / N +
                   ph;
      f.psi[s] += std::sin(arg) * coef;
    }
  }
  refresh_norm(f, lat);
  return f;
}

}  // namespace swn
