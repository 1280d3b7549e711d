#include <catch2/catch_amalgamated.hpp>

#include "swn/solver.hpp"
#include "test_util.hpp"

using namespace swn;

namespace {

SpinorField manufactured_constant(const TorusLattice& lat) {
  SpinorMat c(2, 2);
  c << 1.0, 0.0, 0.0, 1.0;
  return normalize(SpinorField::constant(lat, c), lat);
}

}  // namespace

TEST_CASE("residual: manufactured solution is exact, parts reassemble the norm") {
  GammaRep g = make_gamma();
  TorusLattice lat = build_lattice(6, 1.0);
  U1Connection a = U1Connection::trivial(lat);
  SUnConnection b = SUnConnection::trivial(lat, 2);
  SpinorField f = manufactured_constant(lat);

  for (double alpha : {M_PI / 2, M_PI / 4, M_PI / 16})
    REQUIRE(residual_parts(a, f, alpha, b, g, lat).norm <= 1e-12);

  CounterRng rng(71, 0);
  U1Connection ar = random_smooth_u1(lat, rng, 1.0);
  SpinorField fr = normalize(random_spinor_field(lat, 2, rng), lat);
  ResidualParts parts = residual_parts(ar, fr, 0.7, b, g, lat);
  double acc = 0.0;
  for (int s = 0; s < lat.sites(); ++s)
    acc += parts.dirac_part[s].squaredNorm() + parts.curvature_part[s].norm2();
  REQUIRE(parts.norm == Catch::Approx(std::sqrt(acc * lat.cell_volume())).epsilon(1e-12));
  REQUIRE(energy(ar, fr, 0.7, b, g, lat) == Catch::Approx(0.5 * sqr(parts.norm)).epsilon(1e-12));

  REQUIRE_THROWS_AS(residual_parts(ar, fr, 0.0, b, g, lat), std::invalid_argument);
}

TEST_CASE("residual norm and energy are gauge invariant") {
  GammaRep g = make_gamma();
  TorusLattice lat = build_lattice(5, 1.0);
  CounterRng rng(73, 0);
  U1Connection a = random_smooth_u1(lat, rng, 1.0);
  SUnConnection b = random_smooth_sun(lat, 2, rng, 0.2);
  SpinorField f = normalize(random_spinor_field(lat, 2, rng), lat);

  double e0 = energy(a, f, 0.6, b, g, lat);
  for (int trial = 0; trial < 5; ++trial) {
    GaugeTransform gt = random_gauge_transform(lat, rng);
    auto [a2, f2] = apply_gauge(gt, a, f, lat);
    REQUIRE(energy(a2, f2, 0.6, b, g, lat) == Catch::Approx(e0).epsilon(1e-10));
  }
}

TEST_CASE("coordinate gradient matches central finite differences") {
  GammaRep g = make_gamma();
  TorusLattice lat = build_lattice(4, 1.0);
  CounterRng rng(79, 0);

  for (int n : {1, 2}) {
    U1Connection a = random_smooth_u1(lat, rng, 1.2);
    SUnConnection b = n == 1 ? SUnConnection::trivial(lat, 1)
                             : random_smooth_sun(lat, n, rng, 0.2);
    SpinorField f = random_spinor_field(lat, n, rng);  // unconstrained for the FD check
    double alpha = 0.9;

    ResidualParts parts = residual_parts(a, f, alpha, b, g, lat);
    auto grad = detail::sw_gradient(a, f, alpha, b, g, lat, parts);

    auto energy_at = [&](const U1Connection& ac, const SpinorField& fc) {
      return energy(ac, fc, alpha, b, g, lat);
    };

    double eps = 1e-6;
    for (int probe = 0; probe < 12; ++probe) {
      size_t li = rng.next_u64() % a.link.size();
      U1Connection ap = a, am = a;
      ap.link[li] *= std::exp(Complex(0, eps));
      am.link[li] *= std::exp(Complex(0, -eps));
      double fd = (energy_at(ap, f) - energy_at(am, f)) / (2 * eps);
      REQUIRE(grad.theta[li] == Catch::Approx(fd).margin(1e-5).epsilon(1e-4));
    }
    for (int probe = 0; probe < 12; ++probe) {
      int site = static_cast<int>(rng.next_u64() % lat.sites());
      int row = static_cast<int>(rng.next_u64() % 2);
      int col = static_cast<int>(rng.next_u64() % n);
      for (Complex dir : {Complex(1, 0), Complex(0, 1)}) {
        SpinorField fp = f, fm = f;
        fp.psi[site](row, col) += eps * dir;
        fm.psi[site](row, col) -= eps * dir;
        double fd = (energy_at(a, fp) - energy_at(a, fm)) / (2 * eps);
        double an = (dir.real() != 0.0) ? grad.psi[site](row, col).real()
                                        : grad.psi[site](row, col).imag();
        REQUIRE(an == Catch::Approx(fd).margin(1e-5).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("solve_fixed_alpha accepts the manufactured solution immediately") {
  GammaRep g = make_gamma();
  TorusLattice lat = build_lattice(6, 1.0);
  SUnConnection b = SUnConnection::trivial(lat, 2);
  SWState init;
  init.a = U1Connection::trivial(lat);
  init.psi = manufactured_constant(lat);
  init.alpha = M_PI / 4;
  SWState out = solve_fixed_alpha(init, b, make_gamma(), lat);
  REQUIRE(out.converged);
  REQUIRE(out.iterations == 0);
  REQUIRE(out.residual <= 1e-12);
}

TEST_CASE("solver descends from a random start and the accepted energies decrease") {
  GammaRep g = make_gamma();
  TorusLattice lat = build_lattice(6, 1.0);
  CounterRng rng(83, 0);
  SUnConnection b = SUnConnection::trivial(lat, 2);

  SWState init;
  init.a = random_smooth_u1(lat, rng, 0.6);
  init.psi = normalize(random_smooth_spinor_field(lat, 2, rng), lat);
  init.alpha = M_PI / 4;

  SWOptions opts;
  opts.max_iters = 400;
  opts.tol = 1e-6;
  opts.coulomb_exit = false;

  double e0 = energy(init.a, init.psi, init.alpha, b, g, lat);
  SWState out = solve_fixed_alpha(init, b, g, lat, opts);
  double e1 = energy(out.a, out.psi, out.alpha, b, g, lat);
  REQUIRE(e1 < e0);
  REQUIRE(out.residual == Catch::Approx(std::sqrt(2 * e1)).epsilon(1e-10));
}

TEST_CASE("alpha = pi/2 drives the curvature to zero from a random start") {
  GammaRep g = make_gamma();
  TorusLattice lat = build_lattice(8, 1.0);
  CounterRng rng(89, 0);
  SUnConnection b = SUnConnection::trivial(lat, 2);

  SWState init;
  init.a = random_smooth_u1(lat, rng, 0.5);
  init.psi = normalize(random_smooth_spinor_field(lat, 2, rng), lat);
  init.alpha = M_PI / 2;

  SWOptions opts;
  opts.max_iters = 600;
  SWState out = solve_fixed_alpha(init, b, g, lat, opts);
  auto F = curvature(out.a, lat);
  REQUIRE(curvature_l2(F, lat) <= 1e-8);
  REQUIRE(l2_norm(out.psi, lat) == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("continuation: fixed point stage, constant solution persists, validation") {
  GammaRep g = make_gamma();
  TorusLattice lat = build_lattice(6, 1.0);
  SUnConnection b = SUnConnection::trivial(lat, 2);

  SWState start;
  start.a = U1Connection::trivial(lat);
  start.psi = manufactured_constant(lat);
  start.alpha = M_PI / 4;

  ContinuationTrace one = continue_alpha(start, {M_PI / 4}, b, g, lat);
  REQUIRE(one.states.size() == 1);
  REQUIRE(one.records[0].converged);
  REQUIRE(one.records[0].residual <= 1e-6);

  ContinuationTrace tr = continue_alpha(start, {M_PI / 4, M_PI / 8, M_PI / 16}, b, g, lat);
  REQUIRE(tr.states.size() == 3);
  for (const auto& rec : tr.records) {
    REQUIRE(rec.converged);
    REQUIRE(rec.residual <= 1e-6);
  }

  REQUIRE_THROWS_AS(continue_alpha(start, {M_PI / 4, M_PI / 2}, b, g, lat),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(continue_alpha(start, {}, b, g, lat), std::invalid_argument);
}
