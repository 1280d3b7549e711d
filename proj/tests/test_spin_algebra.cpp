#include <catch2/catch_amalgamated.hpp>

#include "swn/spin_algebra.hpp"
#include "test_util.hpp"

using namespace swn;

TEST_CASE("gamma matrices satisfy the Clifford relations") {
  GammaRep g = make_gamma();

  Mat2 g3;
  g3 << Complex(0, -1), 0, 0, Complex(0, 1);
  REQUIRE((g.gamma[2] - g3).norm() == 0.0);

  for (int j = 0; j < 3; ++j) {
    REQUIRE((g.gamma[j] * g.gamma[j] + Mat2::Identity()).norm() < 1e-15);
    REQUIRE((g.gamma[j] + g.gamma[j].adjoint()).norm() < 1e-15);
    REQUIRE(std::abs(std::abs(g.gamma[j].determinant()) - 1.0) < 1e-15);
    for (int k = 0; k < 3; ++k) {
      if (j == k) continue;
      REQUIRE((g.gamma[j] * g.gamma[k] + g.gamma[k] * g.gamma[j]).norm() < 1e-15);
    }
  }

  // (1/2)[gamma_i, gamma_j] = eps_ijk gamma_k, cyclic
  for (int i = 0; i < 3; ++i) {
    int j = (i + 1) % 3, k = (i + 2) % 3;
    Mat2 comm = 0.5 * (g.gamma[i] * g.gamma[j] - g.gamma[j] * g.gamma[i]);
    REQUIRE((comm - g.gamma[k]).norm() < 1e-15);
  }
}

TEST_CASE("two-form dictionary maps basis elements and inverts") {
  GammaRep g = make_gamma();

  TwoForm e12;
  e12.c = {0.0, 0.0, 1.0};
  REQUIRE((two_form_to_su(e12, g) - g.gamma[2]).norm() < 1e-15);

  TwoForm zero;
  REQUIRE(two_form_to_su(zero, g).norm() == 0.0);

  REQUIRE(su_to_two_form(g.gamma[0], g).c[0] == Catch::Approx(1.0).margin(1e-14));
  REQUIRE(std::abs(su_to_two_form(g.gamma[0], g).c[1]) < 1e-14);
  REQUIRE(std::abs(su_to_two_form(g.gamma[0], g).c[2]) < 1e-14);

  CounterRng rng(2024, 1);
  for (int trial = 0; trial < 200; ++trial) {
    TwoForm w;
    for (auto& c : w.c) c = rng.uniform(-5.0, 5.0);
    TwoForm back = su_to_two_form(two_form_to_su(w, g), g);
    for (int k = 0; k < 3; ++k) REQUIRE(std::abs(back.c[k] - w.c[k]) < 1e-14);

    Mat2 m = testutil::random_antihermitian_traceless(rng);
    Mat2 back_m = two_form_to_su(su_to_two_form(m, g), g);
    REQUIRE((back_m - m).norm() < 1e-14 * (m.norm() + 1.0));
  }
}

TEST_CASE("su_to_two_form rejects malformed input") {
  GammaRep g = make_gamma();
  Mat2 hermitian = pauli(0);  // Hermitian, not anti-Hermitian
  REQUIRE_THROWS_AS(su_to_two_form(hermitian, g), std::invalid_argument);
  Mat2 traceful = Complex(0, 1) * Mat2::Identity();
  REQUIRE_THROWS_AS(su_to_two_form(traceful, g), std::invalid_argument);
}

TEST_CASE("moment map basics") {
  SpinorMat zero = SpinorMat::Zero(2, 3);
  REQUIRE(moment_map(zero).norm() == 0.0);

  SpinorMat unit(2, 1);
  unit << 1.0, 0.0;
  Mat2 expected;
  expected << 0.5, 0, 0, -0.5;
  REQUIRE((moment_map(unit) - expected).norm() < 1e-15);

  // quadratic homogeneity
  CounterRng rng(7, 0);
  SpinorMat psi = testutil::random_spinor(rng, 2);
  REQUIRE((moment_map(3.0 * psi) - 9.0 * moment_map(psi)).norm() <
          1e-12 * moment_map(psi).norm());
}

TEST_CASE("moment map is traceless Hermitian and satisfies <mu(Psi)Psi,Psi> = |mu|^2") {
  CounterRng rng(11, 0);
  for (int n = 1; n <= 4; ++n) {
    for (int trial = 0; trial < 1000; ++trial) {
      SpinorMat psi = testutil::random_spinor(rng, n);
      Mat2 mu = moment_map(psi);
      REQUIRE(is_traceless_hermitian(mu, 1e-12));
      double lhs = re_inner(mu * psi, psi);
      double rhs = mu.squaredNorm();
      REQUIRE(std::abs(lhs - rhs) < 1e-12 * (std::abs(lhs) + std::abs(rhs) + 1.0));
    }
  }
}

TEST_CASE("polarized moment map: diagonal, bilinearity, quadratic identity") {
  CounterRng rng(13, 0);
  for (int n = 1; n <= 4; ++n) {
    for (int trial = 0; trial < 1000; ++trial) {
      SpinorMat psi = testutil::random_spinor(rng, n);
      SpinorMat phi = testutil::random_spinor(rng, n);

      REQUIRE((moment_map_polarized(psi, psi) - moment_map(psi)).norm() <
              1e-13 * (moment_map(psi).norm() + 1.0));
      REQUIRE(moment_map_polarized(phi, SpinorMat::Zero(2, n)).norm() == 0.0);
      REQUIRE((moment_map_polarized(phi, psi) - moment_map_polarized(psi, phi)).norm() < 1e-14);

      // mu(mu(Psi)Psi, Psi) = (1/2)|Psi|^2 mu + mu mu - (1/2) tr(mu mu) id
      Mat2 mu = moment_map(psi);
      Mat2 lhs = moment_map_polarized(mu * psi, psi);
      Mat2 mumu = mu * mu;
      Mat2 rhs = 0.5 * psi.squaredNorm() * mu + mumu - 0.5 * mumu.trace() * Mat2::Identity();
      REQUIRE((lhs - rhs).norm() < 1e-12 * (lhs.norm() + rhs.norm() + 1.0));
    }
  }
}

TEST_CASE("hermitian_as_two_form matches the i su(S) identification") {
  GammaRep g = make_gamma();
  CounterRng rng(17, 0);
  for (int trial = 0; trial < 100; ++trial) {
    SpinorMat psi = testutil::random_spinor(rng, 2);
    Mat2 mu = moment_map(psi);
    TwoForm w = hermitian_as_two_form(mu);
    Mat2 back = Complex(0, 1) * two_form_to_su(w, g);
    REQUIRE((back - mu).norm() < 1e-13 * (mu.norm() + 1.0));
  }
}
