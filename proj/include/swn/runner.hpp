#pragma once

#include <filesystem>
#include <string>

#include "swn/config.hpp"
#include "swn/fueter.hpp"
#include "swn/report.hpp"
#include "swn/snapshot.hpp"
#include "swn/solver.hpp"
#include "swn/stats.hpp"

// Mode dispatch, reproducibility plumbing and report emission. Every run
// leaves a manifest listing the emitted files with content hashes; identical
// config + seed reproduce identical hashes in reference mode.

namespace swn {

namespace detail_runner {

inline Json stage_json(const StageRecord& r) {
  Json j;
  j["alpha"] = r.alpha;
  j["residual"] = r.residual;
  j["energy"] = r.energy;
  j["sup_psi"] = r.sup_psi;
  j["l2_mu"] = r.l2_mu;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  return j;
}

struct Suite {
  std::string name;
  bool pass = false;
  double max_err = 0.0;
};

// Randomized algebraic identity suites (the in-process counterpart of the
// unit tests, reported as machine-readable artifacts).
inline std::vector<Suite> identity_suites(std::uint64_t seed) {
  std::vector<Suite> suites;
  GammaRep g = make_gamma();

  {
    Suite s{"clifford_dictionary", true, 0.0};
    for (int i = 0; i < 3; ++i) {
      s.max_err = std::max(s.max_err, (g.gamma[i] * g.gamma[i] + Mat2::Identity()).norm());
      int j = (i + 1) % 3, k = (i + 2) % 3;
      Mat2 comm = 0.5 * (g.gamma[i] * g.gamma[j] - g.gamma[j] * g.gamma[i]);
      s.max_err = std::max(s.max_err, (comm - g.gamma[k]).norm());
    }
    CounterRng rng(seed, 11);
    for (int t = 0; t < 200; ++t) {
      TwoForm w;
      for (auto& c : w.c) c = rng.uniform(-3, 3);
      TwoForm back = su_to_two_form(two_form_to_su(w, g), g);
      for (int k = 0; k < 3; ++k) s.max_err = std::max(s.max_err, std::abs(back.c[k] - w.c[k]));
    }
    s.pass = s.max_err <= 1e-14;
    suites.push_back(s);
  }

  {
    Suite s{"moment_map_identity", true, 0.0};
    CounterRng rng(seed, 12);
    for (int n = 1; n <= 4; ++n)
      for (int t = 0; t < 1000; ++t) {
        SpinorMat psi(2, n);
        for (int r = 0; r < 2; ++r)
          for (int c = 0; c < n; ++c) psi(r, c) = rng.cnormal();
        Mat2 mu = moment_map(psi);
        double lhs = re_inner(mu * psi, psi);
        double rhs = mu.squaredNorm();
        s.max_err = std::max(s.max_err, std::abs(lhs - rhs) / (std::abs(lhs) + rhs + 1.0));
      }
    s.pass = s.max_err <= 1e-12;
    suites.push_back(s);
  }

  {
    Suite s{"mu_composition_identity", true, 0.0};
    CounterRng rng(seed, 13);
    for (int n = 1; n <= 4; ++n)
      for (int t = 0; t < 1000; ++t) {
        SpinorMat psi(2, n);
        for (int r = 0; r < 2; ++r)
          for (int c = 0; c < n; ++c) psi(r, c) = rng.cnormal();
        Mat2 mu = moment_map(psi);
        Mat2 lhs = moment_map_polarized(mu * psi, psi);
        Mat2 mumu = mu * mu;
        Mat2 rhs = 0.5 * psi.squaredNorm() * mu + mumu - 0.5 * mumu.trace() * Mat2::Identity();
        s.max_err =
            std::max(s.max_err, (lhs - rhs).norm() / (lhs.norm() + rhs.norm() + 1.0));
      }
    s.pass = s.max_err <= 1e-12;
    suites.push_back(s);
  }

  {
    Suite s{"dirac_symmetry", true, 0.0};
    TorusLattice lat = build_lattice(6, 1.0);
    CounterRng rng(seed, 14);
    U1Connection a = random_smooth_u1(lat, rng, 0.8);
    SUnConnection b = random_smooth_sun(lat, 2, rng, 0.2);
    for (int t = 0; t < 5; ++t) {
      SpinorField phi = random_spinor_field(lat, 2, rng);
      SpinorField psi = random_spinor_field(lat, 2, rng);
      auto dphi = dirac(a, b, phi, g, lat);
      auto dpsi = dirac(a, b, psi, g, lat);
      double lhs = re_inner_l2(dphi, psi.psi, lat);
      double rhs = re_inner_l2(phi.psi, dpsi, lat);
      double scale = field_l2(dphi, lat) * l2_norm(psi, lat) +
                     field_l2(dpsi, lat) * l2_norm(phi, lat) + 1.0;
      s.max_err = std::max(s.max_err, std::abs(lhs - rhs) / scale);
    }
    s.pass = s.max_err <= 1e-10;
    suites.push_back(s);
  }

  {
    Suite s{"weitzenbock_refinement", true, 0.0};
    double prev = 0.0;
    bool ok = true;
    for (int N : {8, 16, 32}) {
      TorusLattice lat = build_lattice(N, 1.0);
      CounterRng rng(seed, 15);
      U1Connection a = random_smooth_u1(lat, rng, 0.5);
      SUnConnection b = random_smooth_sun(lat, 2, rng, 0.15);
      SpinorField f = normalize(random_smooth_spinor_field(lat, 2, rng, 3), lat);
      double res = weitzenbock_residual(a, b, f, g, lat);
      if (prev > 0.0 && res > prev / 1.5) ok = false;
      s.max_err = std::max(s.max_err, res);
      prev = res;
    }
    s.pass = ok;
    suites.push_back(s);
  }

  return suites;
}

inline SWState manufacture_initial_state(const RunConfig& cfg, const TorusLattice& lat,
                                         CounterRng& rng) {
  SWState st;
  st.a = cfg.flux_units != 0 ? constant_flux_connection(lat, 2, cfg.flux_units)
                             : U1Connection::trivial(lat);
  U1Connection pert = random_smooth_u1(lat, rng, 0.4);
  for (size_t i = 0; i < st.a.link.size(); ++i) st.a.link[i] *= pert.link[i];
  st.psi = normalize(random_smooth_spinor_field(lat, cfg.n, rng), lat);
  st.alpha = cfg.alpha;
  return st;
}

inline SUnConnection make_background(const RunConfig& cfg, const TorusLattice& lat,
                                     CounterRng& rng) {
  if (cfg.b_background == "random" && cfg.n > 1)
    return random_smooth_sun(lat, cfg.n, rng, cfg.b_max_angle);
  return SUnConnection::trivial(lat, cfg.n);
}

inline Json diagnostics_summary(const SWState& st, const SUnConnection& b, const GammaRep& g,
                                const TorusLattice& lat, int base_point) {
  FrequencyProfile p = frequency(st.a, b, st.psi, st.alpha, base_point, lat, g);
  Json j;
  j["rho"] = p.rho;
  HolderReport hr = holder_seminorm(st.psi, 0.25, lat);
  j["holder_gamma"] = hr.gamma;
  j["holder_seminorm"] = hr.seminorm;
  ZeroSetReport zr = zero_set(st.psi, 0.05 * sup_norm(st.psi), lat);
  j["z_fraction"] = zr.volume_fraction;
  try {
    MonotonicityReport mr = monotonicity_report(p);
    j["monotonicity_c"] = mr.c;
  } catch (const std::invalid_argument&) {
    j["monotonicity_c"] = nullptr;
  }
  auto pairs = growth_law_pairs(p, lat);
  bool pairs_ok = !pairs.empty();
  for (auto [ks, kr] : pairs)
    for (int k = ks; k <= kr && pairs_ok; ++k)
      if (!(p.h_vals[k] > 0.0)) pairs_ok = false;
  j["growth_discrepancy"] = pairs_ok ? Json(growth_law_check(p, pairs)) : Json(nullptr);
  return j;
}

}  // namespace detail_runner

// Exit codes: 0 pass, 1 suite failure, 2 config error, 3 I/O error.
inline int run(const RunConfig& cfg) {
  auto errors = validate(cfg);
  if (!errors.empty()) {
    for (const auto& e : errors) std::fprintf(stderr, "config error: %s\n", e.c_str());
    return 2;
  }
  runtime_threads() = cfg.reference ? 1 : cfg.threads;

  std::filesystem::create_directories(cfg.out_dir);
  std::string config_hash = hex64(fnv1a64(cfg.canonical_text()));
  std::string mode_tag = cfg.reference ? "reference" : ("threads-" + std::to_string(cfg.threads));
  Manifest manifest(cfg.out_dir, config_hash, mode_tag);

  GammaRep g = make_gamma();
  bool pass = true;

  if (cfg.mode == "verify-identities") {
    auto suites = detail_runner::identity_suites(cfg.seed);
    Json j;
    j["suites"] = Json::array();
    for (const auto& s : suites) {
      Json e;
      e["name"] = s.name;
      e["pass"] = s.pass;
      e["max_err"] = s.max_err;
      j["suites"].push_back(e);
      pass = pass && s.pass;
    }
    j["all_pass"] = pass;
    manifest.emit_json("identities.json", j);
  } else if (cfg.mode == "solve") {
    TorusLattice lat = build_lattice(cfg.N, cfg.L);
    CounterRng rng(cfg.seed, 0);
    SUnConnection b = detail_runner::make_background(cfg, lat, rng);
    SWState init = detail_runner::manufacture_initial_state(cfg, lat, rng);
    SWOptions opts;
    opts.max_iters = cfg.max_iters;
    opts.tol = cfg.tol;
    SWState out = solve_fixed_alpha(init, b, g, lat, opts);

    StageRecord rec;
    rec.alpha = out.alpha;
    rec.residual = out.residual;
    rec.energy = 0.5 * sqr(out.residual);
    rec.sup_psi = sup_norm(out.psi);
    rec.l2_mu = mu_l2(out.psi, lat);
    rec.iterations = out.iterations;
    rec.converged = out.converged;
    Json j = detail_runner::stage_json(rec);
    j["curvature_l2"] = curvature_l2(curvature(out.a, lat), lat);
    j["high_band_fraction"] = high_band_fraction(out.psi, lat);
    write_snapshot(cfg.out_dir + "/state.swn", out.a, b, out.psi, out.alpha, lat);
    manifest.record("state.swn");
    manifest.emit_json("solve.json", j);
    pass = out.converged;
  } else if (cfg.mode == "continue") {
    TorusLattice lat = build_lattice(cfg.N, cfg.L);
    CounterRng rng(cfg.seed, 0);
    SUnConnection b = detail_runner::make_background(cfg, lat, rng);
    SWState init = detail_runner::manufacture_initial_state(cfg, lat, rng);
    init.alpha = cfg.schedule.front();
    SWOptions opts;
    opts.max_iters = cfg.max_iters;
    opts.tol = cfg.tol;
    ContinuationTrace trace = continue_alpha(init, cfg.schedule, b, g, lat, opts);

    Json stages = Json::array();
    std::vector<double> lx, ly, sups;
    for (size_t i = 0; i < trace.records.size(); ++i) {
      const auto& r = trace.records[i];
      stages.push_back(detail_runner::stage_json(r));
      std::string name = "stage" + std::to_string(i) + ".swn";
      write_snapshot(cfg.out_dir + "/" + name, trace.states[i].a, b, trace.states[i].psi,
                     trace.states[i].alpha, lat);
      manifest.record(name);
      if (r.l2_mu > 0.0) {
        lx.push_back(std::log(std::tan(r.alpha)));
        ly.push_back(std::log(r.l2_mu));
      }
      sups.push_back(r.sup_psi);
    }
    Json j;
    j["stages"] = stages;
    if (lx.size() >= 2) {
      LineFit fit = fit_line(lx, ly);
      j["mu_trend_slope"] = fit.slope;
    } else {
      j["mu_trend_slope"] = nullptr;
    }
    if (!sups.empty()) {
      double med = median(sups);
      j["sup_psi_median"] = med;
      j["sup_psi_max"] = *std::max_element(sups.begin(), sups.end());
    }
    manifest.emit_json("continue.json", j);
    for (const auto& r : trace.records) pass = pass && r.converged;
  } else if (cfg.mode == "diagnose") {
    Snapshot snap = load_snapshot(cfg.input);
    TorusLattice lat = build_lattice(snap.N, snap.L);
    SWState st;
    st.a = snap.a;
    st.psi = snap.psi;
    st.alpha = snap.alpha;
    CounterRng rng(cfg.seed, 21);
    int base = static_cast<int>(rng.next_u64() % lat.sites());
    FrequencyProfile p = frequency(st.a, snap.b, st.psi, st.alpha, base, lat, g);
    manifest.emit_text("profile.csv", profile_csv(p));
    Json j = detail_runner::diagnostics_summary(st, snap.b, g, lat, base);
    j["base_point"] = base;
    manifest.emit_json("summary.json", j);
    Json extras;
    extras["basepoint_C"] = basepoint_constant_fit(st.psi, lat, 30, cfg.seed);
    extras["high_band_fraction"] = high_band_fraction(st.psi, lat);
    extras["feasible_ratio"] = max_shell_index(lat);
    manifest.emit_json("extras.json", extras);
  } else if (cfg.mode == "fueter") {
    TorusLattice lat = build_lattice(cfg.N, cfg.L);
    int n = std::max(cfg.n, 2);
    CounterRng rng(cfg.seed, 31);
    Json j;

    int hits = 0;
    for (int t = 0; t < 100; ++t) {
      SpinorMat psi(2, n);
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < n; ++c) psi(r, c) = rng.cnormal();
      QuotientPoint p = project_to_zero_set(psi);
      if (quotient_dimension_probe(p) == 4 * n - 4) ++hits;
    }
    j["dimension_probe"] = {{"n", n}, {"expected", 4 * n - 4}, {"hits_of_100", hits}};

    auto gen = z2_generator_path(400);
    Complex hol = canonical_transport(gen, gen[0]);
    j["loop_holonomies"] = {{"z2_generator_re", hol.real()}, {"z2_generator_im", hol.imag()}};

    SectionOfM constant;
    SpinorMat q0(2, 2);
    q0 << 1.0 / std::sqrt(2.0), 0, 0, 1.0 / std::sqrt(2.0);
    SpinorMat rep0 = q0;
    constant.rep.assign(lat.sites(), rep0);
    j["fueter_residual"] = fueter_residual(constant, g, lat);

    SectionOfM winding;
    winding.rep.resize(lat.sites());
    for (int s = 0; s < lat.sites(); ++s) {
      double t = M_PI * lat.coord[s][0] / lat.n_per_axis;
      SpinorMat m(2, 2);
      m << std::exp(Complex(0, t)) / std::sqrt(2.0), 0, 0, std::exp(Complex(0, -t)) / std::sqrt(2.0);
      winding.rep[s] = m;
    }
    LiftReport lr = lift_section(winding, lat);
    j["flatness_sup"] = lr.flatness_sup;
    j["torus_holonomy_re"] = {lr.torus_holonomy[0].real(), lr.torus_holonomy[1].real(),
                              lr.torus_holonomy[2].real()};
    pass = hits >= 99 && std::abs(hol - Complex(-1, 0)) < 1e-6 &&
           double(j["fueter_residual"]) <= 1e-10 && lr.flatness_sup <= 1e-8 &&
           std::abs(lr.torus_holonomy[0] - Complex(-1, 0)) < 1e-6;
    manifest.emit_json("fueter.json", j);
  }

  manifest.write();
  return pass ? 0 : 1;
}

}  // namespace swn
