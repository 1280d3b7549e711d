#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <vector>

#include "swn/dirac.hpp"
#include "swn/gauge_field.hpp"
#include "swn/lattice.hpp"
#include "swn/solver.hpp"
#include "swn/stats.hpp"

// Frequency-function machinery as computable diagnostics:
//
//   h_x(r) = int_{dB_r} |Psi|^2
//   H_x(r) = int_{B_r} |grad_{A x B} Psi|^2 + tan(alpha)^-2 |mu(Psi)|^2
//   n_x(r) = r H_x(r) / h_x(r)   where h > 0
//   rho(x) = sup { r <= r_max : r^(1/2) ||F_A||_{L2(B_r)} <= 1 }
//
// alpha = 0 is the limit convention: H keeps only the gradient term and the
// mu-norm is asserted separately. Radii are shell radii only.

namespace swn {

struct FrequencyProfile {
  int center = 0;
  double alpha = 0.0;
  std::vector<double> radii;    // shell radii k h, k >= 1
  std::vector<double> h_vals;
  std::vector<double> H_vals;
  std::vector<double> n_vals;   // meaningful where n_defined
  std::vector<bool> n_defined;
  double rho = 0.0;
};

inline std::vector<double> compute_h(const SpinorField& psi, int x, const TorusLattice& lat) {
  ShellDecomposition sd = build_shells(lat, x);
  int K = max_shell_index(lat);
  double h2 = sqr(lat.spacing);
  std::vector<double> out(K);  // radii k=1..K
  for (int k = 1; k <= K; ++k) {
    double acc = 0.0;
    for (int s : sd.members[k]) acc += psi.psi[s].squaredNorm();
    out[k - 1] = acc * h2;
  }
  return out;
}

inline std::vector<double> frequency_integrand(const U1Connection& a, const SUnConnection& b,
                                               const SpinorField& psi, double alpha,
                                               const TorusLattice& lat) {
  auto grad = covariant_derivative(a, b, psi, lat);
  double cot2 = alpha == 0.0 ? 0.0 : std::pow(std::tan(alpha), -2.0);
  std::vector<double> w(lat.sites());
  for (int s = 0; s < lat.sites(); ++s) {
    double g2 = 0.0;
    for (int ax = 0; ax < 3; ++ax) g2 += grad[ax][s].squaredNorm();
    w[s] = g2 + (cot2 == 0.0 ? 0.0 : cot2 * moment_map(psi.psi[s]).squaredNorm());
  }
  return w;
}

inline std::vector<double> compute_H(const U1Connection& a, const SUnConnection& b,
                                     const SpinorField& psi, double alpha, int x,
                                     const TorusLattice& lat, const GammaRep&) {
  std::vector<double> w = frequency_integrand(a, b, psi, alpha, lat);
  ShellDecomposition sd = build_shells(lat, x);
  int K = max_shell_index(lat);
  double vol = lat.cell_volume();
  std::vector<double> out(K);
  double cumulative = 0.0;
  for (int s : sd.members[0]) cumulative += w[s] * vol;
  for (int k = 1; k <= K; ++k) {
    for (int s : sd.members[k]) cumulative += w[s] * vol;
    out[k - 1] = cumulative;
  }
  return out;
}

inline double critical_radius(const U1Connection& a, int x, const TorusLattice& lat) {
  auto F = curvature(a, lat);
  std::vector<double> f2(lat.sites());
  for (int s = 0; s < lat.sites(); ++s) f2[s] = F[s].norm2();
  ShellDecomposition sd = build_shells(lat, x);
  int K = max_shell_index(lat);
  double vol = lat.cell_volume();
  double cumulative = 0.0;
  for (int s : sd.members[0]) cumulative += f2[s] * vol;
  double rho = 0.0;
  for (int k = 1; k <= K; ++k) {
    for (int s : sd.members[k]) cumulative += f2[s] * vol;
    double r = sd.radii[k];
    if (std::sqrt(r) * std::sqrt(cumulative) <= 1.0) rho = r;
    else break;  // r^(1/2) ||F|| is nondecreasing in r
  }
  return rho;
}

inline FrequencyProfile frequency(const U1Connection& a, const SUnConnection& b,
                                  const SpinorField& psi, double alpha, int x,
                                  const TorusLattice& lat, const GammaRep& g) {
  FrequencyProfile p;
  p.center = x;
  p.alpha = alpha;
  int K = max_shell_index(lat);
  p.radii.resize(K);
  for (int k = 1; k <= K; ++k) p.radii[k - 1] = k * lat.spacing;
  p.h_vals = compute_h(psi, x, lat);
  p.H_vals = compute_H(a, b, psi, alpha, x, lat, g);
  p.n_vals.assign(K, 0.0);
  p.n_defined.assign(K, false);
  for (int k = 0; k < K; ++k)
    if (p.h_vals[k] > 0.0) {
      p.n_vals[k] = p.radii[k] * p.H_vals[k] / p.h_vals[k];
      p.n_defined[k] = true;
    }
  p.rho = critical_radius(a, x, lat);
  return p;
}

struct MonotonicityReport {
  double c = 0.0;
  bool capped = false;
  std::vector<std::pair<int, int>> violations;  // radius indices (s, r) at the returned c
};

// Smallest c >= 0 (bisection to 1e-3) with
//   n(s) <= exp(c (r^2 - s^2)) n(r) + c (r^2 - s^2)  for all shell pairs s < r.
inline MonotonicityReport monotonicity_report(const FrequencyProfile& p, double c_cap = 1e6) {
  std::vector<int> valid;
  for (size_t k = 0; k < p.radii.size(); ++k)
    if (p.n_defined[k]) valid.push_back(static_cast<int>(k));
  if (valid.size() < 3)
    throw std::invalid_argument("monotonicity_report: fewer than 3 radii with h > 0");

  auto violations_at = [&](double c) {
    std::vector<std::pair<int, int>> out;
    for (size_t i = 0; i < valid.size(); ++i)
      for (size_t j = i + 1; j < valid.size(); ++j) {
        int ks = valid[i], kr = valid[j];
        double d2 = sqr(p.radii[kr]) - sqr(p.radii[ks]);
        double bound = std::exp(c * d2) * p.n_vals[kr] + c * d2;
        if (p.n_vals[ks] > bound * (1.0 + 1e-12) + 1e-15) out.emplace_back(ks, kr);
      }
    return out;
  };

  MonotonicityReport rep;
  if (violations_at(0.0).empty()) {
    rep.c = 0.0;
    return rep;
  }
  double hi = 1.0;
  while (hi < c_cap && !violations_at(hi).empty()) hi *= 2.0;
  if (hi >= c_cap) {
    rep.c = c_cap;
    rep.capped = true;
    rep.violations = violations_at(c_cap);
    return rep;
  }
  double lo = hi / 2.0;
  while (hi - lo > 1e-3) {
    double mid = 0.5 * (lo + hi);
    if (violations_at(mid).empty()) hi = mid;
    else lo = mid;
  }
  rep.c = hi;
  return rep;
}

// max over pairs of | log h(r) - log[(r/s)^2 exp(2 int_s^r n/t dt) h(s)] |,
// trapezoid quadrature on shell radii.
inline double growth_law_check(const FrequencyProfile& p,
                               const std::vector<std::pair<int, int>>& pairs) {
  double worst = 0.0;
  for (auto [ks, kr] : pairs) {
    if (ks > kr) std::swap(ks, kr);
    for (int k = ks; k <= kr; ++k)
      if (!(p.h_vals[k] > 0.0))
        throw std::invalid_argument("growth_law_check: h vanishes on the pair range");
    if (ks == kr) continue;  // trivial pair, discrepancy 0
    double integral = 0.0;
    for (int k = ks; k < kr; ++k) {
      double f0 = p.n_vals[k] / p.radii[k];
      double f1 = p.n_vals[k + 1] / p.radii[k + 1];
      integral += 0.5 * (f0 + f1) * (p.radii[k + 1] - p.radii[k]);
    }
    double log_rhs = 2.0 * std::log(p.radii[kr] / p.radii[ks]) + 2.0 * integral +
                     std::log(p.h_vals[ks]);
    worst = std::max(worst, std::abs(std::log(p.h_vals[kr]) - log_rhs));
  }
  return worst;
}

// default pair set: shell radii with s_min_shells * h <= s < r <= r_max/2
// (the smallest shells carry too much bin noise to compare against r^2 laws)
inline std::vector<std::pair<int, int>> growth_law_pairs(const FrequencyProfile& p,
                                                         const TorusLattice& lat,
                                                         int s_min_shells = 3) {
  std::vector<std::pair<int, int>> pairs;
  double rmax_half = lat.side_length / 4.0;
  for (size_t i = static_cast<size_t>(s_min_shells) - 1; i < p.radii.size(); ++i)
    for (size_t j = i + 1; j < p.radii.size(); ++j) {
      if (p.radii[j] > rmax_half) break;
      pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  return pairs;
}

struct HolderReport {
  double gamma = 0.25;
  double seminorm = 0.0;
  int witness_a = 0;
  int witness_b = 0;
};

// max over sampled pairs of | |psi|(x) - |psi|(y) | / d(x,y)^gamma; all
// nearest-neighbor pairs plus a seeded random pair sample.
inline HolderReport holder_seminorm(const SpinorField& psi, double gamma_exp,
                                    const TorusLattice& lat, int pair_budget = 20000,
                                    std::uint64_t seed = 1) {
  if (!(gamma_exp > 0.0 && gamma_exp <= 1.0))
    throw std::invalid_argument("holder_seminorm: gamma must lie in (0, 1]");
  HolderReport rep;
  rep.gamma = gamma_exp;
  std::vector<double> amp(lat.sites());
  for (int s = 0; s < lat.sites(); ++s) amp[s] = psi.psi[s].norm();

  auto consider = [&](int x, int y) {
    if (x == y) return;
    double q = std::abs(amp[x] - amp[y]) / std::pow(lat.distance(x, y), gamma_exp);
    if (q > rep.seminorm) {
      rep.seminorm = q;
      rep.witness_a = x;
      rep.witness_b = y;
    }
  };

  for (int s = 0; s < lat.sites(); ++s)
    for (int ax = 0; ax < 3; ++ax) consider(s, lat.neighbor(s, ax, +1));
  CounterRng rng(seed, 99);
  for (int t = 0; t < pair_budget; ++t)
    consider(static_cast<int>(rng.next_u64() % lat.sites()),
             static_cast<int>(rng.next_u64() % lat.sites()));
  return rep;
}

struct ZeroSetReport {
  double threshold = 0.0;
  std::vector<int> sites;        // the sublevel set
  double volume_fraction = 0.0;
  bool complement_connected = false;
};

// Sublevel set |psi| <= threshold; the nowhere-dense proxy asks the complement
// to be nonempty and 6-connected.
inline ZeroSetReport zero_set(const SpinorField& psi, double threshold, const TorusLattice& lat) {
  if (threshold < 0.0) throw std::invalid_argument("zero_set: threshold must be >= 0");
  ZeroSetReport rep;
  rep.threshold = threshold;
  std::vector<char> in_z(lat.sites(), 0);
  for (int s = 0; s < lat.sites(); ++s)
    if (psi.psi[s].norm() <= threshold) {
      in_z[s] = 1;
      rep.sites.push_back(s);
    }
  rep.volume_fraction = static_cast<double>(rep.sites.size()) / lat.sites();

  int first = -1;
  for (int s = 0; s < lat.sites(); ++s)
    if (!in_z[s]) {
      first = s;
      break;
    }
  if (first < 0) {
    rep.complement_connected = false;  // fully degenerate state
    return rep;
  }
  std::vector<char> seen(lat.sites(), 0);
  std::queue<int> frontier;
  frontier.push(first);
  seen[first] = 1;
  int reached = 0;
  while (!frontier.empty()) {
    int s = frontier.front();
    frontier.pop();
    ++reached;
    for (int ax = 0; ax < 3; ++ax)
      for (int dir : {+1, -1}) {
        int t = lat.neighbor(s, ax, dir);
        if (!in_z[t] && !seen[t]) {
          seen[t] = 1;
          frontier.push(t);
        }
      }
  }
  rep.complement_connected = (reached == lat.sites() - static_cast<int>(rep.sites.size()));
  return rep;
}

struct ConvergenceReport {
  std::vector<double> h_dev;  // sup_r |h_i - h_last| per stage
  std::vector<double> H_dev;
  bool tail_nonincreasing = false;
};

// Cauchy-trend proxy for Prop-style uniform convergence of h_i, H_i along a
// continuation trace, measured against the final stage.
inline ConvergenceReport uniform_convergence_experiment(const ContinuationTrace& trace, int x,
                                                        const SUnConnection& b,
                                                        const GammaRep& g,
                                                        const TorusLattice& lat) {
  std::vector<const SWState*> conv;
  for (const auto& st : trace.states)
    if (st.converged) conv.push_back(&st);
  if (conv.size() < 3)
    throw std::invalid_argument("uniform_convergence_experiment: need >= 3 converged stages");

  std::vector<std::vector<double>> hs, Hs;
  for (const SWState* st : conv) {
    hs.push_back(compute_h(st->psi, x, lat));
    Hs.push_back(compute_H(st->a, b, st->psi, st->alpha, x, lat, g));
  }
  ConvergenceReport rep;
  size_t last = conv.size() - 1;
  for (size_t i = 0; i < conv.size(); ++i) {
    double dh = 0.0, dH = 0.0;
    for (size_t k = 0; k < hs[i].size(); ++k) {
      dh = std::max(dh, std::abs(hs[i][k] - hs[last][k]));
      dH = std::max(dH, std::abs(Hs[i][k] - Hs[last][k]));
    }
    rep.h_dev.push_back(dh);
    rep.H_dev.push_back(dH);
  }
  rep.tail_nonincreasing = true;
  size_t half = conv.size() / 2;
  for (size_t i = half; i + 1 < conv.size(); ++i) {
    if (rep.h_dev[i + 1] > rep.h_dev[i] * (1.0 + 1e-9) + 1e-12) rep.tail_nonincreasing = false;
    if (rep.H_dev[i + 1] > rep.H_dev[i] * (1.0 + 1e-9) + 1e-12) rep.tail_nonincreasing = false;
  }
  return rep;
}

struct PointValueReport {
  double spearman_amp_rho = 0.0;       // pooled over states and base points
  double spearman_n_rho = 0.0;         // n at the largest feasible radius vs rho
  std::vector<double> per_state_amp_rho;
  int feasible_ratio = 0;              // shells available in place of the factor 50
  bool pass = false;
};

// Correlation shadows of the "curvature controls Psi / n controls rho" chain:
// larger |Psi|(x) should not pair with smaller rho(x) (rank correlation >= 0),
// and small frequency at the largest feasible radius should pair with large
// rho. The paper-scale factor 50 exceeds any torus ball; K shells is what fits.
inline PointValueReport frequency_vs_pointvalue_check(const std::vector<SWState>& states,
                                                      const std::vector<int>& base_points,
                                                      const SUnConnection& b, const GammaRep& g,
                                                      const TorusLattice& lat) {
  PointValueReport rep;
  rep.feasible_ratio = max_shell_index(lat);
  std::vector<double> amp_all, rho_all, n_all, rho_for_n;
  for (const auto& st : states) {
    if (!st.converged) continue;
    std::vector<double> amp_s, rho_s;
    for (int x : base_points) {
      double amp = st.psi.psi[x].norm();
      double rho = critical_radius(st.a, x, lat);
      amp_s.push_back(amp);
      rho_s.push_back(rho);
      amp_all.push_back(amp);
      rho_all.push_back(rho);
      FrequencyProfile p = frequency(st.a, b, st.psi, st.alpha, x, lat, g);
      if (!p.n_defined.empty() && p.n_defined.back()) {
        n_all.push_back(p.n_vals.back());
        rho_for_n.push_back(rho);
      }
    }
    if (amp_s.size() >= 2) rep.per_state_amp_rho.push_back(spearman(amp_s, rho_s));
  }
  if (amp_all.size() >= 2) rep.spearman_amp_rho = spearman(amp_all, rho_all);
  if (n_all.size() >= 2) rep.spearman_n_rho = spearman(n_all, rho_for_n);
  rep.pass = rep.spearman_amp_rho >= 0.0;
  return rep;
}

// Fitted lattice constant for the base-point comparison
//   h_x(r) <= C ((2r + d)/r) h_y(2r + d);
// recorded, never asserted against a paper value.
inline double basepoint_constant_fit(const SpinorField& psi, const TorusLattice& lat,
                                     int samples = 40, std::uint64_t seed = 5) {
  CounterRng rng(seed, 44);
  int K = max_shell_index(lat);
  double h = lat.spacing;
  double c_fit = 0.0;
  for (int t = 0; t < samples; ++t) {
    int x = static_cast<int>(rng.next_u64() % lat.sites());
    // y near x so that 2r + d stays inside the shell grid
    auto cx = lat.coord[x];
    int y = lat.index(cx[0] + static_cast<int>(rng.next_u64() % 3) - 1,
                      cx[1] + static_cast<int>(rng.next_u64() % 3) - 1,
                      cx[2] + static_cast<int>(rng.next_u64() % 3) - 1);
    auto hx = compute_h(psi, x, lat);
    auto hy = compute_h(psi, y, lat);
    double d = lat.distance(x, y);
    for (int kr = 1; kr <= K; ++kr) {
      double r = kr * h;
      int kbig = static_cast<int>(std::ceil((2.0 * r + d) / h - 1e-9));
      if (kbig > K) break;
      double big = hy[kbig - 1];
      if (big <= 0.0 || hx[kr - 1] <= 0.0) continue;
      double ratio = hx[kr - 1] * r / ((2.0 * r + d) * big);
      c_fit = std::max(c_fit, ratio);
    }
  }
  return c_fit;
}

}  // namespace swn
