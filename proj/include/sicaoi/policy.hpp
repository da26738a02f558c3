#ifndef SICAOI_POLICY_HPP
#define SICAOI_POLICY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sicaoi/config.hpp"
#include "sicaoi/numeric.hpp"
#include "sicaoi/parallel.hpp"
#include "sicaoi/sic.hpp"

namespace sicaoi {

/// Slot length for target SNIR gamma: overhead plus packet airtime at
/// spectral efficiency log2(1 + gamma).
inline double slot_duration(double gamma, const SystemConfig& cfg) {
  if (!(gamma > 0.0)) throw std::invalid_argument("slot_duration: gamma must be positive");
  return cfg.T_oh_s + cfg.L_bits / (cfg.W_Hz * std::log2(1.0 + gamma));
}

/// Slot length when nobody is backlogged.
inline double idle_slot_duration(const SystemConfig& cfg) { return cfg.T_oh_s; }

enum class PolicyKind { closed_form, optimized_table, constant };

inline const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::closed_form: return "closed_form";
    case PolicyKind::optimized_table: return "optimized_table";
    case PolicyKind::constant: return "constant";
  }
  return "unknown";
}

/// Per-backlog-count access parameters, indexed by k = 0..n. Index 0 holds
/// the idle-slot convention p_0 = 0, T_0 = T_oh (gamma_0 is unused and set
/// to gamma_max).
struct AccessPolicy {
  PolicyKind kind = PolicyKind::closed_form;
  std::vector<double> p, gamma, T;
  std::int64_t k_c = 0;
  double a_gamma = 0.0;
  double b_gamma = 0.0;
  double a_D = 0.0;

  std::size_t n() const { return p.empty() ? 0 : p.size() - 1; }

  bool operator==(const AccessPolicy&) const = default;
};

inline void fill_slot_times(AccessPolicy& policy, const SystemConfig& cfg) {
  policy.T.assign(policy.p.size(), 0.0);
  policy.T[0] = idle_slot_duration(cfg);
  for (std::size_t k = 1; k < policy.p.size(); ++k) policy.T[k] = slot_duration(policy.gamma[k], cfg);
}

/// p_k = 1/k, gamma_k = gamma_max below k_c; p_k = 1, gamma_k =
/// 1/(a_gamma k + b_gamma) (capped at gamma_max) from k_c on.
inline AccessPolicy closed_form_policy(const SystemConfig& cfg, std::int64_t k_c, double a_gamma, double b_gamma) {
  if (k_c < 1) throw std::invalid_argument("closed_form_policy: k_c must be >= 1");
  const std::size_t n = static_cast<std::size_t>(cfg.n);
  AccessPolicy pol;
  pol.kind = PolicyKind::closed_form;
  pol.k_c = k_c;
  pol.a_gamma = a_gamma;
  pol.b_gamma = b_gamma;
  pol.p.assign(n + 1, 0.0);
  pol.gamma.assign(n + 1, cfg.gamma_max);
  for (std::size_t k = 1; k <= n; ++k) {
    if (static_cast<std::int64_t>(k) < k_c) {
      pol.p[k] = 1.0 / static_cast<double>(k);
    } else {
      const double denom = a_gamma * static_cast<double>(k) + b_gamma;
      if (!(denom > 0.0)) throw std::invalid_argument("closed_form_policy: a_gamma k + b_gamma must be positive");
      pol.p[k] = 1.0;
      pol.gamma[k] = std::min(cfg.gamma_max, 1.0 / denom);
    }
  }
  fill_slot_times(pol, cfg);
  return pol;
}

/// k-independent (p, gamma); used to freeze the policy in oracle tests.
/// p = 0 is accepted here to model a dead channel.
inline AccessPolicy constant_policy(const SystemConfig& cfg, double p, double gamma) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("constant_policy: p outside [0,1]");
  if (!(gamma > 0.0)) throw std::invalid_argument("constant_policy: gamma must be positive");
  const std::size_t n = static_cast<std::size_t>(cfg.n);
  AccessPolicy pol;
  pol.kind = PolicyKind::constant;
  pol.p.assign(n + 1, p);
  pol.p[0] = 0.0;
  pol.gamma.assign(n + 1, gamma);
  fill_slot_times(pol, cfg);
  return pol;
}

/// Mean number of packets decoded per slot with k backlogged nodes, each
/// transmitting with probability p at target SNIR gamma.
inline double decoded_per_slot(std::size_t k, double p, double gamma, const SicProfile& profile) {
  if (k == 0 || p == 0.0) return 0.0;
  const auto pmf = numeric::binomial_pmf(k, p);
  double total = 0.0;
  for (std::size_t h = 1; h <= k; ++h) total += pmf[h] * profile.mean_decoded(h, gamma);
  return total;
}

/// Sum-rate U_k(p, gamma) in bit/s/Hz.
inline double sum_rate(std::size_t k, double p, double gamma, const SicProfile& profile) {
  if (k == 0 || k > profile.max_h()) throw std::invalid_argument("sum_rate: k outside [1, n]");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sum_rate: p outside [0,1]");
  return std::log2(1.0 + gamma) * decoded_per_slot(k, p, gamma, profile);
}

struct PolicyPoint {
  std::size_t k = 0;
  double p = 0.0;
  double gamma = 0.0;
  double U = 0.0;
  double D = 0.0;  // mean decoded per slot at (p, gamma)
};

/// Search space for the sum-rate maximisation. gamma values must be a
/// subset-compatible ascending list inside the profile hull.
struct OptimizerGrid {
  std::vector<double> p_values;
  std::vector<double> gamma_values;
  bool refine = true;
};

inline OptimizerGrid default_optimizer_grid(const SystemConfig& cfg, const SicProfile& profile) {
  OptimizerGrid grid;
  const auto np = static_cast<std::size_t>(cfg.p_points);
  grid.p_values.resize(np);
  for (std::size_t i = 0; i < np; ++i) grid.p_values[i] = static_cast<double>(i + 1) / static_cast<double>(np);
  for (double g : profile.gamma_grid())
    if (g <= cfg.gamma_max * (1.0 + 1e-12)) grid.gamma_values.push_back(g);
  return grid;
}

/// Exhaustive grid argmax of U_k over p x gamma, ties broken toward larger
/// gamma and then larger p. With grid.refine, the winner is polished by
/// alternating golden-section searches on log(gamma) and p inside the
/// neighbouring grid cells (the grid point itself stays a candidate).
inline PolicyPoint optimize_policy(std::size_t k, const SicProfile& profile, double gamma_max,
                                   const OptimizerGrid& grid) {
  if (grid.p_values.empty() || grid.gamma_values.empty()) throw std::invalid_argument("optimize_policy: empty grid");
  if (k == 0 || k > profile.max_h()) throw std::invalid_argument("optimize_policy: k outside [1, n]");
  const auto& gv = grid.gamma_values;
  const auto& pv = grid.p_values;

  // m_h at each grid gamma, h = 0..k.
  std::vector<std::vector<double>> mh(gv.size(), std::vector<double>(k + 1, 0.0));
  for (std::size_t j = 0; j < gv.size(); ++j)
    for (std::size_t h = 1; h <= k; ++h) mh[j][h] = profile.mean_decoded(h, gv[j]);

  std::vector<std::vector<double>> pmf(pv.size());
  for (std::size_t i = 0; i < pv.size(); ++i) pmf[i] = numeric::binomial_pmf(k, pv[i]);

  double best = -1.0;
  std::size_t bi = 0, bj = 0;
  for (std::size_t j = 0; j < gv.size(); ++j) {
    const double rate = std::log2(1.0 + gv[j]);
    for (std::size_t i = 0; i < pv.size(); ++i) {
      double d = 0.0;
      for (std::size_t h = 1; h <= k; ++h) d += pmf[i][h] * mh[j][h];
      const double u = rate * d;
      // Ascending loops with >= keep the largest gamma, then largest p.
      if (u >= best) {
        best = u;
        bi = i;
        bj = j;
      }
    }
  }

  PolicyPoint pt{k, pv[bi], gv[bj], best, 0.0};
  if (grid.refine) {
    auto U = [&](double p, double g) { return sum_rate(k, p, g, profile); };
    const double g_lo = gv[bj > 0 ? bj - 1 : 0];
    const double g_hi = std::min(gamma_max, gv[std::min(bj + 1, gv.size() - 1)]);
    const double p_lo = pv[bi > 0 ? bi - 1 : 0];
    const double p_hi = std::min(1.0, pv[std::min(bi + 1, pv.size() - 1)]);
    for (int round = 0; round < 3; ++round) {
      if (g_hi > g_lo) {
        const double lg = numeric::golden_max([&](double x) { return U(pt.p, std::exp(x)); }, std::log(g_lo),
                                              std::log(g_hi), 1e-7);
        for (double cand : {std::exp(lg), g_lo, g_hi}) {
          const double u = U(pt.p, cand);
          if (u > pt.U) {
            pt.U = u;
            pt.gamma = cand;
          }
        }
      }
      if (p_hi > p_lo) {
        const double pp = numeric::golden_max([&](double x) { return U(x, pt.gamma); }, p_lo, p_hi, 1e-7);
        for (double cand : {pp, p_lo, p_hi}) {
          const double u = U(cand, pt.gamma);
          if (u > pt.U) {
            pt.U = u;
            pt.p = cand;
          }
        }
      }
    }
  }
  pt.D = decoded_per_slot(k, pt.p, pt.gamma, profile);
  return pt;
}

/// Optimizes every k = 1..n (independent, run in parallel).
inline std::vector<PolicyPoint> optimize_all(const SystemConfig& cfg, const SicProfile& profile,
                                             const OptimizerGrid& grid) {
  const std::size_t n = static_cast<std::size_t>(cfg.n);
  std::vector<PolicyPoint> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = optimize_policy(i + 1, profile, cfg.gamma_max, grid); });
  return out;
}

/// Table policy that uses the raw per-k optimum directly.
inline AccessPolicy table_policy(const SystemConfig& cfg, std::span<const PolicyPoint> raw) {
  const std::size_t n = static_cast<std::size_t>(cfg.n);
  if (raw.size() != n) throw std::invalid_argument("table_policy: raw table must cover k = 1..n");
  AccessPolicy pol;
  pol.kind = PolicyKind::optimized_table;
  pol.p.assign(n + 1, 0.0);
  pol.gamma.assign(n + 1, cfg.gamma_max);
  for (const auto& pt : raw) {
    pol.p[pt.k] = pt.p;
    pol.gamma[pt.k] = pt.gamma;
  }
  fill_slot_times(pol, cfg);
  return pol;
}

struct PolicyFit {
  std::int64_t k_c = 0;
  double a_gamma = 0.0;
  double b_gamma = 0.0;
  double a_D = 0.0;
};

/// Slope of the mean decoded count per slot against k over the upper half
/// of the k range, evaluated on the closed-form policy (k_c, a_gamma,
/// b_gamma).
inline double fit_decoded_slope(std::size_t n, std::int64_t k_c, double a_gamma, double b_gamma, double gamma_max,
                                const SicProfile& profile) {
  std::vector<double> ks, ds;
  for (std::size_t k = n / 2 + 1; k <= n; ++k) {
    const bool below = static_cast<std::int64_t>(k) < k_c;
    const double p = below ? 1.0 / static_cast<double>(k) : 1.0;
    const double g = below ? gamma_max : std::min(gamma_max, 1.0 / (a_gamma * static_cast<double>(k) + b_gamma));
    ks.push_back(static_cast<double>(k));
    ds.push_back(decoded_per_slot(k, p, g, profile));
  }
  if (ks.size() < 3) throw std::invalid_argument("fit_decoded_slope: fewer than 3 points in upper half");
  return numeric::least_squares(ks, ds).slope;
}

/// Recovers the closed-form constants from the per-k argmax table:
///  - k_c: first k whose optimum has p rounding to 1 and gamma below gamma_max;
///  - (a_gamma, b_gamma): least squares of 1/gamma*_k on k for k >= k_c;
///  - a_D: see fit_decoded_slope.
inline PolicyFit fit_policy_constants(std::span<const PolicyPoint> raw, const SicProfile& profile, double gamma_max) {
  PolicyFit fit;
  const double at_max = gamma_max * (1.0 - 1e-9);
  for (const auto& pt : raw) {
    if (std::lround(pt.p) == 1 && pt.gamma < at_max) {
      fit.k_c = static_cast<std::int64_t>(pt.k);
      break;
    }
  }
  if (fit.k_c == 0) throw std::invalid_argument("fit_policy_constants: no breakpoint found");
  std::vector<double> ks, inv;
  for (const auto& pt : raw) {
    if (static_cast<std::int64_t>(pt.k) >= fit.k_c) {
      ks.push_back(static_cast<double>(pt.k));
      inv.push_back(1.0 / pt.gamma);
    }
  }
  if (ks.size() < 3) throw std::invalid_argument("fit_policy_constants: fewer than 3 points beyond k_c");
  const auto lf = numeric::least_squares(ks, inv);
  fit.a_gamma = lf.slope;
  fit.b_gamma = lf.intercept;
  std::size_t n = 0;
  for (const auto& pt : raw) n = std::max(n, pt.k);
  fit.a_D = fit_decoded_slope(n, fit.k_c, fit.a_gamma, fit.b_gamma, gamma_max, profile);
  return fit;
}

}  // namespace sicaoi

#endif  // SICAOI_POLICY_HPP
