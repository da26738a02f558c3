#ifndef SICAOI_ANALYTIC_HPP
#define SICAOI_ANALYTIC_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "sicaoi/config.hpp"
#include "sicaoi/error.hpp"
#include "sicaoi/numeric.hpp"
#include "sicaoi/policy.hpp"
#include "sicaoi/sic.hpp"

namespace sicaoi {

using Transform = std::function<double(double)>;

/// Binomial pmf of the number of backlogged nodes: over the n-1 nodes other
/// than a tagged one (tagged_excluded) or over all n nodes.
inline std::vector<double> backlog_pdf(double b, std::size_t n, bool tagged_excluded) {
  if (n < 1) throw std::invalid_argument("backlog_pdf: n must be >= 1");
  return numeric::binomial_pmf(tagged_excluded ? n - 1 : n, b);
}

/// Mean-field state: every node is independently backlogged at a slot
/// boundary with probability b.
struct BacklogModel {
  double b = 0.0;
  std::vector<double> q;  // k = 0..n-1, others backlogged as seen by a tagged node
  std::vector<double> w;  // k = 0..n, backlogged nodes overall
  double p_bar_prime = 0.0;  // sum q_k p_{k+1}
  double T_bar_prime = 0.0;  // sum q_k T_{k+1}
};

inline BacklogModel make_backlog(double b, const AccessPolicy& policy) {
  const std::size_t n = policy.n();
  BacklogModel m;
  m.b = b;
  m.q = backlog_pdf(b, n, true);
  m.w = backlog_pdf(b, n, false);
  for (std::size_t k = 0; k < n; ++k) {
    m.p_bar_prime += m.q[k] * policy.p[k + 1];
    m.T_bar_prime += m.q[k] * policy.T[k + 1];
  }
  return m;
}

namespace detail {

// 1 - e^{-x}(1 + x), accurate for small x.
inline double one_minus_exp_poly1(double x) {
  if (std::abs(x) < 1e-3) return x * x / 2.0 - x * x * x / 3.0 + x * x * x * x / 8.0;
  return -std::expm1(-x) - x * std::exp(-x);
}

// x - (1 - e^{-x}), accurate for small x.
inline double exp_excess(double x) {
  if (std::abs(x) < 1e-3) return x * x / 2.0 - x * x * x / 6.0 + x * x * x * x / 24.0;
  return x + std::expm1(-x);
}

// Atoms of the slot-time laws X (tagged idle) and X' (tagged backlogged),
// shared by every transform built from one solved model.
struct SlotAtoms {
  std::vector<double> q;       // weights
  std::vector<double> t_idle;  // T_k
  std::vector<double> t_busy;  // T_{k+1}
  std::vector<double> p_busy;  // p_{k+1}
  double lambda = 0.0;

  double phi_x(double s) const {
    double v = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) v += q[k] * std::exp(-s * t_idle[k]);
    return v;
  }
  // 1 - phi_X(s), without cancellation for small s.
  double one_minus_phi_x(double s) const {
    double v = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) v += q[k] * -std::expm1(-s * t_idle[k]);
    return v;
  }
  double dphi_x(double s) const {
    double v = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) v -= q[k] * t_idle[k] * std::exp(-s * t_idle[k]);
    return v;
  }
  double phi_xp(double s) const {
    double v = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) v += q[k] * std::exp(-s * t_busy[k]);
    return v;
  }
  double phi_c(double s) const {
    double num = 0.0, den = 1.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
      const double e = std::exp(-s * t_busy[k]);
      num += q[k] * p_busy[k] * e;
      den -= q[k] * (1.0 - p_busy[k]) * e;
    }
    return num / den;
  }
  double phi_r(double s) const {
    double num = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k)
      num += q[k] * std::exp(-s * t_idle[k]) * -std::expm1(-lambda * t_idle[k]);
    return num / one_minus_phi_x(s + lambda);
  }
  double phi_v(double s) const {
    const double a = one_minus_phi_x(lambda);
    if (s + lambda == 0.0) {
      double ex = 0.0;
      for (std::size_t k = 0; k < q.size(); ++k) ex += q[k] * t_idle[k];
      return lambda * ex / a;
    }
    return lambda * one_minus_phi_x(s + lambda) / ((s + lambda) * a);
  }
};

inline std::shared_ptr<const SlotAtoms> make_atoms(const BacklogModel& m, const AccessPolicy& policy, double lambda) {
  auto atoms = std::make_shared<SlotAtoms>();
  const std::size_t n = policy.n();
  atoms->q = m.q;
  atoms->t_idle.assign(policy.T.begin(), policy.T.begin() + static_cast<std::ptrdiff_t>(n));
  atoms->t_busy.assign(policy.T.begin() + 1, policy.T.end());
  atoms->p_busy.assign(policy.p.begin() + 1, policy.p.end());
  atoms->lambda = lambda;
  return atoms;
}

}  // namespace detail

/// Laplace transform of the slot time seen by a tagged node: X when it is
/// idle (sum q_k e^{-s T_k}), X' when it is backlogged (sum q_k e^{-s T_{k+1}}).
inline double phi_slot(double s, const BacklogModel& m, const AccessPolicy& policy, bool tagged_backlogged) {
  const auto atoms = detail::make_atoms(m, policy, 0.0);
  return tagged_backlogged ? atoms->phi_xp(s) : atoms->phi_x(s);
}

/// Right-hand side of the fixed point b = F(b) =
/// (1 - phi_X(lambda)) / (1 - phi_X(lambda) + p'), with q_k, p' taken at b.
inline double fixed_point_map(double b, const AccessPolicy& policy, double lambda) {
  const auto m = make_backlog(b, policy);
  const auto atoms = detail::make_atoms(m, policy, lambda);
  const double a = atoms->one_minus_phi_x(lambda);
  return a / (a + m.p_bar_prime);
}

/// Bisection on g(b) = F(b) - b; g > 0 near 0 and g < 0 near 1 so the
/// (unique) crossing is always bracketed.
inline BacklogModel solve_backlog_fixed_point(const AccessPolicy& policy, double lambda) {
  if (policy.n() < 1) throw std::invalid_argument("solve_backlog_fixed_point: empty policy");
  if (!(lambda > 0.0)) throw std::invalid_argument("solve_backlog_fixed_point: lambda must be positive");
  auto g = [&](double b) { return fixed_point_map(b, policy, lambda) - b; };
  constexpr double lo = 1e-15, hi = 1.0 - 1e-15;
  const double g_lo = g(lo), g_hi = g(hi);
  if (!(g_lo > 0.0 && g_hi < 0.0))
    throw ModelInconsistency("backlog fixed point: no sign change of F(b) - b on [1e-15, 1 - 1e-15]");
  const double b = numeric::bisect(g, lo, hi, 1e-17, 1e-14);
  return make_backlog(b, policy);
}

struct LtMoments {
  double mean = 0.0;
  double second = 0.0;
};

struct ContentionMoments {
  Transform phi;
  double mean = 0.0;
  double second = 0.0;
};

/// Contention time C: slots from becoming backlogged until the end of the
/// transmission slot (geometric number of X' slots).
inline ContentionMoments contention_moments(const BacklogModel& m, const AccessPolicy& policy) {
  if (!(m.p_bar_prime > 0.0)) throw ModelInconsistency("contention_moments: mean transmit probability is zero");
  const auto atoms = detail::make_atoms(m, policy, 0.0);
  double t2 = 0.0, fail_t = 0.0;
  for (std::size_t k = 0; k < atoms->q.size(); ++k) {
    t2 += atoms->q[k] * atoms->t_busy[k] * atoms->t_busy[k];
    fail_t += atoms->q[k] * (1.0 - atoms->p_busy[k]) * atoms->t_busy[k];
  }
  ContentionMoments out;
  out.mean = m.T_bar_prime / m.p_bar_prime;
  out.second = (t2 + 2.0 * out.mean * fail_t) / m.p_bar_prime;
  out.phi = [atoms](double s) { return atoms->phi_c(s); };
  return out;
}

struct IdleMoments {
  Transform phi;
  double mean = 0.0;
  double second = 0.0;
};

/// Idle time R: from the end of a transmission to the end of the slot in
/// which the next message arrives.
inline IdleMoments idle_moments(const BacklogModel& m, const AccessPolicy& policy, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("idle_moments: lambda must be positive");
  const auto atoms = detail::make_atoms(m, policy, lambda);
  double ex = 0.0, ex2 = 0.0;
  for (std::size_t k = 0; k < atoms->q.size(); ++k) {
    ex += atoms->q[k] * atoms->t_idle[k];
    ex2 += atoms->q[k] * atoms->t_idle[k] * atoms->t_idle[k];
  }
  const double a = atoms->one_minus_phi_x(lambda);
  const double d = atoms->dphi_x(lambda);
  IdleMoments out;
  out.mean = ex / a;
  out.second = ex2 / a - 2.0 * ex * d / (a * a);
  out.phi = [atoms](double s) { return atoms->phi_r(s); };
  return out;
}

/// Fraction of transmitted packets that are decoded (renewal-reward ratio of
/// decoded to transmitted packets per slot).
inline double success_probability(const BacklogModel& m, const AccessPolicy& policy, const SicProfile& profile) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 1; k < m.w.size(); ++k) {
    if (m.w[k] == 0.0) continue;
    num += m.w[k] * decoded_per_slot(k, policy.p[k], policy.gamma[k], profile);
    den += m.w[k] * static_cast<double>(k) * policy.p[k];
  }
  if (!(den > 0.0)) throw ModelInconsistency("success_probability: no transmissions (degenerate load)");
  return num / den;
}

struct Throughput {
  double theta = 0.0;       // delivered messages per second per node
  double theta_norm = 0.0;  // fraction of generated messages delivered
  double theta_bps = 0.0;
};

inline Throughput throughput(double P_s, double mean_Y, double lambda, double L_bits) {
  if (!(mean_Y > 0.0)) throw std::invalid_argument("throughput: E[Y] must be positive");
  Throughput t;
  t.theta = P_s / mean_Y;
  t.theta_norm = t.theta / lambda;
  t.theta_bps = L_bits * t.theta;
  return t;
}

/// Long-run fraction of time with at least one transmission. Slot length is
/// set by the backlogged count whether or not anyone transmits.
inline double channel_busy_ratio(const BacklogModel& m, const AccessPolicy& policy) {
  double idle = 0.0, total = 0.0;
  for (std::size_t k = 0; k < m.w.size(); ++k) {
    const double p = k == 0 ? 0.0 : policy.p[k];
    idle += m.w[k] * std::pow(1.0 - p, static_cast<double>(k)) * policy.T[k];
    total += m.w[k] * policy.T[k];
  }
  return 1.0 - idle / total;
}

struct AccessDelay {
  Transform phi;    // D = V + C
  Transform phi_v;  // V: last arrival to end of its slot
  double mean = 0.0;
  double mean_v = 0.0;
};

inline AccessDelay access_delay(const BacklogModel& m, const AccessPolicy& policy, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("access_delay: lambda must be positive");
  const auto atoms = detail::make_atoms(m, policy, lambda);
  const auto contention = contention_moments(m, policy);
  double num = 0.0;
  for (std::size_t k = 0; k < atoms->q.size(); ++k)
    num += atoms->q[k] * detail::one_minus_exp_poly1(lambda * atoms->t_idle[k]);
  AccessDelay out;
  // E[V] = 1/lambda + phi_X'(lambda) / (1 - phi_X(lambda)).
  out.mean_v = num / (lambda * atoms->one_minus_phi_x(lambda));
  out.mean = contention.mean + out.mean_v;
  out.phi_v = [atoms](double s) { return atoms->phi_v(s); };
  out.phi = [atoms](double s) { return atoms->phi_c(s) * atoms->phi_v(s); };
  return out;
}

struct AoiMetrics {
  double mean = 0.0;
  double zeta = 0.0;  // +inf when every transmission succeeds
  std::function<double(double)> ccdf;
};

/// Mean AoI and the shifted-exponential tail approximation.
///
/// zeta is the smallest positive root of phi_Y(-zeta) = 1/(1 - P_s).
/// phi_Y(-s) increases with s and diverges at s_limit (the abscissa of
/// convergence of the transform), so the root is bracketed in (0, s_limit).
inline AoiMetrics aoi_metrics(const Transform& phi_Y, double mean_D, double mean_Y, double second_Y, double P_s,
                              double s_limit = std::numeric_limits<double>::infinity(), double s_cap = 1e9) {
  if (!(P_s > 0.0 && P_s <= 1.0)) throw std::invalid_argument("aoi_metrics: P_s must lie in (0, 1]");
  AoiMetrics out;
  out.mean = mean_D + second_Y / (2.0 * mean_Y) + mean_Y * (1.0 / P_s - 1.0);
  if (P_s == 1.0) {
    out.zeta = std::numeric_limits<double>::infinity();
  } else {
    const double target = 1.0 / (1.0 - P_s);
    auto f = [&](double s) { return phi_Y(-s) - target; };
    const double limit = std::min(s_limit, s_cap);
    double lo = 1e-9;
    if (f(lo) >= 0.0) throw ModelInconsistency("aoi_metrics: tail root below search floor");
    double hi = lo;
    bool bracketed = false;
    while (true) {
      const double next = std::min(2.0 * hi, limit);
      if (!(next > hi)) break;
      const double v = f(next);
      if (!std::isfinite(v) || v >= 0.0) {
        hi = next;
        bracketed = true;
        break;
      }
      lo = hi = next;
      if (next >= limit) break;
    }
    if (!bracketed) {
      // Approach the divergence point from below.
      for (double frac = 0.5; frac > 1e-15; frac *= 0.5) {
        const double s = limit - frac * (limit - lo);
        const double v = f(s);
        if (!std::isfinite(v) || v >= 0.0) {
          hi = s;
          bracketed = true;
          break;
        }
        lo = s;
      }
    }
    if (!bracketed) throw ModelInconsistency("aoi_metrics: tail decay root not bracketed below transform limit");
    auto g = [&](double s) {
      const double v = f(s);
      return std::isfinite(v) ? v : std::numeric_limits<double>::max();
    };
    out.zeta = numeric::bisect(g, lo, hi, 1e-14 * hi, 0.0, 300);
  }
  const double zeta = out.zeta, mean = out.mean;
  out.ccdf = [zeta, mean](double t) {
    if (std::isinf(zeta)) return t < mean ? 1.0 : 0.0;
    return std::min(1.0, std::exp(-zeta * (t - mean) - 1.0));
  };
  return out;
}

/// Deterministic path gain, two-ray ground far-field law
/// G_d(r) = g_offset (h_tx h_rx)^2 / r^4.
inline double path_gain(double r, const SystemConfig& cfg) {
  const double hh = cfg.h_tx_m * cfg.h_rx_m;
  return std::pow(10.0, cfg.path_gain_offset_dB / 10.0) * hh * hh / (r * r * r * r);
}

/// Largest radius at which a node can still reach gamma_max / c at the base
/// station with maximum power.
inline double coverage_radius(const SystemConfig& cfg, double tol_m = 1e-3) {
  const double need = cfg.gamma_max / cfg.c();
  auto margin = [&](double r) { return path_gain(r, cfg) * cfg.P_tx_max_W / cfg.P_N_W() - need; };
  if (margin(1.0) < 0.0) throw ModelInconsistency("coverage_radius: requirement unsatisfiable at 1 m");
  double lo = 1.0, hi = 2.0;
  while (margin(hi) >= 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw ModelInconsistency("coverage_radius: no finite radius");
  }
  while (hi - lo > tol_m) {
    const double mid = 0.5 * (lo + hi);
    (margin(mid) >= 0.0 ? lo : hi) = mid;
  }
  return lo;
}

/// Area-averaged inverse path gain over the annulus [r_min, R] with the
/// uniform-disc weight 2r/R^2.
inline double mean_inverse_path_gain(const SystemConfig& cfg, double radius) {
  if (!(radius > cfg.r_min_m)) throw std::invalid_argument("mean_inverse_path_gain: radius must exceed r_min");
  const double R2 = radius * radius;
  return numeric::integrate([&](double r) { return 2.0 * r / (R2 * path_gain(r, cfg)); }, cfg.r_min_m, radius, 1e-10);
}

struct EnergyBreakdown {
  double E_tx = 0.0;      // transmit energy per inter-departure time
  double E_d = 0.0;       // doze + active + transmit per inter-departure time
  double E_bar = 0.0;     // per delivered packet, including generation
  double mean_v_first = 0.0;  // E[V']: first arrival to end of its slot
};

/// Energy per delivered packet. Needs the solved model, the access-time
/// moments and the coverage radius used to scatter nodes.
inline EnergyBreakdown energy_per_delivered(const BacklogModel& m, const AccessPolicy& policy, double lambda,
                                            const SystemConfig& cfg, double coverage_R, double mean_C,
                                            double mean_R, double mean_Y, double P_s) {
  const auto atoms = detail::make_atoms(m, policy, lambda);
  double excess = 0.0;
  for (std::size_t k = 0; k < atoms->q.size(); ++k)
    excess += atoms->q[k] * detail::exp_excess(lambda * atoms->t_idle[k]);
  EnergyBreakdown out;
  // E[X]/(1 - phi_X(lambda)) - 1/lambda, rearranged to avoid cancellation.
  out.mean_v_first = excess / (lambda * atoms->one_minus_phi_x(lambda));
  if (out.mean_v_first < -1e-12) throw ModelInconsistency("energy_per_delivered: negative E[V']");
  out.mean_v_first = std::max(0.0, out.mean_v_first);

  const double inv_gain = mean_inverse_path_gain(cfg, coverage_R);
  const double per_gamma = cfg.P_N_W() / cfg.c() * inv_gain;
  for (std::size_t k = 0; k < atoms->q.size(); ++k)
    out.E_tx += atoms->q[k] * per_gamma * policy.gamma[k + 1] * atoms->t_busy[k];
  out.E_d = cfg.P_d_W * (mean_R - out.mean_v_first) + cfg.P_a_W * (out.mean_v_first + mean_C) + out.E_tx;
  out.E_bar = (cfg.E_g_J * lambda * mean_Y + out.E_d) / P_s;
  return out;
}

struct CriticalRate {
  double U_inf = 0.0;       // bit/s/Hz
  double lambda_inf = 0.0;  // 1/s
  double S_inf = 0.0;       // s
};

/// Asymptotic sum-rate a_D / (a_gamma ln 2) and the per-node generation rate
/// it can sustain.
inline CriticalRate critical_rate(double a_D, double a_gamma, const SystemConfig& cfg) {
  if (!(a_gamma > 0.0)) throw std::invalid_argument("critical_rate: a_gamma must be positive");
  CriticalRate out;
  out.U_inf = a_D / (a_gamma * std::numbers::ln2);
  out.lambda_inf = cfg.W_Hz * out.U_inf / (static_cast<double>(cfg.n) * cfg.L_bits);
  out.S_inf = 1.0 / out.lambda_inf;
  return out;
}

struct MetricsReport {
  double S = 0.0;
  double b = 0.0;
  double P_s = 0.0;
  double theta = 0.0;
  double theta_norm = 0.0;
  double theta_bps = 0.0;
  double cbr = 0.0;
  double E_D = 0.0;
  double E_H = 0.0;
  double zeta = 0.0;
  double E_bar = 0.0;
  double E_Q = 0.0;
  double Std_Q = 0.0;
  double E_Y = 0.0;
  double E_Y2 = 0.0;
  double lambda_inf = std::numeric_limits<double>::quiet_NaN();
  double U_inf = std::numeric_limits<double>::quiet_NaN();
  double S_inf = std::numeric_limits<double>::quiet_NaN();
  double coverage_R = 0.0;
};

/// Abscissa of convergence of phi_Y on the negative axis: phi_R diverges at
/// -lambda, phi_C where sum q_k (1 - p_{k+1}) e^{s T_{k+1}} reaches 1.
inline double inter_departure_transform_limit(const BacklogModel& m, const AccessPolicy& policy, double lambda) {
  const std::size_t n = policy.n();
  double fail_mass = 0.0;
  for (std::size_t k = 0; k < n; ++k) fail_mass += m.q[k] * (1.0 - policy.p[k + 1]);
  double limit = lambda;
  if (fail_mass > 0.0) {
    auto h = [&](double s) {
      double v = -1.0;
      for (std::size_t k = 0; k < n; ++k) v += m.q[k] * (1.0 - policy.p[k + 1]) * std::exp(s * policy.T[k + 1]);
      return v;
    };
    double hi = 1.0;
    while (h(hi) < 0.0 && hi < limit) hi *= 2.0;
    if (h(hi) >= 0.0) limit = std::min(limit, numeric::bisect(h, 0.0, hi, 1e-12 * hi, 0.0));
  }
  return limit;
}

/// Full analytic evaluation at generation rate lambda.
inline MetricsReport evaluate_analytic(const SystemConfig& cfg, const AccessPolicy& policy, const SicProfile& profile,
                                       double lambda) {
  MetricsReport r;
  r.S = 1.0 / lambda;
  const auto m = solve_backlog_fixed_point(policy, lambda);
  r.b = m.b;
  const double n = static_cast<double>(policy.n());
  r.E_Q = n * m.b;
  r.Std_Q = std::sqrt(n * m.b * (1.0 - m.b));

  const auto contention = contention_moments(m, policy);
  const auto idle = idle_moments(m, policy, lambda);
  r.E_Y = contention.mean + idle.mean;
  r.E_Y2 = contention.second + 2.0 * contention.mean * idle.mean + idle.second;

  r.P_s = success_probability(m, policy, profile);
  const auto th = throughput(r.P_s, r.E_Y, lambda, cfg.L_bits);
  r.theta = th.theta;
  r.theta_norm = th.theta_norm;
  r.theta_bps = th.theta_bps;
  r.cbr = channel_busy_ratio(m, policy);

  const auto delay = access_delay(m, policy, lambda);
  r.E_D = delay.mean;
  const auto phi_c = contention.phi;
  const auto phi_r = idle.phi;
  const Transform phi_y = [phi_c, phi_r](double s) { return phi_c(s) * phi_r(s); };
  double min_T = policy.T[0];
  for (double t : policy.T) min_T = std::min(min_T, t);
  const auto aoi = aoi_metrics(phi_y, r.E_D, r.E_Y, r.E_Y2, r.P_s,
                               inter_departure_transform_limit(m, policy, lambda), 1e6 / min_T);
  r.E_H = aoi.mean;
  r.zeta = aoi.zeta;

  r.coverage_R = coverage_radius(cfg);
  const auto energy =
      energy_per_delivered(m, policy, lambda, cfg, r.coverage_R, contention.mean, idle.mean, r.E_Y, r.P_s);
  r.E_bar = energy.E_bar;

  if (policy.a_D > 0.0 && policy.a_gamma > 0.0) {
    const auto crit = critical_rate(policy.a_D, policy.a_gamma, cfg);
    r.U_inf = crit.U_inf;
    r.lambda_inf = crit.lambda_inf;
    r.S_inf = crit.S_inf;
  }
  return r;
}

}  // namespace sicaoi

#endif  // SICAOI_ANALYTIC_HPP
