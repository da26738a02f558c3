#ifndef SICAOI_SIMULATOR_HPP
#define SICAOI_SIMULATOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "sicaoi/analytic.hpp"
#include "sicaoi/config.hpp"
#include "sicaoi/numeric.hpp"
#include "sicaoi/parallel.hpp"
#include "sicaoi/policy.hpp"
#include "sicaoi/sic.hpp"

namespace sicaoi {

/// Area-uniform radii r = R sqrt(u), clipped below at r_min.
inline std::vector<double> sample_node_distances(std::size_t n, double coverage_R, double r_min, Rng& rng) {
  if (!(coverage_R > r_min)) throw std::invalid_argument("sample_node_distances: R must exceed r_min");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> r(n);
  for (auto& x : r) x = std::max(r_min, coverage_R * std::sqrt(unif(rng)));
  return r;
}

enum class NodeMode { idle, backlogged };

struct NodeState {
  NodeMode mode = NodeMode::idle;
  double pending_arrival_time = 0.0;   // last arrival in the activating slot (message birth)
  double activation_time = 0.0;        // first arrival in the activating slot
  double last_delivered_generation_time = std::numeric_limits<double>::quiet_NaN();
  double distance = 0.0;
  double energy_accumulator = 0.0;
  double next_arrival = 0.0;  // meaningful while idle
  double backlog_since = 0.0;   // end of the activating slot
  double activation_gap = 0.0;  // last - first arrival in the activating slot
  // AoI bookkeeping: sawtooth integrated from aoi_mark on.
  double aoi_mark = 0.0;
  double last_tx_end = std::numeric_limits<double>::quiet_NaN();
  bool last_slot_tx = false;
};

struct SimOptions {
  std::int64_t horizon_slots = 100000;
  double warmup_fraction = 0.1;
  double coverage_R = 0.0;  // 0: computed from the config
};

/// Raw counters of one replication. Rates and means exclude the warmup
/// slots; the conservation counters cover the whole run.
struct ReplicationTally {
  std::size_t n = 0;
  double lambda = 0.0;
  double L_bits = 0.0;
  std::int64_t slots = 0;  // measured (post-warmup) slots
  double measured_time = 0.0;
  double total_time = 0.0;  // simulated clock over all slots
  double busy_time = 0.0;

  std::int64_t transmitted = 0;
  std::int64_t delivered = 0;
  double delay_sum = 0.0;  // over transmitted messages
  double aoi_area = 0.0;
  double aoi_time = 0.0;
  double energy = 0.0;
  double q_sum = 0.0, q_sq_sum = 0.0;
  std::vector<std::int64_t> backlog_histogram;  // k = 0..n, measured slots
  double interdeparture_sum = 0.0;
  std::int64_t interdeparture_count = 0;
  // Pooled lag-1 statistics of per-node transmit indicators.
  double tx_sum = 0.0, tx_lag_sum = 0.0;
  std::int64_t tx_pairs = 0;

  std::int64_t generated_all = 0, delivered_all = 0, dropped_all = 0, failed_all = 0, in_flight = 0;

  double pdr() const { return transmitted ? static_cast<double>(delivered) / static_cast<double>(transmitted) : std::numeric_limits<double>::quiet_NaN(); }
  double theta() const { return static_cast<double>(delivered) / (static_cast<double>(n) * measured_time); }
  double theta_norm() const { return theta() / lambda; }
  double theta_bps() const { return L_bits * theta(); }
  double cbr() const { return busy_time / measured_time; }
  double mean_delay() const { return transmitted ? delay_sum / static_cast<double>(transmitted) : std::numeric_limits<double>::quiet_NaN(); }
  double mean_aoi() const { return aoi_time > 0.0 ? aoi_area / aoi_time : std::numeric_limits<double>::infinity(); }
  double energy_per_delivered() const { return delivered ? energy / static_cast<double>(delivered) : std::numeric_limits<double>::infinity(); }
  double mean_backlog() const { return q_sum / static_cast<double>(slots); }
  double std_backlog() const {
    const double m = mean_backlog();
    return std::sqrt(std::max(0.0, q_sq_sum / static_cast<double>(slots) - m * m));
  }
  double mean_interdeparture() const {
    return interdeparture_count ? interdeparture_sum / static_cast<double>(interdeparture_count) : std::numeric_limits<double>::quiet_NaN();
  }
  double tx_lag1_autocorrelation() const {
    const double cells = static_cast<double>(slots) * static_cast<double>(n);
    const double mu = tx_sum / cells;
    const double var = mu - mu * mu;
    if (!(var > 0.0) || tx_pairs == 0) return std::numeric_limits<double>::quiet_NaN();
    return (tx_lag_sum / static_cast<double>(tx_pairs) - mu * mu) / var;
  }
};

namespace detail {

// Sawtooth area of t - g between times a and b.
inline double sawtooth_area(double g, double a, double b) { return 0.5 * ((b - g) * (b - g) - (a - g) * (a - g)); }

struct Transmission {
  double snr;
  double tie;
  std::size_t node;
};

}  // namespace detail

/// One independent run of the slot-synchronous system.
inline ReplicationTally run_replication(const SystemConfig& cfg, const AccessPolicy& policy, Rng& rng,
                                        const SimOptions& opt = {}) {
  const std::size_t n = policy.n();
  if (n == 0 || n != static_cast<std::size_t>(cfg.n)) throw std::invalid_argument("run_replication: policy size differs from n");
  const auto warmup = static_cast<std::int64_t>(std::floor(opt.warmup_fraction * static_cast<double>(opt.horizon_slots)));
  if (opt.horizon_slots <= warmup || opt.horizon_slots < 1)
    throw std::invalid_argument("run_replication: horizon shorter than warmup");

  const double lambda = cfg.lambda();
  const double c = cfg.c();
  const double R = opt.coverage_R > 0.0 ? opt.coverage_R : coverage_radius(cfg);
  std::exponential_distribution<double> gap(lambda), fade(1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::poisson_distribution<std::int64_t> poisson;
  auto poisson_draw = [&](double mean) {
    return mean > 0.0 ? poisson(rng, std::poisson_distribution<std::int64_t>::param_type(mean)) : std::int64_t{0};
  };

  ReplicationTally tally;
  tally.n = n;
  tally.lambda = lambda;
  tally.L_bits = cfg.L_bits;
  tally.backlog_histogram.assign(n + 1, 0);

  std::vector<NodeState> nodes(n);
  const auto dist = sample_node_distances(n, R, cfg.r_min_m, rng);
  // Transmit power per unit gamma: P_N (gamma / c) / G_d(r).
  std::vector<double> power_per_gamma(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i].distance = dist[i];
    nodes[i].next_arrival = gap(rng);
    power_per_gamma[i] = cfg.P_N_W() / (c * path_gain(dist[i], cfg));
  }

  std::vector<detail::Transmission> tx;
  std::vector<double> snr;
  tx.reserve(n);
  SicReceiver rx;
  std::vector<char> transmitted_now(n, 0);
  double t = 0.0;

  for (std::int64_t slot = 0; slot < opt.horizon_slots; ++slot) {
    const bool measured = slot >= warmup;
    if (slot == warmup) {
      for (auto& nd : nodes) nd.aoi_mark = t;
    }
    std::size_t k = 0;
    for (const auto& nd : nodes) k += nd.mode == NodeMode::backlogged;
    const double T = policy.T[k];
    const double end = t + T;
    const double p = policy.p[k];
    const double gamma = policy.gamma[k];

    tx.clear();
    if (k > 0) {
      for (std::size_t i = 0; i < n; ++i) {
        if (nodes[i].mode != NodeMode::backlogged) continue;
        if (p >= 1.0 || unif(rng) < p) tx.push_back({fade(rng) * gamma / c, unif(rng), i});
      }
    }
    std::sort(tx.begin(), tx.end(), [](const auto& a, const auto& b) {
      return a.snr != b.snr ? a.snr > b.snr : a.tie < b.tie;
    });
    snr.resize(tx.size());
    for (std::size_t j = 0; j < tx.size(); ++j) snr[j] = tx[j].snr;
    const std::size_t decoded = tx.empty() ? 0 : rx.decode_unchecked(snr, gamma);

    if (measured) {
      ++tally.slots;
      tally.measured_time += T;
      if (!tx.empty()) tally.busy_time += T;
      tally.q_sum += static_cast<double>(k);
      tally.q_sq_sum += static_cast<double>(k) * static_cast<double>(k);
      ++tally.backlog_histogram[k];
    }

    // Transmitters: deliver or fail, then return to idle.
    std::fill(transmitted_now.begin(), transmitted_now.end(), 0);
    for (std::size_t j = 0; j < tx.size(); ++j) {
      auto& nd = nodes[tx[j].node];
      transmitted_now[tx[j].node] = 1;
      const bool ok = j < decoded;
      const double e = (cfg.P_a_W + power_per_gamma[tx[j].node] * gamma) * T;
      nd.energy_accumulator += e;
      if (measured) {
        ++tally.transmitted;
        tally.delay_sum += end - nd.pending_arrival_time;
        tally.energy += e;
        if (!std::isnan(nd.last_tx_end)) {
          tally.interdeparture_sum += end - nd.last_tx_end;
          ++tally.interdeparture_count;
        }
      }
      nd.last_tx_end = end;
      if (ok) {
        ++tally.delivered_all;
        if (measured) {
          ++tally.delivered;
          if (!std::isnan(nd.last_delivered_generation_time)) {
            tally.aoi_area += detail::sawtooth_area(nd.last_delivered_generation_time, nd.aoi_mark, end);
            tally.aoi_time += end - nd.aoi_mark;
          }
          nd.aoi_mark = end;
        }
        nd.last_delivered_generation_time = nd.pending_arrival_time;
      } else {
        ++tally.failed_all;
      }
    }

    // Arrivals and the energy of everything but transmission.
    for (std::size_t i = 0; i < n; ++i) {
      auto& nd = nodes[i];
      double e = 0.0;
      if (nd.mode == NodeMode::backlogged) {
        if (!transmitted_now[i]) {
          e += cfg.P_a_W * T;
        } else {
          // Arrivals while backlogged are dropped; they are counted in one
          // draw over the whole backlog period, and by memorylessness the
          // next arrival restarts from the slot end.
          const std::int64_t count = poisson_draw(lambda * (end - nd.backlog_since + nd.activation_gap));
          tally.generated_all += count;
          tally.dropped_all += count;
          if (measured) e += cfg.E_g_J * static_cast<double>(count);
          nd.next_arrival = end + gap(rng);
          nd.mode = NodeMode::idle;
        }
      } else if (nd.next_arrival < end) {
        const double first = nd.next_arrival;
        // Time-reversed: distance from the slot end back to the last arrival.
        const double back = gap(rng);
        double last = first;
        std::int64_t count = 1;
        if (end - back > first) {
          last = end - back;
          count = 2;  // arrivals strictly between are drawn at transmission
        }
        tally.generated_all += count;
        tally.dropped_all += count - 1;
        e += cfg.P_d_W * (first - t) + cfg.P_a_W * (end - first);
        if (measured) e += cfg.E_g_J * static_cast<double>(count);
        nd.mode = NodeMode::backlogged;
        nd.activation_time = first;
        nd.pending_arrival_time = last;
        nd.backlog_since = end;
        nd.activation_gap = last - first;
      } else {
        e += cfg.P_d_W * T;
      }
      nd.energy_accumulator += e;
      if (measured) {
        tally.energy += e;
        const double x = transmitted_now[i] ? 1.0 : 0.0;
        tally.tx_sum += x;
        if (slot > warmup) {
          tally.tx_lag_sum += x * (nd.last_slot_tx ? 1.0 : 0.0);
          ++tally.tx_pairs;
        }
      }
      nd.last_slot_tx = transmitted_now[i] != 0;
    }
    t = end;
  }

  for (auto& nd : nodes) {
    if (!std::isnan(nd.last_delivered_generation_time)) {
      tally.aoi_area += detail::sawtooth_area(nd.last_delivered_generation_time, nd.aoi_mark, t);
      tally.aoi_time += t - nd.aoi_mark;
    }
    if (nd.mode == NodeMode::backlogged) {
      ++tally.in_flight;
      const std::int64_t count = poisson_draw(lambda * (t - nd.backlog_since + nd.activation_gap));
      tally.generated_all += count;
      tally.dropped_all += count;
    }
  }
  tally.total_time = t;
  return tally;
}

inline ReplicationTally run_replication(const SystemConfig& cfg, const AccessPolicy& policy, std::uint64_t seed,
                                        const SimOptions& opt = {}) {
  Rng rng = make_stream(seed, 0);
  return run_replication(cfg, policy, rng, opt);
}

/// Replication r uses stream r of the seed; output order is replication order.
inline std::vector<ReplicationTally> run_replications(const SystemConfig& cfg, const AccessPolicy& policy,
                                                      std::uint64_t seed, std::size_t replications,
                                                      const SimOptions& opt = {}) {
  SimOptions shared = opt;
  if (shared.coverage_R <= 0.0) shared.coverage_R = coverage_radius(cfg);
  std::vector<ReplicationTally> out(replications);
  parallel_for(replications, [&](std::size_t r) {
    Rng rng = make_stream(seed, 0x5e0000000000ULL + r);
    out[r] = run_replication(cfg, policy, rng, shared);
  });
  return out;
}

struct MetricEstimate {
  double mean = 0.0;
  double ci = 0.0;  // half-width
  std::size_t replications = 0;

  bool contains(double v) const { return std::abs(v - mean) <= ci; }
};

/// Across-replication mean and Student-t half-width.
inline MetricEstimate estimate_metric(const std::vector<double>& values, double confidence = 0.95) {
  if (values.size() < 2) throw std::invalid_argument("estimate_metric: need >= 2 replications");
  const double m = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= m;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (m - 1.0));
  MetricEstimate e;
  e.mean = mean;
  e.ci = std::isfinite(sd) ? numeric::student_t_critical(confidence, values.size() - 1) * sd / std::sqrt(m) : sd;
  e.replications = values.size();
  return e;
}

struct SimResult {
  MetricEstimate pdr, theta, theta_norm, theta_bps, cbr, E_D, E_H, E_bar, E_Q, Std_Q;
  MetricEstimate interdeparture, tx_lag1;
  std::vector<std::int64_t> backlog_histogram;
};

inline SimResult estimate_metrics(const std::vector<ReplicationTally>& reps, double confidence = 0.95) {
  if (reps.size() < 2) throw std::invalid_argument("estimate_metrics: need >= 2 replications");
  for (const auto& r : reps)
    if (r.slots != reps.front().slots) throw std::invalid_argument("estimate_metrics: unequal horizons");
  auto collect = [&](auto getter) {
    std::vector<double> v;
    v.reserve(reps.size());
    for (const auto& r : reps) v.push_back(getter(r));
    return estimate_metric(v, confidence);
  };
  SimResult s;
  s.pdr = collect([](const ReplicationTally& r) { return r.pdr(); });
  s.theta = collect([](const ReplicationTally& r) { return r.theta(); });
  s.theta_norm = collect([](const ReplicationTally& r) { return r.theta_norm(); });
  s.theta_bps = collect([](const ReplicationTally& r) { return r.theta_bps(); });
  s.cbr = collect([](const ReplicationTally& r) { return r.cbr(); });
  s.E_D = collect([](const ReplicationTally& r) { return r.mean_delay(); });
  s.E_H = collect([](const ReplicationTally& r) { return r.mean_aoi(); });
  s.E_bar = collect([](const ReplicationTally& r) { return r.energy_per_delivered(); });
  s.E_Q = collect([](const ReplicationTally& r) { return r.mean_backlog(); });
  s.Std_Q = collect([](const ReplicationTally& r) { return r.std_backlog(); });
  s.interdeparture = collect([](const ReplicationTally& r) { return r.mean_interdeparture(); });
  s.tx_lag1 = collect([](const ReplicationTally& r) { return r.tx_lag1_autocorrelation(); });
  s.backlog_histogram.assign(reps.front().backlog_histogram.size(), 0);
  for (const auto& r : reps)
    for (std::size_t k = 0; k < r.backlog_histogram.size(); ++k) s.backlog_histogram[k] += r.backlog_histogram[k];
  return s;
}

}  // namespace sicaoi

#endif  // SICAOI_SIMULATOR_HPP
