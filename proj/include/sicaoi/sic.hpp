#ifndef SICAOI_SIC_HPP
#define SICAOI_SIC_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sicaoi/config.hpp"
#include "sicaoi/numeric.hpp"
#include "sicaoi/parallel.hpp"

namespace sicaoi {

/// Ideal successive interference cancellation receiver.
///
/// Signals are normalized received SNRs sorted strongest first. Signal j is
/// decoded when S_j / (1 + sum_{r>j} S_r) >= gamma, assuming every stronger
/// signal was decoded and cancelled. Decoding stops at the first failure:
/// an undecoded signal cannot be removed, so nothing weaker is attempted.
class SicReceiver {
 public:
  std::size_t decode(std::span<const double> sorted_desc, double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("sic decode: gamma must be positive");
    for (std::size_t i = 1; i < sorted_desc.size(); ++i)
      if (sorted_desc[i] > sorted_desc[i - 1]) throw std::invalid_argument("sic decode: signals not sorted descending");
    return decode_unchecked(sorted_desc, gamma);
  }

  std::size_t decode_unchecked(std::span<const double> sorted_desc, double gamma) {
    const std::size_t h = sorted_desc.size();
    tail_.resize(h + 1);
    tail_[h] = 0.0;
    for (std::size_t j = h; j-- > 0;) tail_[j] = tail_[j + 1] + sorted_desc[j];
    std::size_t decoded = 0;
    for (std::size_t j = 0; j < h; ++j) {
      if (sorted_desc[j] / (1.0 + tail_[j + 1]) >= gamma)
        ++decoded;
      else
        break;
    }
    return decoded;
  }

 private:
  std::vector<double> tail_;
};

inline std::size_t sic_decode_count(std::span<const double> sorted_desc, double gamma) {
  SicReceiver rx;
  return rx.decode(sorted_desc, gamma);
}

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Direct Monte Carlo estimate of m_h(gamma), the mean number of packets
/// decoded when h nodes transmit at target SNIR gamma under power control
/// (mean normalized received SNR gamma / c, Rayleigh fading).
inline MeanEstimate estimate_mh(std::size_t h, double gamma, const SystemConfig& cfg, std::int64_t trials, Rng& rng) {
  if (!(gamma > 0.0)) throw std::invalid_argument("estimate_mh: gamma must be positive");
  if (trials < 1) throw std::invalid_argument("estimate_mh: trials must be >= 1");
  if (h > static_cast<std::size_t>(cfg.n)) throw std::invalid_argument("estimate_mh: h exceeds node count");
  if (h == 0) return {};

  const double s0 = gamma / cfg.c();
  std::exponential_distribution<double> fade(1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::pair<double, double>> keyed(h);
  std::vector<double> snr(h);
  SicReceiver rx;
  double sum = 0.0, sum_sq = 0.0;
  for (std::int64_t t = 0; t < trials; ++t) {
    for (auto& [s, tie] : keyed) {
      s = fade(rng) * s0;
      tie = unif(rng);
    }
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (std::size_t i = 0; i < h; ++i) snr[i] = keyed[i].first;
    const double d = static_cast<double>(rx.decode_unchecked(snr, gamma));
    sum += d;
    sum_sq += d * d;
  }
  const double n = static_cast<double>(trials);
  const double mean = sum / n;
  const double var = trials > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
  return {mean, std::sqrt(var / n)};
}

/// Monte Carlo table of m_h(gamma) over h = 0..n and an ascending gamma grid.
class SicProfile {
 public:
  SicProfile() = default;
  SicProfile(std::vector<double> gamma_grid, std::vector<std::vector<double>> mh,
             std::vector<std::vector<double>> std_errors, std::int64_t trials)
      : gamma_grid_(std::move(gamma_grid)), mh_(std::move(mh)), stderr_(std::move(std_errors)), trials_(trials) {
    if (gamma_grid_.size() < 2) throw std::invalid_argument("SicProfile: gamma grid needs >= 2 points");
    if (mh_.empty() || stderr_.size() != mh_.size()) throw std::invalid_argument("SicProfile: table shape mismatch");
    std::vector<double> log_grid(gamma_grid_.size());
    for (std::size_t i = 0; i < gamma_grid_.size(); ++i) log_grid[i] = std::log(gamma_grid_[i]);
    interp_.reserve(mh_.size());
    for (const auto& row : mh_) {
      if (row.size() != gamma_grid_.size()) throw std::invalid_argument("SicProfile: row length mismatch");
      interp_.emplace_back(log_grid, row);
    }
  }

  std::size_t max_h() const { return mh_.size() - 1; }
  std::int64_t trials() const { return trials_; }
  const std::vector<double>& gamma_grid() const { return gamma_grid_; }
  const std::vector<std::vector<double>>& table() const { return mh_; }
  const std::vector<std::vector<double>>& stderr_table() const { return stderr_; }

  double at(std::size_t h, std::size_t gamma_index) const { return mh_.at(h).at(gamma_index); }
  double stderr_at(std::size_t h, std::size_t gamma_index) const { return stderr_.at(h).at(gamma_index); }

  /// m_h at an arbitrary gamma inside the grid hull (monotone cubic in log gamma).
  double mean_decoded(std::size_t h, double gamma) const {
    if (h == 0) return 0.0;
    if (h > max_h()) throw std::out_of_range("SicProfile: h exceeds table");
    if (!(gamma > 0.0)) throw InterpolationRangeError("SicProfile: gamma must be positive");
    // Exact at grid points; also absorbs rounding right at the hull edges.
    const double lg = std::log(gamma);
    if (std::abs(gamma - gamma_grid_.back()) <= 1e-12 * gamma_grid_.back()) return mh_[h].back();
    if (std::abs(gamma - gamma_grid_.front()) <= 1e-12 * gamma_grid_.front()) return mh_[h].front();
    return std::clamp(interp_[h](lg), 0.0, static_cast<double>(h));
  }

  bool operator==(const SicProfile& o) const {
    return gamma_grid_ == o.gamma_grid_ && mh_ == o.mh_ && stderr_ == o.stderr_ && trials_ == o.trials_;
  }

 private:
  std::vector<double> gamma_grid_;
  std::vector<std::vector<double>> mh_, stderr_;
  std::int64_t trials_ = 0;
  std::vector<numeric::MonotoneCubic> interp_;
};

inline std::vector<double> default_gamma_grid(const SystemConfig& cfg) {
  return numeric::logspace(cfg.gamma_min, cfg.gamma_max, static_cast<std::size_t>(cfg.gamma_points));
}

namespace detail {

// Per-chunk accumulator: for each h, a difference array over grid indices.
// A decode threshold t contributes to every cell whose gamma <= t.
struct ProfileAccumulator {
  std::size_t n = 0, g = 0;
  std::vector<double> count_diff, square_diff;  // (n+1) x (g+1)

  ProfileAccumulator(std::size_t n_, std::size_t g_)
      : n(n_), g(g_), count_diff((n_ + 1) * (g_ + 1), 0.0), square_diff((n_ + 1) * (g_ + 1), 0.0) {}
};

}  // namespace detail

/// Builds the m_h(gamma) table for every h <= n and every grid gamma.
///
/// Each trial draws n fading gains once and evaluates every prefix h. For a
/// fixed draw the decoded count is a non-increasing step function of gamma:
/// with gains G sorted descending and tails tau_j = sum_{r>j} G_r, signal j
/// decodes iff gamma <= (G_j - c) / tau_j (or G_j >= c for the weakest), so
/// "at least l decoded" holds iff gamma <= min_{j<=l} of those thresholds.
/// One pass therefore scores all grid points.
inline SicProfile build_sic_profile(const SystemConfig& cfg, std::int64_t trials, std::uint64_t seed,
                                    std::vector<double> gamma_grid) {
  if (trials < 2) throw std::invalid_argument("build_sic_profile: need >= 2 trials");
  const std::size_t n = static_cast<std::size_t>(cfg.n);
  const std::size_t g = gamma_grid.size();
  const double c = cfg.c();
  constexpr std::int64_t kChunk = 2048;
  const std::size_t chunks = static_cast<std::size_t>((trials + kChunk - 1) / kChunk);

  std::vector<detail::ProfileAccumulator> partial;
  partial.reserve(chunks);
  for (std::size_t i = 0; i < chunks; ++i) partial.emplace_back(n, g);

  parallel_for(chunks, [&](std::size_t chunk) {
    auto& acc = partial[chunk];
    Rng rng = make_stream(seed, 0x51c0000000000000ULL + chunk);
    std::exponential_distribution<double> fade(1.0);
    const std::int64_t begin = static_cast<std::int64_t>(chunk) * kChunk;
    const std::int64_t end = std::min(trials, begin + kChunk);
    std::vector<double> draws(n), sorted, tail(n + 1);
    sorted.reserve(n);
    for (std::int64_t t = begin; t < end; ++t) {
      for (auto& d : draws) d = fade(rng);
      sorted.clear();
      for (std::size_t h = 1; h <= n; ++h) {
        const double x = draws[h - 1];
        sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), x, std::greater<>()), x);
        tail[h] = 0.0;
        for (std::size_t j = h; j-- > 0;) tail[j] = tail[j + 1] + sorted[j];
        double running = std::numeric_limits<double>::infinity();
        double* cnt = &acc.count_diff[h * (g + 1)];
        double* sq = &acc.square_diff[h * (g + 1)];
        for (std::size_t j = 0; j < h; ++j) {
          const double rest = tail[j + 1];
          double thr;
          if (rest > 0.0)
            thr = (sorted[j] - c) / rest;
          else
            thr = sorted[j] >= c ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
          running = std::min(running, thr);
          if (running < gamma_grid.front()) break;
          const std::size_t idx =
              static_cast<std::size_t>(std::upper_bound(gamma_grid.begin(), gamma_grid.end(), running) - gamma_grid.begin());
          const double level = static_cast<double>(j + 1);
          cnt[idx] += 1.0;
          sq[idx] += 2.0 * level - 1.0;
        }
      }
    }
  });

  std::vector<std::vector<double>> sum(n + 1, std::vector<double>(g, 0.0)), sum_sq = sum;
  for (const auto& acc : partial) {
    for (std::size_t h = 1; h <= n; ++h) {
      double run_c = 0.0, run_s = 0.0;
      for (std::size_t i = g; i-- > 0;) {
        run_c += acc.count_diff[h * (g + 1) + i + 1];
        run_s += acc.square_diff[h * (g + 1) + i + 1];
        sum[h][i] += run_c;
        sum_sq[h][i] += run_s;
      }
    }
  }

  const double nt = static_cast<double>(trials);
  std::vector<std::vector<double>> mean(n + 1, std::vector<double>(g, 0.0)), se = mean;
  for (std::size_t h = 1; h <= n; ++h) {
    for (std::size_t i = 0; i < g; ++i) {
      const double m = sum[h][i] / nt;
      const double var = std::max(0.0, (sum_sq[h][i] - nt * m * m) / (nt - 1.0));
      mean[h][i] = m;
      se[h][i] = std::sqrt(var / nt);
    }
  }
  return SicProfile(std::move(gamma_grid), std::move(mean), std::move(se), trials);
}

inline SicProfile build_sic_profile(const SystemConfig& cfg) {
  return build_sic_profile(cfg, cfg.mc_trials, cfg.seed, default_gamma_grid(cfg));
}

}  // namespace sicaoi

#endif  // SICAOI_SIC_HPP
