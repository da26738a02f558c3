#ifndef SICAOI_NUMERIC_HPP
#define SICAOI_NUMERIC_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "sicaoi/error.hpp"

namespace sicaoi::numeric {

inline double log_choose(std::size_t n, std::size_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

/// Binomial(trials, prob) pmf over {0..trials}, evaluated in log space so
/// that large trial counts do not overflow.
inline std::vector<double> binomial_pmf(std::size_t trials, double prob) {
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("binomial_pmf: probability outside [0,1]");
  std::vector<double> pmf(trials + 1, 0.0);
  if (prob == 0.0) {
    pmf.front() = 1.0;
    return pmf;
  }
  if (prob == 1.0) {
    pmf.back() = 1.0;
    return pmf;
  }
  const double lp = std::log(prob);
  const double lq = std::log1p(-prob);
  for (std::size_t k = 0; k <= trials; ++k) {
    pmf[k] = std::exp(log_choose(trials, k) + static_cast<double>(k) * lp +
                      static_cast<double>(trials - k) * lq);
  }
  return pmf;
}

/// Bisection for a sign change of f on [lo, hi]. Stops when |f| < f_tol or
/// the bracket is narrower than x_tol.
template <class F>
double bisect(F&& f, double lo, double hi, double x_tol, double f_tol, int max_iter = 400) {
  double f_lo = f(lo);
  double f_hi = f(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo < 0.0) == (f_hi < 0.0)) throw std::domain_error("bisect: no sign change on bracket");
  for (int it = 0; it < max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = f(mid);
    if (std::abs(f_mid) < f_tol || hi - lo < x_tol) return mid;
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace detail {

template <class F>
double simpson_step(F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                    int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature to a relative tolerance.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-8) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  // Absolute tolerance from a composite-Simpson estimate of the magnitude.
  constexpr int kPanels = 64;
  const double h = (b - a) / kPanels;
  double coarse = fa + fb;
  for (int i = 1; i < kPanels; ++i) coarse += (i % 2 ? 4.0 : 2.0) * f(a + h * i);
  coarse *= h / 3.0;
  const double tol = std::max(rel_tol * std::abs(coarse), std::numeric_limits<double>::min());
  return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, 50);
}

/// Golden-section maximisation of a unimodal function on [lo, hi].
template <class F>
double golden_max(F&& f, double lo, double hi, double x_tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > x_tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

/// Fritsch-Carlson monotone piecewise-cubic Hermite interpolant. Preserves
/// monotonicity of the data and never overshoots between knots.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw std::invalid_argument("MonotoneCubic: need >= 2 matching knots");
    std::vector<double> secant(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!(x_[i + 1] > x_[i])) throw std::invalid_argument("MonotoneCubic: knots must ascend");
      secant[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    }
    slope_.assign(n, 0.0);
    slope_.front() = secant.front();
    slope_.back() = secant.back();
    for (std::size_t i = 1; i + 1 < n; ++i)
      slope_[i] = secant[i - 1] * secant[i] <= 0.0 ? 0.0 : 0.5 * (secant[i - 1] + secant[i]);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (secant[i] == 0.0) {
        slope_[i] = slope_[i + 1] = 0.0;
        continue;
      }
      const double a = slope_[i] / secant[i];
      const double b = slope_[i + 1] / secant[i];
      const double r = a * a + b * b;
      if (r > 9.0) {
        const double t = 3.0 / std::sqrt(r);
        slope_[i] = t * a * secant[i];
        slope_[i + 1] = t * b * secant[i];
      }
    }
  }

  double front() const { return x_.front(); }
  double back() const { return x_.back(); }

  double operator()(double x) const {
    if (!(x >= x_.front() && x <= x_.back()))
      throw InterpolationRangeError("interpolation point " + std::to_string(x) + " outside [" +
                                    std::to_string(x_.front()) + ", " + std::to_string(x_.back()) + "]");
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    if (i + 1 >= x_.size()) return y_.back();
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * slope_[i] + (-2 * t3 + 3 * t2) * y_[i + 1] +
           (t3 - t2) * h * slope_[i + 1];
  }

 private:
  std::vector<double> x_, y_, slope_;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares y ~ slope * x + intercept.
inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least_squares: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("least_squares: degenerate abscissae");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

/// Two-sided Student-t critical value for the given confidence level.
inline double student_t_critical(double confidence, std::size_t dof) {
  if (dof == 0) throw std::invalid_argument("student_t_critical: zero degrees of freedom");
  boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(dist, 0.5 + 0.5 * confidence);
}

inline std::vector<double> logspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = count == 1 ? lo : std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  if (count > 1) {
    out.front() = lo;
    out.back() = hi;
  }
  return out;
}

}  // namespace sicaoi::numeric

#endif  // SICAOI_NUMERIC_HPP
