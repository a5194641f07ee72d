#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "ltlab/errors.hpp"

namespace ltlab {

struct Summary {
  std::size_t n = 0;
  double mean = 0;
  double sd = 0;
  double se = 0;
};

inline Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.n = xs.size();
  if (s.n == 0) return s;
  double sum = 0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    s.se = s.sd / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

// Type-7 quantile (linear interpolation), q in [0, 1].
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw InsufficientData("quantile: empty sample");
  std::sort(xs.begin(), xs.end());
  if (q <= 0) return xs.front();
  if (q >= 1) return xs.back();
  double pos = q * static_cast<double>(xs.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= xs.size()) return xs.back();
  return xs[lo] * (1 - frac) + xs[lo + 1] * frac;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Kolmogorov distribution tail Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_sf(double lambda) {
  if (lambda < 1e-8) return 1.0;
  double sum = 0;
  double sign = 1;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0;
  double p_value = 1;
};

inline KsResult ks_one_sample(std::vector<double> xs,
                              const std::function<double(double)>& cdf) {
  if (xs.size() < 2) throw InsufficientData("ks_one_sample: need at least 2 points");
  std::sort(xs.begin(), xs.end());
  double n = static_cast<double>(xs.size());
  double d = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    double f = cdf(xs[k]);
    d = std::max(d, std::abs(f - static_cast<double>(k) / n));
    d = std::max(d, std::abs(static_cast<double>(k + 1) / n - f));
  }
  double sn = std::sqrt(n);
  KsResult r;
  r.statistic = d;
  r.p_value = kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
  return r;
}

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.size() < 2 || b.size() < 2) throw InsufficientData("ks_two_sample: samples too small");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double na = static_cast<double>(a.size());
  double nb = static_cast<double>(b.size());
  std::size_t ia = 0, ib = 0;
  double d = 0;
  while (ia < a.size() && ib < b.size()) {
    double x = std::min(a[ia], b[ib]);
    while (ia < a.size() && a[ia] <= x) ++ia;
    while (ib < b.size() && b[ib] <= x) ++ib;
    d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
  }
  double ne = std::sqrt(na * nb / (na + nb));
  KsResult r;
  r.statistic = d;
  r.p_value = kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d);
  return r;
}

namespace detail {

// Regularized lower incomplete gamma P(a, x); series for x < a+1, continued
// fraction otherwise (Numerical Recipes structure).
inline double gamma_p(double a, double x) {
  if (x < 0 || a <= 0) throw GeometryViolation("gamma_p: bad arguments");
  if (x == 0) return 0;
  if (x < a + 1.0) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  double b = x + 1.0 - a;
  double c = 1e300;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  double q = std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
  return 1.0 - q;
}

}  // namespace detail

inline double chi2_sf(double x, double dof) {
  if (x <= 0) return 1.0;
  return 1.0 - detail::gamma_p(dof / 2.0, x / 2.0);
}

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double slope_se = 0;
  std::size_t n = 0;
};

inline LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw InsufficientData("linear_fit: length mismatch");
  std::size_t n = xs.size();
  if (n < 2) throw InsufficientData("linear_fit: need at least 2 points");
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
  }
  if (sxx == 0) throw InsufficientData("linear_fit: degenerate abscissae");
  LinearFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double ss = 0;
    for (std::size_t k = 0; k < n; ++k) {
      double r = ys[k] - (f.intercept + f.slope * xs[k]);
      ss += r * r;
    }
    f.slope_se = std::sqrt(ss / static_cast<double>(n - 2) / sxx);
  }
  return f;
}

// log(sum(exp(xs))) without overflow; -inf for an empty or all -inf input.
inline double log_sum_exp(const std::vector<double>& xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace ltlab
