#pragma once

#include <cmath>
#include <limits>
#include <algorithm>
#include <stdexcept>

namespace steinq {

/// Gamma function by the Lanczos approximation (g = 7, 9 terms).
/// Relative error < 1e-13 on the positive axis.
inline double gammaLanczos(double x) {
  static const double g = 7.0;
  static const double coef[9] = {
      0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
      771.32342877765313,   -176.61502916214059,   12.507343278686905,
      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  if (x < 0.5) {
    // reflection formula
    return 3.14159265358979323846 /
           (std::sin(3.14159265358979323846 * x) * gammaLanczos(1.0 - x));
  }
  x -= 1.0;
  double a = coef[0];
  const double t = x + g + 0.5;
  for (int i = 1; i < 9; ++i) a += coef[i] / (x + i);
  return std::sqrt(6.283185307179586476925287) * std::pow(t, x + 0.5) *
         std::exp(-t) * a;
}

/// Regularized lower incomplete gamma P(a, x). Series for x < a + 1,
/// continued fraction otherwise.
inline double regularizedGammaP(double a, double x) {
  if (!(a > 0) || x < 0) throw std::invalid_argument("regularizedGammaP: bad arguments");
  if (x == 0) return 0.0;
  const double lgA = std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 1000; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lgA);
  }
  // Lentz continued fraction for Q(a,x)
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  const double q = std::exp(-x + a * std::log(x) - lgA) * h;
  return 1.0 - q;
}

/// Upper quantile of the chi-square distribution: smallest x with
/// P(df/2, x/2) >= prob. Bisection on the regularized incomplete gamma.
inline double chiSquareQuantile(double df, double prob) {
  if (!(df > 0) || !(prob > 0 && prob < 1))
    throw std::invalid_argument("chiSquareQuantile: bad arguments");
  double lo = 0.0, hi = df;
  while (regularizedGammaP(df / 2.0, hi / 2.0) < prob) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (regularizedGammaP(df / 2.0, mid / 2.0) < prob)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-12 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

inline double normalCdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Survival function of the Kolmogorov distribution,
/// Q(lam) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lam^2).
inline double kolmogorovSurvival(double lam) {
  if (lam <= 0) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lam * lam);
    sum += sign * term;
    if (term < 1e-18) break;
    sign = -sign;
  }
  return std::min(1.0, std::max(0.0, 2.0 * sum));
}

/// Two-sample Kolmogorov-Smirnov: D statistic and asymptotic p-value with the
/// Stephens small-sample correction. Ties are allowed (the ECDF supremum is
/// taken over the pooled sample), which only makes the test conservative.
struct KsResult {
  double statistic;
  double pValue;
};

template <class Vec>
KsResult twoSampleKs(Vec a, Vec b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("twoSampleKs: samples too small");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() && ib < b.size()) {
    const double x = std::min(a[ia], b[ib]);
    while (ia < a.size() && a[ia] <= x) ++ia;
    while (ib < b.size() && b[ib] <= x) ++ib;
    d = std::max(d, std::fabs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  const double lam = (ne + 0.12 + 0.11 / ne) * d;
  return {d, kolmogorovSurvival(lam)};
}

/// Wilson score interval for a binomial proportion at ~95% confidence.
struct WilsonInterval {
  double estimate;
  double low;
  double high;
};

inline WilsonInterval wilsonInterval(long successes, long trials, double z = 1.959963984540054) {
  if (trials <= 0) throw std::invalid_argument("wilsonInterval: trials must be > 0");
  const double nD = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / nD;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nD;
  const double center = (p + z2 / (2.0 * nD)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nD + z2 / (4.0 * nD * nD));
  return {p, std::max(0.0, center - half), std::min(1.0, center + half)};
}

}  // namespace steinq
