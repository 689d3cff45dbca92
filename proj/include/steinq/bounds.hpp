#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "steinq/norms.hpp"
#include "steinq/parallel.hpp"
#include "steinq/rng.hpp"
#include "steinq/theta.hpp"

namespace steinq {

/// Principal branch of the Lambert W function (w e^w = x, x >= -1/e),
/// Halley iteration from a piecewise initial guess.
inline double lambertW0(double x) {
  const double minArg = -std::exp(-1.0);
  if (x < minArg - 1e-14) throw std::domain_error("lambertW0: argument below -1/e");
  if (x == 0.0) return 0.0;
  double w;
  if (x < -0.25) {
    // branch-point expansion in sqrt(2(1 + e x))
    const double pbr = std::sqrt(std::max(0.0, 2.0 * (1.0 + std::exp(1.0) * x)));
    w = -1.0 + pbr - pbr * pbr / 3.0 + 11.0 * pbr * pbr * pbr / 72.0;
  } else if (x < std::exp(1.0)) {
    w = x / (1.0 + x);
  } else {
    const double lx = std::log(x);
    w = lx - std::log(lx);
  }
  for (int it = 0; it < 60; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
    const double step = f / denom;
    w -= step;
    if (std::fabs(step) <= 1e-15 * (1.0 + std::fabs(w))) break;
  }
  return w;
}

/// Moment bound for the maximum of n Poisson(nu) variables (dependence
/// allowed). The normative form uses the Lambert function on
/// a = log(n/e^nu)/e^nu; the log n/log log n asymptotic form is reported
/// only when its denominator log(a) - log(log(a)) is safely away from zero,
/// with the validity threshold n >= exp(e^{nu+1} + nu) attached.
struct MaxPoissonBound {
  double wForm;
  double a;
  double asymptoticBound;
  bool asymptoticValid;
  double validityThresholdN;
};

inline MaxPoissonBound maxPoissonBound(double n, double nu) {
  if (!(n >= 2)) throw std::invalid_argument("maxPoissonBound: need n >= 2");
  if (!(nu > 0)) throw std::invalid_argument("maxPoissonBound: need nu > 0");
  const double logRatio = std::log(n) - nu;  // log(n / e^nu)
  const double a = logRatio / std::exp(nu);
  if (!(a > 0)) throw std::domain_error("maxPoissonBound: log(n/e^nu) must be positive");
  MaxPoissonBound out;
  out.a = a;
  out.wForm = logRatio / lambertW0(a);
  out.validityThresholdN = std::exp(std::exp(nu + 1.0) + nu);
  out.asymptoticValid = false;
  out.asymptoticBound = std::numeric_limits<double>::quiet_NaN();
  // The asymptotic display substitutes W(a) ~ log a - log log a, which needs
  // log a safely positive; for moderate n log a sits near zero and the
  // substitution is meaningless, so only the W-form is reported there.
  if (a > 1.0 && std::log(a) >= 0.5) {
    out.asymptoticValid = true;
    out.asymptoticBound = logRatio / (std::log(a) - std::log(std::log(a)));
  }
  return out;
}

/// Interpolation-gap parameters for a Markov jump process with jump
/// amplitudes bounded by J and jump intensities bounded by n alpha.
struct JumpBoundParams {
  double J;      // max jump amplitude
  double alpha;  // intensity scale
  double n;
  double T;
};

/// 2 J log n / log log n, the uniform bound on the expected sup gap between
/// the process and its n-point affine interpolation.
inline double interpolationGapBound(double J, double n) {
  if (!(J >= 1)) throw std::invalid_argument("interpolationGapBound: need J >= 1");
  if (!(n >= 3)) throw std::domain_error("interpolationGapBound: need n >= 3 (log log n > 0)");
  return 2.0 * J * std::log(n) / std::log(std::log(n));
}

inline double interpolationGapBound(const JumpBoundParams& p) {
  return interpolationGapBound(p.J, p.n);
}

/// Chebyshev bound: P(N_{n lambda}(T) >= 2 lambda n T) <= 1/(lambda n T).
inline double chebyshevTauBound(double lambda, double n, double T) {
  if (!(lambda > 0) || !(n > 0) || !(T > 0))
    throw std::invalid_argument("chebyshevTauBound: arguments must be positive");
  return 1.0 / (lambda * n * T);
}

struct GapEstimate {
  double estimate;
  double se;
};

/// Monte Carlo estimate of E || pi_n B - B ||_{eta,p} for a standard Brownian
/// motion sampled on a refinement grid of m cells (m a multiple of n,
/// m >= 16 n).
inline GapEstimate brownianInterpolationGap(double eta, double p, int n, int M, int m,
                                            const RandomStream& base) {
  if (!(eta > 0 && eta < 0.5))
    throw std::invalid_argument("brownianInterpolationGap: need 0 < eta < 1/2");
  if (m < 16 * n)
    throw std::invalid_argument("brownianInterpolationGap: refinement m must be >= 16 n");
  if (m % n != 0)
    throw std::invalid_argument("brownianInterpolationGap: m must be a multiple of n");
  const NormOrder ord(eta, p);
  std::vector<double> norms(M);
  parallelFor(static_cast<std::size_t>(M), [&](std::size_t r) {
    RandomStream rng = base.substream(r);
    const Path b = sampleBrownianMotion(1.0, m + 1, rng);
    const int stride = m / n;
    ArrayXd diff(m + 1);
    for (int i = 0; i <= m; ++i) {
      const int cell = std::min(i / stride, n - 1);
      const double frac = static_cast<double>(i - cell * stride) / stride;
      const double interp =
          (1.0 - frac) * b.values()[cell * stride] + frac * b.values()[(cell + 1) * stride];
      diff[i] = interp - b.values()[i];
    }
    norms[r] = sobolevNorm(Path::grid(1.0, std::move(diff)), ord);
  });
  double mean = 0;
  for (double v : norms) mean += v;
  mean /= M;
  double var = 0;
  for (double v : norms) var += (v - mean) * (v - mean);
  var /= (M - 1);
  return {mean, std::sqrt(var / M)};
}

}  // namespace steinq
