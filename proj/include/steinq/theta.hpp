#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "steinq/norms.hpp"
#include "steinq/paths.hpp"
#include "steinq/queues.hpp"
#include "steinq/rng.hpp"

namespace steinq {

struct ThetaImage {
  double initial;
  Path residual;  // f - f(0) + tau \int f, null at 0
};

/// Forward transform f -> (f(0), f - f(0) + tau \int_0^. f).
///
/// Step paths and exponential segments with zero drift map exactly to
/// piecewise-affine residuals (the exponential parts cancel against their own
/// integral). Piecewise-linear and grid paths get the residual exactly at
/// their knots, affine in between.
inline ThetaImage thetaForward(const Path& f, double tau) {
  const double T = f.horizon();
  const double f0 = f(0.0);
  if (f.kind() == PathKind::ExpSegment) {
    // With no drift term the exponential part of each segment cancels against
    // tau times its own integral exactly when the decays agree, leaving a
    // piecewise-affine residual:
    //   a + c e^{-tau d} - f0 + tau (cum + a d + c (1 - e^{-tau d})/tau)
    //     = a (1 + tau d) + c - f0 + tau cum.
    for (Eigen::Index i = 0; i < f.slopes().size(); ++i)
      if (f.slopes()[i] != 0.0)
        throw std::invalid_argument(
            "thetaForward: exponential segments with drift are not representable");
    if (f.tau() != tau)
      throw std::invalid_argument("thetaForward: segment decay must match tau");
    const ArrayXd& st = f.times();
    const ArrayXd& lev = f.values();
    const ArrayXd& ec = f.expCoefs();
    std::vector<double> knots{0.0}, values{0.0};
    double cum = 0.0;
    for (Eigen::Index i = 0; i < st.size(); ++i) {
      const double l = st[i];
      const double r = (i + 1 < st.size()) ? st[i + 1] : T;
      if (i > 0) {
        knots.push_back(l);
        values.push_back(f.leftLimit(l) - f0 + tau * cum);
        knots.push_back(l);
        values.push_back(f(l) - f0 + tau * cum);
      }
      cum += lev[i] * (r - l) + ec[i] * oneMinusExpNeg(tau * (r - l)) / tau;
    }
    knots.push_back(T);
    values.push_back(f.leftLimit(T) - f0 + tau * cum);
    const auto m = static_cast<Eigen::Index>(knots.size());
    ArrayXd k(m), v(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      k[i] = knots[i];
      v[i] = values[i];
    }
    return {f0, Path::linear(T, std::move(k), std::move(v))};
  }

  if (f.kind() == PathKind::Step) {
    const ArrayXd& jt = f.times();
    const ArrayXd& jv = f.values();
    std::vector<double> knots{0.0}, values{0.0};
    double cum = 0.0, level = f.stepInitial(), prev = 0.0;
    for (Eigen::Index i = 0; i < jt.size(); ++i) {
      const double t = jt[i];
      cum += level * (t - prev);
      knots.push_back(t);
      values.push_back(level - f0 + tau * cum);  // left limit at the jump
      level = jv[i];
      knots.push_back(t);
      values.push_back(level - f0 + tau * cum);
      prev = t;
    }
    cum += level * (T - prev);
    knots.push_back(T);
    values.push_back(level - f0 + tau * cum);
    const auto m = static_cast<Eigen::Index>(knots.size());
    ArrayXd k(m), v(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      k[i] = knots[i];
      v[i] = values[i];
    }
    return {f0, Path::linear(T, std::move(k), std::move(v))};
  }

  // piecewise linear / grid: exact trapezoid sums at the knots
  const ArrayXd b = f.breakpoints();
  std::vector<double> knots, values;
  double cum = 0.0;
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    if (i > 0) cum += 0.5 * (f(b[i - 1]) + f.leftLimit(b[i])) * (b[i] - b[i - 1]);
    const double left = f.leftLimit(b[i]);
    const double right = f(b[i]);
    if (i > 0 && left != right) {
      knots.push_back(b[i]);
      values.push_back(left - f0 + tau * cum);
    }
    knots.push_back(b[i]);
    values.push_back(right - f0 + tau * cum);
  }
  const auto m = static_cast<Eigen::Index>(knots.size());
  ArrayXd k(m), v(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    k[i] = knots[i];
    v[i] = values[i];
  }
  return {f0, Path::linear(T, std::move(k), std::move(v))};
}

/// Inverse transform: the unique rcll solution of
///   z(t) - z(0) = eta(t) - tau \int_0^t z(s) ds,  z(0) = x,
/// namely z(t) = x e^{-tau t} + eta(t) - tau \int_0^t e^{-tau(t-s)} eta(s) ds.
/// The convolution is evaluated segment-analytically, so the result is an
/// exact exponential-segment path.
inline Path thetaInverse(double x, const Path& eta, double tau) {
  if (!(tau > 0)) throw std::invalid_argument("thetaInverse: tau must be > 0");
  if (eta(0.0) != 0.0) throw std::domain_error("thetaInverse: eta(0) must be 0");
  if (eta.kind() == PathKind::ExpSegment)
    throw std::invalid_argument("thetaInverse: eta must be piecewise affine");
  const double T = eta.horizon();
  const auto pieces = detail::affinePieces(eta);
  std::vector<double> starts, level, expc;
  double g = 0.0;  // \int_0^l e^{-tau(l-s)} eta(s) ds at the current piece start
  for (std::size_t i = 0; i < pieces.left.size(); ++i) {
    const double l = pieces.left[i], r = pieces.right[i];
    const double h = r - l;
    if (h <= 0) continue;
    const double alpha = pieces.vLeft[i];
    const double beta = (pieces.vRight[i] - pieces.vLeft[i]) / h;
    starts.push_back(l);
    level.push_back(beta / tau);
    expc.push_back(x * std::exp(-tau * l) - tau * g + alpha - beta / tau);
    const double em = oneMinusExpNeg(tau * h);
    g = std::exp(-tau * h) * g + alpha * em / tau + beta * (h - em / tau) / tau;
  }
  const auto m = static_cast<Eigen::Index>(starts.size());
  ArrayXd s(m), a(m), b(m), c(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    s[i] = starts[i];
    a[i] = level[i];
    b[i] = 0.0;
    c[i] = expc[i];
  }
  return Path::expSegments(T, tau, std::move(s), std::move(a), std::move(b), std::move(c));
}

/// Standard Brownian motion sampled on the uniform m-point grid.
inline Path sampleBrownianMotion(double T, int m, RandomStream& rng) {
  if (m < 2) throw std::invalid_argument("sampleBrownianMotion: need m >= 2");
  ArrayXd v(m);
  v[0] = 0.0;
  const double sd = std::sqrt(T / (m - 1));
  for (int i = 1; i < m; ++i) v[i] = v[i - 1] + sd * rng.gaussian();
  return Path::grid(T, std::move(v));
}

namespace detail {

inline void checkGrid(const Eigen::ArrayXd& grid) {
  if (grid.size() < 2 || grid[0] != 0.0)
    throw std::invalid_argument("sampler grid must start at 0 and have >= 2 points");
  for (Eigen::Index i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw std::invalid_argument("sampler grid must be strictly increasing");
}

}  // namespace detail

/// Time-changed Brownian motion B(gamma(t)) on a grid: independent Gaussian
/// increments of variance gamma(t_{k+1}) - gamma(t_k), the exact
/// finite-dimensional law.
inline Path sampleTimeChangedBm(double lambda, double mu, const Eigen::ArrayXd& grid,
                                RandomStream& rng) {
  detail::checkGrid(grid);
  ArrayXd v(grid.size());
  v[0] = 0.0;
  for (Eigen::Index i = 1; i < grid.size(); ++i) {
    const double dv = gammaFn(grid[i], lambda, mu) - gammaFn(grid[i - 1], lambda, mu);
    v[i] = v[i - 1] + std::sqrt(dv) * rng.gaussian();
  }
  ArrayXd k = grid;
  return Path::linear(grid[grid.size() - 1], std::move(k), std::move(v));
}

/// Variance of the exact Ornstein-Uhlenbeck transition over [t0, t1] driven
/// by intensity h(s) = lambda (2 - e^{-mu s}):
///   \int_{t0}^{t1} e^{-2 mu (t1 - s)} h(s) ds.
inline double ouTransitionVariance(double lambda, double mu, double t0, double t1) {
  const double d = t1 - t0;
  return (lambda / mu) *
         (oneMinusExpNeg(2.0 * mu * d) - (std::exp(-mu * t1) - std::exp(-mu * (2.0 * t1 - t0))));
}

/// Exact-in-distribution sample of the limiting Ornstein-Uhlenbeck process
///   X(t) = \int_0^t e^{-mu(t-s)} sqrt(h(s)) dB(s),  h(s) = lambda(2 - e^{-mu s}),
/// via exact Gaussian transitions (no Euler discretization). When `pairedBg`
/// is given, the same standard normals drive a time-changed Brownian path
/// with increment variances gamma(t_{k+1}) - gamma(t_k).
inline Path sampleOuLimit(double lambda, double mu, const Eigen::ArrayXd& grid, RandomStream& rng,
                          Path* pairedBg = nullptr) {
  detail::checkGrid(grid);
  ArrayXd v(grid.size()), w(grid.size());
  v[0] = 0.0;
  w[0] = 0.0;
  for (Eigen::Index i = 1; i < grid.size(); ++i) {
    const double z = rng.gaussian();
    const double varG = ouTransitionVariance(lambda, mu, grid[i - 1], grid[i]);
    v[i] = std::exp(-mu * (grid[i] - grid[i - 1])) * v[i - 1] + std::sqrt(varG) * z;
    const double dg = gammaFn(grid[i], lambda, mu) - gammaFn(grid[i - 1], lambda, mu);
    w[i] = w[i - 1] + std::sqrt(dg) * z;
  }
  const double T = grid[grid.size() - 1];
  if (pairedBg) {
    ArrayXd k = grid;
    *pairedBg = Path::linear(T, std::move(k), std::move(w));
  }
  ArrayXd k = grid;
  return Path::linear(T, std::move(k), std::move(v));
}

}  // namespace steinq
