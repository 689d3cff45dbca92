#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "steinq/paths.hpp"
#include "steinq/ppp.hpp"
#include "steinq/rng.hpp"
#include "steinq/special.hpp"

namespace steinq {

struct QueueParams {
  double lambda;
  double mu;
  int n;
  double T;
  double x0;

  void validate() const {
    if (!(lambda > 0) || !(mu > 0)) throw std::invalid_argument("QueueParams: rates must be > 0");
    if (n < 1) throw std::invalid_argument("QueueParams: n must be >= 1");
    if (!(T > 0)) throw std::invalid_argument("QueueParams: T must be > 0");
    if (!(x0 >= 0)) throw std::invalid_argument("QueueParams: x0 must be >= 0");
  }

  /// lambda < mu and T <= x0/(mu-lambda): the window on which the fluid limit
  /// stays positive and the centered count behaves like a free random walk.
  bool mm1RegimeWindow() const {
    return lambda < mu && T <= x0 / (mu - lambda) + 1e-12;
  }
};

enum class QueueModel { MM1, MMInfty };

struct TrajectoryBundle {
  QueueModel model;
  QueueParams params;
  Path Ln;     // scaled count process, step path
  Path fluid;  // law-of-large-numbers limit
  Path Zn;     // exact centered-and-rescaled fluctuation path
  std::optional<Path> Yn;  // integrated fluctuation (infinite-server only)
  double tauZero = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;  // sampler seed tag carried for reproducibility
};

/// Fluid limit of the single-server queue: (x0 + (lambda-mu) t)^+.
inline Path fluidMm1(const QueueParams& p) {
  p.validate();
  const double drift = p.lambda - p.mu;
  const double tStar = drift < 0 ? p.x0 / (p.mu - p.lambda) : std::numeric_limits<double>::infinity();
  if (tStar > 0 && tStar < p.T) {
    ArrayXd k(3), v(3);
    k << 0.0, tStar, p.T;
    v << p.x0, 0.0, 0.0;
    return Path::linear(p.T, k, v);
  }
  ArrayXd k(2), v(2);
  k << 0.0, p.T;
  v << p.x0, std::max(0.0, p.x0 + drift * p.T);
  return Path::linear(p.T, k, v);
}

/// Fluid limit of the infinite-server queue started empty:
/// rho (1 - e^{-mu t}), as a single exact exponential segment.
inline Path fluidMmInfty(const QueueParams& p) {
  const double rho = p.lambda / p.mu;
  ArrayXd s(1), a(1), b(1), c(1);
  s << 0.0;
  a << rho;
  b << 0.0;
  c << -rho;
  return Path::expSegments(p.T, p.mu, s, a, b, c);
}

/// gamma(t) = 2 lambda t - (lambda/mu)(1 - e^{-mu t}); the quadratic
/// variation clock of the limiting integrated fluctuation.
inline double gammaFn(double t, double lambda, double mu) {
  if (t < 0) throw std::invalid_argument("gammaFn: t must be >= 0");
  return 2.0 * lambda * t - (lambda / mu) * oneMinusExpNeg(mu * t);
}

namespace detail {

struct EventWalk {
  std::vector<double> times;   // instants where the unscaled count changes
  std::vector<long> counts;    // count after the event
  long initial = 0;
};

inline Path stepFromWalk(const EventWalk& w, double T, double n) {
  ArrayXd t(static_cast<Eigen::Index>(w.times.size()));
  ArrayXd v(static_cast<Eigen::Index>(w.times.size()));
  for (std::size_t i = 0; i < w.times.size(); ++i) {
    t[static_cast<Eigen::Index>(i)] = w.times[i];
    v[static_cast<Eigen::Index>(i)] = static_cast<double>(w.counts[i]) / n;
  }
  return Path::step(T, static_cast<double>(w.initial) / n, std::move(t), std::move(v));
}

// Z = scale (Lbar - fluid) as an exact piecewise-affine path with jumps;
// fluid must be piecewise affine (single-server case).
inline Path affineFluctuation(const EventWalk& w, const Path& fluid, double T, double n,
                              double scale) {
  std::vector<double> knots, values;
  auto lbar = [&](std::size_t idx) {
    return (idx == 0 ? static_cast<double>(w.initial) : static_cast<double>(w.counts[idx - 1])) / n;
  };
  std::vector<double> bounds{0.0};
  const ArrayXd fb = fluid.breakpoints();
  for (Eigen::Index i = 0; i < fb.size(); ++i)
    if (fb[i] > 0 && fb[i] < T) bounds.push_back(fb[i]);
  bounds.push_back(T);
  std::sort(bounds.begin(), bounds.end());

  knots.push_back(0.0);
  values.push_back(scale * (lbar(0) - fluid(0.0)));
  std::size_t e = 0, b = 1;
  double level = lbar(0);
  while (true) {
    const double te = e < w.times.size() ? w.times[e] : std::numeric_limits<double>::infinity();
    const double tb = b < bounds.size() ? bounds[b] : std::numeric_limits<double>::infinity();
    if (std::isinf(te) && std::isinf(tb)) break;
    if (te <= tb) {
      // jump knot pair
      knots.push_back(te);
      values.push_back(scale * (level - fluid(te)));
      level = static_cast<double>(w.counts[e]) / n;
      knots.push_back(te);
      values.push_back(scale * (level - fluid(te)));
      if (te == tb) ++b;
      ++e;
    } else {
      // fluid kink (or horizon): continuous knot
      knots.push_back(tb);
      values.push_back(scale * (level - fluid(tb)));
      ++b;
    }
  }
  if (knots.back() != T) {
    knots.push_back(T);
    values.push_back(scale * (level - fluid(T)));
  }
  ArrayXd k(static_cast<Eigen::Index>(knots.size())), v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < knots.size(); ++i) {
    k[static_cast<Eigen::Index>(i)] = knots[i];
    v[static_cast<Eigen::Index>(i)] = values[i];
  }
  return Path::linear(T, std::move(k), std::move(v));
}

// Z = sqrt(n) (Lbar - rho(1 - e^{-mu t})) as exact exponential segments.
inline Path expFluctuation(const EventWalk& w, const QueueParams& p) {
  const double rho = p.lambda / p.mu;
  const double scale = std::sqrt(static_cast<double>(p.n));
  std::vector<double> starts{0.0};
  std::vector<double> level{scale * (static_cast<double>(w.initial) / p.n - rho)};
  std::vector<double> expc{scale * rho};
  for (std::size_t i = 0; i < w.times.size(); ++i) {
    const double t = w.times[i];
    if (t >= p.T) break;
    const double lb = static_cast<double>(w.counts[i]) / p.n;
    if (t == starts.back()) {
      level.back() = scale * (lb - rho);
      continue;
    }
    starts.push_back(t);
    level.push_back(scale * (lb - rho));
    expc.push_back(scale * rho * std::exp(-p.mu * t));
  }
  const auto m = static_cast<Eigen::Index>(starts.size());
  ArrayXd s(m), a(m), b(m), c(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    s[i] = starts[i];
    a[i] = level[i];
    b[i] = 0.0;
    c[i] = expc[i];
  }
  return Path::expSegments(p.T, p.mu, s, a, b, c);
}

// Y(t) = sqrt(n) ( Lbar(t) + mu \int_0^t Lbar - lambda t ), the integrated
// fluctuation, assembled from exact rectangle sums over the step structure.
// Equals Z(t) - Z(0) + mu \int Z because fluid + mu \int fluid = lambda t.
inline Path integratedFluctuation(const EventWalk& w, const QueueParams& p) {
  const double scale = std::sqrt(static_cast<double>(p.n));
  std::vector<double> knots{0.0};
  std::vector<double> values{scale * (static_cast<double>(w.initial) / p.n)};
  double cumInt = 0.0;
  double level = static_cast<double>(w.initial) / p.n;
  double prev = 0.0;
  for (std::size_t i = 0; i < w.times.size(); ++i) {
    const double t = std::min(w.times[i], p.T);
    if (t > prev) {
      cumInt += level * (t - prev);
      prev = t;
    }
    if (w.times[i] > p.T) break;
    const double yLeft = scale * (level + p.mu * cumInt - p.lambda * t);
    knots.push_back(t);
    values.push_back(yLeft);
    level = static_cast<double>(w.counts[i]) / p.n;
    knots.push_back(t);
    values.push_back(scale * (level + p.mu * cumInt - p.lambda * t));
  }
  if (prev < p.T) cumInt += level * (p.T - prev);
  knots.push_back(p.T);
  values.push_back(scale * (level + p.mu * cumInt - p.lambda * p.T));
  const auto m = static_cast<Eigen::Index>(knots.size());
  ArrayXd k(m), v(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    k[i] = knots[i];
    v[i] = values[i];
  }
  return Path::linear(p.T, std::move(k), std::move(v));
}

inline TrajectoryBundle mmInftyBundleFromWalk(EventWalk w, const QueueParams& p) {
  TrajectoryBundle out;
  out.model = QueueModel::MMInfty;
  out.params = p;
  out.Ln = stepFromWalk(w, p.T, static_cast<double>(p.n));
  out.fluid = fluidMmInfty(p);
  out.Zn = expFluctuation(w, p);
  out.Yn = integratedFluctuation(w, p);
  return out;
}

}  // namespace detail

/// Exact simulation of the accelerated single-server queue: two merged
/// uniformized Poisson streams with the down-jump suppressed at zero.
inline TrajectoryBundle simulateMm1(const QueueParams& p, RandomStream& rng) {
  p.validate();
  const double nD = static_cast<double>(p.n);
  const long upCount = rng.poisson(nD * p.lambda * p.T);
  const long downCount = rng.poisson(nD * p.mu * p.T);
  std::vector<double> up(upCount), down(downCount);
  for (long i = 0; i < upCount; ++i) up[i] = rng.uniform() * p.T;
  for (long i = 0; i < downCount; ++i) down[i] = rng.uniform() * p.T;
  std::sort(up.begin(), up.end());
  std::sort(down.begin(), down.end());

  detail::EventWalk w;
  w.initial = std::llround(nD * p.x0);
  w.times.reserve(upCount + downCount);
  w.counts.reserve(upCount + downCount);
  long count = w.initial;
  double tauZero = count == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  std::size_t iu = 0, id = 0;
  while (iu < up.size() || id < down.size()) {
    const double tu = iu < up.size() ? up[iu] : std::numeric_limits<double>::infinity();
    const double td = id < down.size() ? down[id] : std::numeric_limits<double>::infinity();
    if (tu <= td) {
      ++count;
      w.times.push_back(tu);
      w.counts.push_back(count);
      ++iu;
    } else {
      ++id;
      if (count > 0) {
        --count;
        w.times.push_back(td);
        w.counts.push_back(count);
        if (count == 0 && std::isinf(tauZero)) tauZero = td;
      }
    }
  }

  TrajectoryBundle out;
  out.model = QueueModel::MM1;
  out.params = p;
  out.Ln = detail::stepFromWalk(w, p.T, nD);
  out.fluid = fluidMm1(p);
  out.Zn = detail::affineFluctuation(w, out.fluid, p.T, nD,
                                     std::sqrt(nD) / std::sqrt(p.lambda + p.mu));
  out.tauZero = tauZero;
  return out;
}

/// Infinite-server sample from the space-time representation: arrivals on
/// [0,T] with exponential service marks; the count at t is the number of
/// atoms with arrival <= t and departure > t. Busy periods crossing the
/// horizon are truncated there.
inline TrajectoryBundle simulateMmInftyTrapeze(const QueueParams& p, RandomStream& rng) {
  p.validate();
  if (p.x0 != 0.0)
    throw std::domain_error("simulateMmInftyTrapeze: only the initially empty regime is supported");
  const double nD = static_cast<double>(p.n);
  const long K = rng.poisson(nD * p.lambda * p.T);
  std::vector<std::pair<double, int>> events;  // (time, +-1)
  events.reserve(2 * K);
  for (long i = 0; i < K; ++i) {
    const double x = rng.uniform() * p.T;
    const double z = rng.exponential(p.mu);
    events.push_back({x, +1});
    if (x + z <= p.T) events.push_back({x + z, -1});
  }
  std::sort(events.begin(), events.end());
  detail::EventWalk w;
  w.initial = 0;
  long count = 0;
  for (const auto& [t, d] : events) {
    count += d;
    w.times.push_back(t);
    w.counts.push_back(count);
  }
  return detail::mmInftyBundleFromWalk(std::move(w), p);
}

/// Infinite-server sample from the classic event loop with exponential
/// clocks; equal in distribution to the space-time construction.
inline TrajectoryBundle simulateMmInftyEvents(const QueueParams& p, RandomStream& rng) {
  p.validate();
  if (p.x0 != 0.0)
    throw std::domain_error("simulateMmInftyEvents: only the initially empty regime is supported");
  const double nD = static_cast<double>(p.n);
  detail::EventWalk w;
  w.initial = 0;
  long count = 0;
  double t = 0.0;
  for (;;) {
    const double rate = nD * p.lambda + p.mu * static_cast<double>(count);
    t += rng.exponential(rate);
    if (t > p.T) break;
    if (rng.uniform() < nD * p.lambda / rate)
      ++count;
    else
      --count;
    w.times.push_back(t);
    w.counts.push_back(count);
  }
  return detail::mmInftyBundleFromWalk(std::move(w), p);
}

inline void to_json(nlohmann::json& j, const TrajectoryBundle& b) {
  j = {{"model", b.model == QueueModel::MM1 ? "mm1" : "mminfty"},
       {"params",
        {{"lambda", b.params.lambda},
         {"mu", b.params.mu},
         {"n", b.params.n},
         {"T", b.params.T},
         {"x0", b.params.x0}}},
       {"seed", b.seed},
       {"scaled_count", b.Ln},
       {"fluid", b.fluid},
       {"fluctuation", b.Zn},
       {"tau_zero", std::isfinite(b.tauZero) ? nlohmann::json(b.tauZero) : nlohmann::json()}};
  if (b.Yn) j["integrated_fluctuation"] = *b.Yn;
}

inline void from_json(const nlohmann::json& j, TrajectoryBundle& b) {
  const std::string model = j.at("model").get<std::string>();
  b.model = model == "mm1" ? QueueModel::MM1 : QueueModel::MMInfty;
  const auto& p = j.at("params");
  b.params = {p.at("lambda").get<double>(), p.at("mu").get<double>(), p.at("n").get<int>(),
              p.at("T").get<double>(), p.at("x0").get<double>()};
  b.seed = j.value("seed", std::uint64_t{0});
  b.Ln = j.at("scaled_count").get<Path>();
  b.fluid = j.at("fluid").get<Path>();
  b.Zn = j.at("fluctuation").get<Path>();
  b.tauZero = j.at("tau_zero").is_null() ? std::numeric_limits<double>::infinity()
                                         : j.at("tau_zero").get<double>();
  if (j.contains("integrated_fluctuation"))
    b.Yn = j.at("integrated_fluctuation").get<Path>();
  else
    b.Yn.reset();
}

struct HittingTimeEstimate {
  double estimate;
  double low, high;  // Wilson interval
  long successes;
  long trials;
};

/// Monte Carlo estimate of P(tau_0 <= T), the probability that the unscaled
/// count empties before the horizon, in the regime where the fluid limit
/// stays strictly positive.
inline HittingTimeEstimate hittingTimeZeroStats(const QueueParams& p, long replications,
                                                const RandomStream& base) {
  if (!(p.lambda < p.mu)) throw std::domain_error("hittingTimeZeroStats: requires lambda < mu");
  if (p.T == 0.0) {
    const auto w = wilsonInterval(0, replications);
    return {0.0, w.low, w.high, 0, replications};
  }
  if (!(p.T < p.x0 / (p.mu - p.lambda)))
    throw std::domain_error("hittingTimeZeroStats: requires T < x0/(mu-lambda)");
  std::vector<char> hit(replications, 0);
  parallelFor(static_cast<std::size_t>(replications), [&](std::size_t r) {
    RandomStream rng = base.substream(r);
    const double nD = static_cast<double>(p.n);
    const long upCount = rng.poisson(nD * p.lambda * p.T);
    const long downCount = rng.poisson(nD * p.mu * p.T);
    std::vector<double> up(upCount), down(downCount);
    for (long i = 0; i < upCount; ++i) up[i] = rng.uniform() * p.T;
    for (long i = 0; i < downCount; ++i) down[i] = rng.uniform() * p.T;
    std::sort(up.begin(), up.end());
    std::sort(down.begin(), down.end());
    long count = std::llround(nD * p.x0);
    if (count == 0) {
      hit[r] = 1;
      return;
    }
    std::size_t iu = 0, id = 0;
    while (iu < up.size() || id < down.size()) {
      const double tu = iu < up.size() ? up[iu] : std::numeric_limits<double>::infinity();
      const double td = id < down.size() ? down[id] : std::numeric_limits<double>::infinity();
      if (tu <= td) {
        ++count;
        ++iu;
      } else {
        --count;
        ++id;
        if (count == 0) {
          hit[r] = 1;
          return;
        }
      }
    }
  });
  long successes = 0;
  for (char h : hit) successes += h;
  const auto w = wilsonInterval(successes, replications);
  return {static_cast<double>(successes) / static_cast<double>(replications), w.low, w.high,
          successes, replications};
}

}  // namespace steinq
