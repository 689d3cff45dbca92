#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "steinq/parallel.hpp"
#include "steinq/quadrature.hpp"
#include "steinq/rng.hpp"

namespace steinq {

struct MarkedPoint {
  double time;
  double mark;
};

/// Finite configuration of marked atoms on [0, horizon], sorted by time.
/// Simultaneous times are kept in insertion order and flagged.
class PointConfiguration {
 public:
  PointConfiguration(std::vector<MarkedPoint> pts, double horizon)
      : pts_(std::move(pts)), horizon_(horizon) {
    if (!(horizon > 0)) throw std::invalid_argument("PointConfiguration: horizon must be > 0");
    std::stable_sort(pts_.begin(), pts_.end(),
                     [](const MarkedPoint& a, const MarkedPoint& b) { return a.time < b.time; });
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      if (pts_[i].time < 0 || pts_[i].time > horizon_)
        throw std::invalid_argument("PointConfiguration: atom outside [0,T]");
      if (i > 0 && pts_[i].time == pts_[i - 1].time) tie_ = true;
    }
  }

  std::size_t size() const { return pts_.size(); }
  const MarkedPoint& operator[](std::size_t i) const { return pts_[i]; }
  double horizon() const { return horizon_; }
  bool tieFlagged() const { return tie_; }
  const std::vector<MarkedPoint>& points() const { return pts_; }

  /// Copy of the configuration with one extra atom, inserted in time order.
  PointConfiguration withPoint(double time, double mark) const {
    PointConfiguration out(*this);
    const auto at = std::upper_bound(
        out.pts_.begin(), out.pts_.end(), time,
        [](double t, const MarkedPoint& p) { return t < p.time; });
    if (at != out.pts_.begin() && std::prev(at)->time == time) out.tie_ = true;
    out.pts_.insert(at, {time, mark});
    return out;
  }

 private:
  std::vector<MarkedPoint> pts_;
  double horizon_;
  bool tie_ = false;
};

/// Control measure of the driving marked Poisson point process.
///  - HomogeneousLine: rate ds, no marks
///  - MM1Marks: n(lam+mu) ds x ( lam/(lam+mu) e_{+1} + mu/(lam+mu) e_{-1} )
///  - ServiceMarks: lam n ds x mu e^{-mu z} dz
struct ControlMeasure {
  enum class Kind { HomogeneousLine, MM1Marks, ServiceMarks };

  Kind kind;
  double horizon;
  double rate = 0;
  double lambda = 0, mu = 0;
  int n = 1;

  static ControlMeasure homogeneousLine(double rate, double horizon) {
    if (!(rate > 0) || !(horizon > 0))
      throw std::invalid_argument("ControlMeasure: rate and horizon must be > 0");
    ControlMeasure m;
    m.kind = Kind::HomogeneousLine;
    m.rate = rate;
    m.horizon = horizon;
    return m;
  }
  static ControlMeasure mm1Marks(double lambda, double mu, int n, double horizon) {
    if (!(lambda > 0) || !(mu > 0) || n < 1 || !(horizon > 0))
      throw std::invalid_argument("ControlMeasure: bad M/M/1 mark parameters");
    ControlMeasure m;
    m.kind = Kind::MM1Marks;
    m.lambda = lambda;
    m.mu = mu;
    m.n = n;
    m.horizon = horizon;
    return m;
  }
  static ControlMeasure serviceMarks(double lambda, double mu, int n, double horizon) {
    if (!(lambda > 0) || !(mu > 0) || n < 1 || !(horizon > 0))
      throw std::invalid_argument("ControlMeasure: bad service mark parameters");
    ControlMeasure m;
    m.kind = Kind::ServiceMarks;
    m.lambda = lambda;
    m.mu = mu;
    m.n = n;
    m.horizon = horizon;
    return m;
  }

  /// Intensity of atom times on the line.
  double timeRate() const {
    switch (kind) {
      case Kind::HomogeneousLine:
        return rate;
      case Kind::MM1Marks:
        return n * (lambda + mu);
      case Kind::ServiceMarks:
        return n * lambda;
    }
    return 0;
  }

  double totalMass() const { return timeRate() * horizon; }
};

/// Deterministic integrand over [0,T] x marks with a declared piecewise
/// structure. `timeBreaks` must list the discontinuity abscissae in time;
/// `markBreaks`, when given, lists the z-breakpoints at a fixed time, beyond
/// the last of which the kernel is constant in z. Builders attach exact
/// first/second moments against the intended measure when they know them.
struct DeterministicKernel {
  std::function<double(double, double)> eval;
  Eigen::ArrayXd timeBreaks;
  std::function<Eigen::ArrayXd(double)> markBreaks;
  std::optional<double> compensator;
  std::optional<double> secondMoment;
};

namespace detail {

inline std::vector<double> timeEdges(const ControlMeasure& m, const Eigen::ArrayXd& breaks,
                                     const std::vector<double>& extra = {}) {
  std::vector<double> edges{0.0, m.horizon};
  for (Eigen::Index i = 0; i < breaks.size(); ++i)
    if (breaks[i] > 0 && breaks[i] < m.horizon) edges.push_back(breaks[i]);
  for (double e : extra)
    if (e > 0 && e < m.horizon) edges.push_back(e);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

}  // namespace detail

/// \int g dnu for a deterministic integrand with declared structure.
/// Marks are summed exactly for the two-atom mark law; exponential service
/// marks integrate by segmented Gauss-Kronrod with an analytic tail.
inline double measureIntegral(const ControlMeasure& m,
                              const std::function<double(double, double)>& g,
                              const Eigen::ArrayXd& timeBreaks,
                              const std::function<Eigen::ArrayXd(double)>& markBreaks = nullptr,
                              const QuadratureSpec& spec = {1e-10, 1e-12, 40},
                              const std::vector<double>& extraTimeEdges = {}) {
  const auto edges = detail::timeEdges(m, timeBreaks, extraTimeEdges);
  switch (m.kind) {
    case ControlMeasure::Kind::HomogeneousLine:
      return m.rate * integrateAdaptiveMulti([&](double s) { return g(s, 0.0); }, edges, spec);
    case ControlMeasure::Kind::MM1Marks: {
      const double pPlus = m.lambda / (m.lambda + m.mu);
      const double pMinus = m.mu / (m.lambda + m.mu);
      return m.timeRate() *
             integrateAdaptiveMulti(
                 [&](double s) { return pPlus * g(s, 1.0) + pMinus * g(s, -1.0); }, edges, spec);
    }
    case ControlMeasure::Kind::ServiceMarks: {
      const double mu = m.mu;
      auto inner = [&](double s) {
        std::vector<double> zEdges{0.0};
        double zLast;
        bool constantTail;
        if (markBreaks) {
          const Eigen::ArrayXd zb = markBreaks(s);
          for (Eigen::Index i = 0; i < zb.size(); ++i)
            if (zb[i] > 0) zEdges.push_back(zb[i]);
          std::sort(zEdges.begin(), zEdges.end());
          zEdges.erase(std::unique(zEdges.begin(), zEdges.end()), zEdges.end());
          zLast = zEdges.back();
          constantTail = true;
        } else {
          // no declared structure in z: truncate where the exponential mass
          // is negligible
          zLast = 46.0 / mu + m.horizon;
          for (double z = 1.0 / mu; z < zLast; z *= 2.0) zEdges.push_back(z);
          zEdges.push_back(zLast);
          constantTail = false;
        }
        QuadratureSpec zSpec = spec;
        zSpec.absTol = std::max(spec.absTol / (m.timeRate() * m.horizon + 1.0), 1e-14);
        double v = integrateAdaptiveMulti(
            [&](double z) { return g(s, z) * mu * std::exp(-mu * z); }, zEdges, zSpec);
        if (constantTail) v += g(s, zLast + 1.0) * std::exp(-mu * zLast);
        return v;
      };
      return m.timeRate() * integrateAdaptiveMulti(inner, edges, spec);
    }
  }
  return 0;
}

/// Poisson process on [0, horizon] with constant intensity; atom count is
/// Poisson(rate * horizon), times iid uniform sorted.
inline PointConfiguration samplePoissonLine(double rate, double horizon, RandomStream& rng) {
  if (!(rate > 0) || !(horizon > 0))
    throw std::invalid_argument("samplePoissonLine: rate and horizon must be > 0");
  const long count = rng.poisson(rate * horizon);
  std::vector<MarkedPoint> pts;
  pts.reserve(count);
  for (long i = 0; i < count; ++i) pts.push_back({rng.uniform() * horizon, 0.0});
  return PointConfiguration(std::move(pts), horizon);
}

/// Marked Poisson point process with the given control measure.
inline PointConfiguration sampleMarkedPpp(const ControlMeasure& m, RandomStream& rng) {
  const long count = rng.poisson(m.totalMass());
  std::vector<MarkedPoint> pts;
  pts.reserve(count);
  switch (m.kind) {
    case ControlMeasure::Kind::HomogeneousLine:
      for (long i = 0; i < count; ++i) pts.push_back({rng.uniform() * m.horizon, 0.0});
      break;
    case ControlMeasure::Kind::MM1Marks: {
      const double pPlus = m.lambda / (m.lambda + m.mu);
      for (long i = 0; i < count; ++i) {
        const double t = rng.uniform() * m.horizon;
        pts.push_back({t, rng.uniform() < pPlus ? 1.0 : -1.0});
      }
      break;
    }
    case ControlMeasure::Kind::ServiceMarks:
      for (long i = 0; i < count; ++i)
        pts.push_back({rng.uniform() * m.horizon, rng.exponential(m.mu)});
      break;
  }
  return PointConfiguration(std::move(pts), m.horizon);
}

/// Divergence (compensated integral) of a deterministic kernel:
/// sum of u over the atoms minus \int u dnu.
inline double divergence(const DeterministicKernel& u, const PointConfiguration& config,
                         const ControlMeasure& m) {
  if (u.timeBreaks.size() == 0 && !u.compensator)
    throw std::invalid_argument(
        "divergence: kernel has no declared piecewise structure and no exact compensator");
  const double comp =
      u.compensator ? *u.compensator : measureIntegral(m, u.eval, u.timeBreaks, u.markBreaks);
  double atomSum = 0.0;
  for (const auto& pt : config.points()) atomSum += u.eval(pt.time, pt.mark);
  return atomSum - comp;
}

using ConfigurationFunctional = std::function<double(const PointConfiguration&)>;

struct CampbellMeckeResult {
  double lhs, lhsSE;
  double rhs, rhsSE;
  double combinedSE() const { return std::sqrt(lhsSE * lhsSE + rhsSE * rhsSE); }
};

/// Monte Carlo check of the integration-by-parts identity
///   E[F delta_nu(u)] = E[ \int D_x F u(x) dnu(x) ],
/// with D_x F(c) = F(c + e_x) - F(c). Both sides come back with standard
/// errors; the inner dnu-integral reuses the kernel's declared structure plus
/// the sampled atom times as quadrature breakpoints.
inline CampbellMeckeResult campbellMeckeCheck(const ConfigurationFunctional& F,
                                              const DeterministicKernel& u,
                                              const ControlMeasure& m, std::size_t replications,
                                              const RandomStream& base) {
  if (replications < 2) throw std::invalid_argument("campbellMeckeCheck: need >= 2 replications");
  std::vector<double> lhs(replications), rhs(replications);
  const QuadratureSpec spec{1e-9, 1e-9, 40};
  parallelFor(replications, [&](std::size_t r) {
    RandomStream rng = base.substream(r);
    const PointConfiguration config = sampleMarkedPpp(m, rng);
    const double Fc = F(config);
    if (!(std::fabs(Fc) < 1e12))
      throw std::runtime_error("campbellMeckeCheck: functional out of bounds");
    lhs[r] = Fc * divergence(u, config, m);
    std::vector<double> atomTimes;
    atomTimes.reserve(config.size());
    for (const auto& pt : config.points()) atomTimes.push_back(pt.time);
    auto integrand = [&](double s, double mark) {
      return (F(config.withPoint(s, mark)) - Fc) * u.eval(s, mark);
    };
    rhs[r] = measureIntegral(m, integrand, u.timeBreaks, u.markBreaks, spec, atomTimes);
  });
  auto meanSE = [](const std::vector<double>& v) {
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size() - 1);
    return std::pair<double, double>(mean, std::sqrt(var / static_cast<double>(v.size())));
  };
  const auto [lm, ls] = meanSE(lhs);
  const auto [rm, rs] = meanSE(rhs);
  return {lm, ls, rm, rs};
}

/// Kernel u(s, r) = scale * r * 1_{[a,b)}(s) with exact moments against the
/// two-atom mark measure.
inline DeterministicKernel signedStripKernel(const ControlMeasure& m, double a, double b,
                                             double scale) {
  if (m.kind != ControlMeasure::Kind::MM1Marks)
    throw std::invalid_argument("signedStripKernel: needs the +-1 mark measure");
  DeterministicKernel u;
  u.eval = [a, b, scale](double s, double r) { return (s >= a && s < b) ? scale * r : 0.0; };
  u.timeBreaks = Eigen::ArrayXd(2);
  u.timeBreaks << a, b;
  const double pPlus = m.lambda / (m.lambda + m.mu);
  const double pMinus = m.mu / (m.lambda + m.mu);
  u.compensator = m.timeRate() * (b - a) * scale * (pPlus - pMinus);
  u.secondMoment = m.timeRate() * (b - a) * scale * scale;
  return u;
}

/// Kernel u(s, z) = 1_{[a,b)}(s) (no mark dependence) with exact moments.
inline DeterministicKernel timeIndicatorKernel(const ControlMeasure& m, double a, double b) {
  DeterministicKernel u;
  u.eval = [a, b](double s, double) { return (s >= a && s < b) ? 1.0 : 0.0; };
  u.timeBreaks = Eigen::ArrayXd(2);
  u.timeBreaks << a, b;
  u.compensator = m.timeRate() * (b - a);
  u.secondMoment = m.timeRate() * (b - a);
  return u;
}

/// \int u v dnu for two signed strip kernels over the same mark measure.
inline double stripInnerProduct(const ControlMeasure& m, double a1, double b1, double s1,
                                double a2, double b2, double s2) {
  const double lo = std::max(a1, a2), hi = std::min(b1, b2);
  return hi > lo ? m.timeRate() * (hi - lo) * s1 * s2 : 0.0;
}

}  // namespace steinq
