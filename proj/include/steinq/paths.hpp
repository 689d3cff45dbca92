#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <vector>

#include "steinq/quadrature.hpp"

namespace steinq {

using Eigen::ArrayXd;

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class PathKind { Step, Linear, Grid, ExpSegment };

/// A real function on [0, horizon] in one of four exact representations:
///
///  - Step: right-continuous piecewise constant, jumps at given times.
///  - Linear: piecewise affine through knots; a knot value may be repeated at
///    the same abscissa to encode a jump (left value first, right value
///    second), so the class covers rcll piecewise-affine functions.
///  - Grid: piecewise affine on a uniform mesh, values at i*T/(m-1).
///  - ExpSegment: on each segment [t_k, t_{k+1}) the value is
///    a_k + b_k (t - t_k) + c_k exp(-tau (t - t_k)). Produced by the
///    Ornstein-Uhlenbeck machinery (fluid limits with exponential relaxation
///    and the inverse Theta transform) where exactness matters.
///
/// Values are immutable after construction; all queries are const.
class Path {
 public:
  static Path step(double horizon, double initial, ArrayXd jumpTimes, ArrayXd values) {
    if (!(horizon > 0)) throw std::invalid_argument("Path::step: horizon must be > 0");
    if (jumpTimes.size() != values.size())
      throw ShapeError("Path::step: jumpTimes/values size mismatch");
    for (Eigen::Index i = 0; i < jumpTimes.size(); ++i) {
      if (jumpTimes[i] < 0 || jumpTimes[i] > horizon)
        throw std::invalid_argument("Path::step: jump outside [0,T]");
      if (i > 0 && jumpTimes[i] < jumpTimes[i - 1])
        throw std::invalid_argument("Path::step: jump times must be nondecreasing");
    }
    Path p;
    p.kind_ = PathKind::Step;
    p.horizon_ = horizon;
    p.initial_ = initial;
    p.times_ = std::move(jumpTimes);
    p.values_ = std::move(values);
    return p;
  }

  static Path linear(double horizon, ArrayXd knots, ArrayXd values) {
    if (!(horizon > 0)) throw std::invalid_argument("Path::linear: horizon must be > 0");
    if (knots.size() != values.size() || knots.size() < 2)
      throw ShapeError("Path::linear: need matching knots/values, at least two");
    if (knots[0] != 0.0 || knots[knots.size() - 1] != horizon)
      throw std::invalid_argument("Path::linear: knots must include 0 and the horizon");
    for (Eigen::Index i = 1; i < knots.size(); ++i) {
      if (knots[i] < knots[i - 1])
        throw std::invalid_argument("Path::linear: knots must be nondecreasing");
      if (i >= 2 && knots[i] == knots[i - 2])
        throw std::invalid_argument("Path::linear: a knot may repeat at most once");
    }
    Path p;
    p.kind_ = PathKind::Linear;
    p.horizon_ = horizon;
    p.times_ = std::move(knots);
    p.values_ = std::move(values);
    return p;
  }

  static Path grid(double horizon, ArrayXd values) {
    if (!(horizon > 0)) throw std::invalid_argument("Path::grid: horizon must be > 0");
    if (values.size() < 2) throw ShapeError("Path::grid: mesh must have m >= 2");
    Path p;
    p.kind_ = PathKind::Grid;
    p.horizon_ = horizon;
    p.values_ = std::move(values);
    return p;
  }

  static Path expSegments(double horizon, double tau, ArrayXd starts, ArrayXd level,
                          ArrayXd slope, ArrayXd expCoef) {
    if (!(horizon > 0)) throw std::invalid_argument("Path::expSegments: horizon must be > 0");
    if (!(tau > 0)) throw std::invalid_argument("Path::expSegments: tau must be > 0");
    const auto n = starts.size();
    if (n < 1 || level.size() != n || slope.size() != n || expCoef.size() != n)
      throw ShapeError("Path::expSegments: coefficient arrays must match starts");
    if (starts[0] != 0.0)
      throw std::invalid_argument("Path::expSegments: first segment must start at 0");
    for (Eigen::Index i = 1; i < n; ++i)
      if (starts[i] <= starts[i - 1])
        throw std::invalid_argument("Path::expSegments: starts must be increasing");
    Path p;
    p.kind_ = PathKind::ExpSegment;
    p.horizon_ = horizon;
    p.tau_ = tau;
    p.times_ = std::move(starts);
    p.values_ = std::move(level);
    p.slope_ = std::move(slope);
    p.expc_ = std::move(expCoef);
    return p;
  }

  static Path constant(double horizon, double v) {
    ArrayXd knots(2), values(2);
    knots << 0.0, horizon;
    values << v, v;
    return linear(horizon, knots, values);
  }

  PathKind kind() const { return kind_; }
  double horizon() const { return horizon_; }
  double tau() const { return tau_; }
  const ArrayXd& times() const { return times_; }
  const ArrayXd& values() const { return values_; }
  const ArrayXd& slopes() const { return slope_; }
  const ArrayXd& expCoefs() const { return expc_; }
  double stepInitial() const { return initial_; }

  /// Right-continuous evaluation.
  double operator()(double t) const {
    t = clamp(t);
    switch (kind_) {
      case PathKind::Step: {
        const Eigen::Index i = countLeq(times_, t);
        return i == 0 ? initial_ : values_[i - 1];
      }
      case PathKind::Linear: {
        const Eigen::Index j = countLeq(times_, t) - 1;  // last knot <= t
        if (j < 0) return values_[0];
        if (j + 1 >= times_.size()) return values_[times_.size() - 1];
        if (times_[j] == t) return values_[j];
        return lerp(times_[j], values_[j], times_[j + 1], values_[j + 1], t);
      }
      case PathKind::Grid: {
        const Eigen::Index m = values_.size();
        const double h = horizon_ / static_cast<double>(m - 1);
        const double pos = t / h;
        Eigen::Index j = static_cast<Eigen::Index>(std::floor(pos));
        j = std::min(std::max<Eigen::Index>(j, 0), m - 2);
        return lerp(j * h, values_[j], (j + 1) * h, values_[j + 1], t);
      }
      case PathKind::ExpSegment: {
        const Eigen::Index j = std::max<Eigen::Index>(countLeq(times_, t) - 1, 0);
        const double dt = t - times_[j];
        return values_[j] + slope_[j] * dt + expc_[j] * std::exp(-tau_ * dt);
      }
    }
    return 0.0;
  }

  /// Left limit; at t = 0 this is the value itself.
  double leftLimit(double t) const {
    t = clamp(t);
    if (t == 0.0) return (*this)(0.0);
    switch (kind_) {
      case PathKind::Step: {
        const Eigen::Index i = countLess(times_, t);
        return i == 0 ? initial_ : values_[i - 1];
      }
      case PathKind::Linear: {
        const Eigen::Index j = countLess(times_, t) - 1;  // last knot < t
        if (j < 0) return values_[0];
        if (j + 1 < times_.size() && times_[j + 1] == t) return values_[j + 1];
        if (j + 1 >= times_.size()) return values_[times_.size() - 1];
        return lerp(times_[j], values_[j], times_[j + 1], values_[j + 1], t);
      }
      case PathKind::Grid:
        return (*this)(t);
      case PathKind::ExpSegment: {
        const Eigen::Index j = std::max<Eigen::Index>(countLess(times_, t) - 1, 0);
        const double dt = t - times_[j];
        return values_[j] + slope_[j] * dt + expc_[j] * std::exp(-tau_ * dt);
      }
    }
    return 0.0;
  }

  /// Sorted breakpoints of the representation, always including 0 and T.
  ArrayXd breakpoints() const {
    std::vector<double> b;
    b.push_back(0.0);
    switch (kind_) {
      case PathKind::Step:
      case PathKind::Linear:
      case PathKind::ExpSegment:
        for (Eigen::Index i = 0; i < times_.size(); ++i) b.push_back(times_[i]);
        break;
      case PathKind::Grid: {
        const Eigen::Index m = values_.size();
        const double h = horizon_ / static_cast<double>(m - 1);
        for (Eigen::Index i = 1; i + 1 < m; ++i) b.push_back(i * h);
        break;
      }
    }
    b.push_back(horizon_);
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return Eigen::Map<ArrayXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  }

  /// Exact integral over [0, t].
  double integral(double t) const {
    t = clamp(t);
    double acc = 0.0;
    switch (kind_) {
      case PathKind::Step: {
        double prev = 0.0, val = initial_;
        for (Eigen::Index i = 0; i < times_.size() && times_[i] < t; ++i) {
          acc += val * (times_[i] - prev);
          prev = times_[i];
          val = values_[i];
        }
        acc += val * (t - prev);
        return acc;
      }
      case PathKind::Linear: {
        for (Eigen::Index i = 0; i + 1 < times_.size() && times_[i] < t; ++i) {
          const double r = std::min(times_[i + 1], t);
          const double vr = r == times_[i + 1]
                                ? values_[i + 1]
                                : lerp(times_[i], values_[i], times_[i + 1], values_[i + 1], r);
          acc += 0.5 * (values_[i] + vr) * (r - times_[i]);
        }
        return acc;
      }
      case PathKind::Grid: {
        const Eigen::Index m = values_.size();
        const double h = horizon_ / static_cast<double>(m - 1);
        Eigen::Index full = static_cast<Eigen::Index>(std::floor(t / h));
        full = std::min(full, m - 1);
        for (Eigen::Index i = 0; i < full; ++i) acc += 0.5 * (values_[i] + values_[i + 1]) * h;
        if (full < m - 1 && t > full * h) {
          const double vr = (*this)(t);
          acc += 0.5 * (values_[full] + vr) * (t - full * h);
        }
        return acc;
      }
      case PathKind::ExpSegment: {
        for (Eigen::Index i = 0; i < times_.size() && times_[i] < t; ++i) {
          const double r = (i + 1 < times_.size()) ? std::min(times_[i + 1], t) : t;
          const double dt = r - times_[i];
          acc += values_[i] * dt + 0.5 * slope_[i] * dt * dt +
                 expc_[i] * oneMinusExpNeg(tau_ * dt) / tau_;
        }
        return acc;
      }
    }
    return acc;
  }

  double integralFull() const { return integral(horizon_); }

  /// f scaled by a constant factor (exact, representation preserved).
  Path scaled(double factor) const {
    Path p = *this;
    p.values_ *= factor;
    if (kind_ == PathKind::Step) p.initial_ *= factor;
    if (kind_ == PathKind::ExpSegment) {
      p.slope_ *= factor;
      p.expc_ *= factor;
    }
    return p;
  }

  /// Largest absolute value, at breakpoints and one-sided limits (exact for
  /// step/affine kinds; exponential segments add their interior extremum).
  double supAbs() const;

 private:
  static double lerp(double x0, double y0, double x1, double y1, double x) {
    return y0 + (y1 - y0) * ((x - x0) / (x1 - x0));
  }
  static Eigen::Index countLeq(const ArrayXd& a, double t) {
    return std::upper_bound(a.data(), a.data() + a.size(), t) - a.data();
  }
  static Eigen::Index countLess(const ArrayXd& a, double t) {
    return std::lower_bound(a.data(), a.data() + a.size(), t) - a.data();
  }
  double clamp(double t) const {
    if (t < 0.0 || t > horizon_) {
      if (t < -1e-12 || t > horizon_ * (1 + 1e-12) + 1e-12)
        throw std::invalid_argument("Path: evaluation outside [0,T]");
      return std::min(std::max(t, 0.0), horizon_);
    }
    return t;
  }

  PathKind kind_ = PathKind::Linear;
  double horizon_ = 1.0;
  double initial_ = 0.0;
  double tau_ = 0.0;
  ArrayXd times_;
  ArrayXd values_;
  ArrayXd slope_;
  ArrayXd expc_;
};

/// Affine interpolation on the mesh {i T / n}: the piecewise-linear path that
/// agrees with f at every mesh point.
inline Path interpolateAffine(const Path& f, int n) {
  if (n < 1) throw std::invalid_argument("interpolateAffine: n must be >= 1");
  const double T = f.horizon();
  ArrayXd knots(n + 1), values(n + 1);
  for (int i = 0; i <= n; ++i) {
    knots[i] = T * static_cast<double>(i) / n;
    values[i] = f(knots[i]);
  }
  knots[n] = T;
  return Path::linear(T, std::move(knots), std::move(values));
}

inline double Path::supAbs() const {
  const ArrayXd b = breakpoints();
  double best = 0.0;
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    best = std::max(best, std::fabs((*this)(b[i])));
    best = std::max(best, std::fabs(leftLimit(b[i])));
  }
  if (kind_ == PathKind::ExpSegment) {
    for (Eigen::Index i = 0; i + 1 < b.size(); ++i) {
      // extremum of a + b dt + c e^{-tau dt} inside the segment
      const Eigen::Index j = std::max<Eigen::Index>(countLeq(times_, b[i]) - 1, 0);
      const double bb = slope_[j], cc = expc_[j];
      if (bb != 0.0 && cc != 0.0 && bb / (cc * tau_) > 0.0) {
        const double dt = -std::log(bb / (cc * tau_)) / tau_;
        const double t = times_[j] + dt;
        if (t > b[i] && t < b[i + 1]) best = std::max(best, std::fabs((*this)(t)));
      }
    }
  }
  return best;
}

inline void to_json(nlohmann::json& j, const Path& p) {
  switch (p.kind()) {
    case PathKind::Step:
      j = {{"type", "step"},
           {"horizon", p.horizon()},
           {"initial", p.stepInitial()},
           {"jumps", std::vector<double>(p.times().data(), p.times().data() + p.times().size())},
           {"values",
            std::vector<double>(p.values().data(), p.values().data() + p.values().size())}};
      break;
    case PathKind::Linear:
      j = {{"type", "linear"},
           {"horizon", p.horizon()},
           {"knots", std::vector<double>(p.times().data(), p.times().data() + p.times().size())},
           {"values",
            std::vector<double>(p.values().data(), p.values().data() + p.values().size())}};
      break;
    case PathKind::Grid:
      j = {{"type", "grid"},
           {"horizon", p.horizon()},
           {"values",
            std::vector<double>(p.values().data(), p.values().data() + p.values().size())}};
      break;
    case PathKind::ExpSegment:
      j = {{"type", "expseg"},
           {"horizon", p.horizon()},
           {"tau", p.tau()},
           {"starts", std::vector<double>(p.times().data(), p.times().data() + p.times().size())},
           {"level",
            std::vector<double>(p.values().data(), p.values().data() + p.values().size())},
           {"slope", std::vector<double>(p.slopes().data(), p.slopes().data() + p.slopes().size())},
           {"expcoef",
            std::vector<double>(p.expCoefs().data(), p.expCoefs().data() + p.expCoefs().size())}};
      break;
  }
}

inline void from_json(const nlohmann::json& j, Path& p) {
  auto arr = [&](const char* key) {
    const auto v = j.at(key).get<std::vector<double>>();
    return Eigen::Map<const ArrayXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
  };
  const std::string type = j.at("type").get<std::string>();
  const double T = j.at("horizon").get<double>();
  if (type == "step")
    p = Path::step(T, j.at("initial").get<double>(), arr("jumps"), arr("values"));
  else if (type == "linear")
    p = Path::linear(T, arr("knots"), arr("values"));
  else if (type == "grid")
    p = Path::grid(T, arr("values"));
  else if (type == "expseg")
    p = Path::expSegments(T, j.at("tau").get<double>(), arr("starts"), arr("level"),
                          arr("slope"), arr("expcoef"));
  else
    throw std::invalid_argument("Path: unknown serialized type '" + type + "'");
}

}  // namespace steinq
