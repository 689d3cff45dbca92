#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "steinq/paths.hpp"
#include "steinq/special.hpp"

namespace steinq {

struct NormOrder {
  double eta;
  double p;
  NormOrder(double eta_, double p_) : eta(eta_), p(p_) {
    if (!(eta > 0 && eta <= 1)) throw std::invalid_argument("NormOrder: eta must be in (0,1]");
    if (!(p >= 1)) throw std::invalid_argument("NormOrder: p must be >= 1");
  }
  /// eta - 1/p, the Holder-embedding margin.
  double embeddingGap() const { return eta - 1.0 / p; }
};

struct DivergenceError : std::domain_error {
  using std::domain_error::domain_error;
};

namespace detail {

/// Piecewise-affine view of a step/linear/grid path: open segments
/// (l, r) with end values taken one-sided, plus the jump sizes.
struct AffinePieces {
  std::vector<double> left, right;    // abscissae
  std::vector<double> vLeft, vRight;  // values at l+ and r-
  std::vector<double> jumps;          // nonzero jump sizes anywhere in [0,T]
};

inline AffinePieces affinePieces(const Path& f) {
  if (f.kind() == PathKind::ExpSegment)
    throw std::invalid_argument("affine piece decomposition: exponential segments unsupported");
  AffinePieces out;
  const ArrayXd b = f.breakpoints();
  for (Eigen::Index i = 0; i + 1 < b.size(); ++i) {
    out.left.push_back(b[i]);
    out.right.push_back(b[i + 1]);
    out.vLeft.push_back(f(b[i]));
    out.vRight.push_back(f.leftLimit(b[i + 1]));
  }
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    const double j = f(b[i]) - f.leftLimit(b[i]);
    if (j != 0.0) out.jumps.push_back(j);
  }
  return out;
}

/// Exact \int_0^h |v0 + (v1-v0) t/h|^p dt. Near-constant segments switch to
/// Simpson; the closed form divides by the slope and turns roundoff in
/// S(v1)-S(v0) into noise.
inline double absAffinePowIntegral(double v0, double v1, double h, double p) {
  if (h <= 0) return 0.0;
  const double scale = std::max(std::fabs(v0), std::fabs(v1));
  if (std::fabs(v1 - v0) <= 1e-8 * scale) {
    const double vm = 0.5 * (v0 + v1);
    return h *
           (std::pow(std::fabs(v0), p) + 4.0 * std::pow(std::fabs(vm), p) +
            std::pow(std::fabs(v1), p)) /
           6.0;
  }
  if (scale == 0.0) return 0.0;
  auto S = [p](double u) { return std::pow(std::fabs(u), p + 1) * (u >= 0 ? 1.0 : -1.0); };
  const double slope = (v1 - v0) / h;
  return (S(v1) - S(v0)) / (slope * (p + 1.0));
}

/// \int_x^y t^{-1-q} dt for x < y, q > 0.
inline double powerTailIntegral(double x, double y, double q) {
  return (std::pow(x, -q) - std::pow(y, -q)) / q;
}

struct SegmentCoeffs {
  double t0, a, b, c, tau;  // value(t) = a + b (t-t0) + c e^{-tau (t-t0)}
};

inline SegmentCoeffs segmentCoeffsAt(const Path& f, double l, double r) {
  const double tm = 0.5 * (l + r);
  switch (f.kind()) {
    case PathKind::Step:
      return {l, f(tm), 0.0, 0.0, 0.0};
    case PathKind::Linear:
    case PathKind::Grid: {
      const double vl = f(l);
      const double vr = f.leftLimit(r);
      return {l, vl, (vr - vl) / (r - l), 0.0, 0.0};
    }
    case PathKind::ExpSegment: {
      const ArrayXd& st = f.times();
      Eigen::Index j = std::upper_bound(st.data(), st.data() + st.size(), tm) - st.data() - 1;
      j = std::max<Eigen::Index>(j, 0);
      const double dt0 = l - st[j];
      // re-anchor the segment at l
      return {l, f.values()[j] + f.slopes()[j] * dt0, f.slopes()[j],
              f.expCoefs()[j] * std::exp(-f.tau() * dt0), f.tau()};
    }
  }
  return {l, 0, 0, 0, 0};
}

}  // namespace detail

/// Exact supremum distance sup_t |f(t)-g(t)|. The supremum of a piecewise
/// affine difference is attained at a breakpoint or a one-sided limit;
/// exponential segments contribute one interior critical point per piece.
inline double supDistance(const Path& f, const Path& g) {
  if (std::fabs(f.horizon() - g.horizon()) > 1e-12 * (1 + f.horizon()))
    throw ShapeError("supDistance: horizons differ");
  const ArrayXd bf = f.breakpoints();
  const ArrayXd bg = g.breakpoints();
  std::vector<double> b(bf.data(), bf.data() + bf.size());
  b.insert(b.end(), bg.data(), bg.data() + bg.size());
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());

  double best = 0.0;
  for (double t : b) {
    best = std::max(best, std::fabs(f(t) - g(t)));
    best = std::max(best, std::fabs(f.leftLimit(t) - g.leftLimit(t)));
  }
  if (f.kind() != PathKind::ExpSegment && g.kind() != PathKind::ExpSegment) return best;

  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    const double l = b[i], r = b[i + 1];
    const auto cf = detail::segmentCoeffsAt(f, l, r);
    const auto cg = detail::segmentCoeffsAt(g, l, r);
    const double B = cf.b - cg.b;
    if (cf.c != 0.0 && cg.c != 0.0 && cf.tau != cg.tau) {
      // two distinct exponentials: no closed-form extremum, sample densely
      for (int k = 1; k < 64; ++k) {
        const double t = l + (r - l) * k / 64.0;
        best = std::max(best, std::fabs(f(t) - g(t)));
      }
      continue;
    }
    const double tau = cf.c != 0.0 ? cf.tau : cg.tau;
    const double C = (cf.tau == cg.tau) ? cf.c - cg.c : (cf.c != 0.0 ? cf.c : -cg.c);
    if (C == 0.0 || tau == 0.0) continue;  // affine difference, endpoints cover it
    const double ratio = B / (C * tau);
    if (ratio > 0.0) {
      const double dt = -std::log(ratio) / tau;
      const double t = l + dt;
      if (t > l && t < r) best = std::max(best, std::fabs(f(t) - g(t)));
    }
  }
  return best;
}

/// Holder seminorm sup_{s != t} |f(t)-f(s)| / |t-s|^eta for continuous
/// piecewise-affine paths. Candidates are all knot pairs plus, for each
/// (knot, segment) combination, the analytic interior critical point of the
/// quotient.
inline double holderNorm(const Path& f, double eta) {
  if (!(eta > 0 && eta <= 1)) throw std::invalid_argument("holderNorm: eta must be in (0,1]");
  if (f.kind() == PathKind::Step || f.kind() == PathKind::ExpSegment)
    throw std::invalid_argument("holderNorm: requires a continuous piecewise-linear path");
  const auto pieces = detail::affinePieces(f);
  if (!pieces.jumps.empty())
    throw std::invalid_argument("holderNorm: path has jumps, norm is infinite");

  std::vector<double> knots = pieces.left;
  knots.push_back(f.horizon());
  const std::size_t K = knots.size();
  double best = 0.0;
  auto quotient = [&](double s, double t) {
    if (t <= s) return 0.0;
    return std::fabs(f(t) - f(s)) / std::pow(t - s, eta);
  };
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = i + 1; j < K; ++j) best = std::max(best, quotient(knots[i], knots[j]));

  if (eta == 1.0) {
    // Lipschitz constant: slopes dominate
    for (std::size_t i = 0; i < pieces.left.size(); ++i) {
      const double h = pieces.right[i] - pieces.left[i];
      if (h > 0)
        best = std::max(best, std::fabs(pieces.vRight[i] - pieces.vLeft[i]) / h);
    }
    return best;
  }
  // analytic critical points: fix one end at a knot, move the other inside a
  // segment; the stationarity condition  f'(t)(t-s) = eta (f(t)-f(s))  is
  // linear in the free coordinate when f is affine on the segment
  for (std::size_t i = 0; i < K; ++i) {
    const double s = knots[i];
    const double fs = f(s);
    for (std::size_t j = 0; j < pieces.left.size(); ++j) {
      const double l = pieces.left[j], r = pieces.right[j];
      const double h = r - l;
      if (h <= 0) continue;
      const double b = (pieces.vRight[j] - pieces.vLeft[j]) / h;
      if (b == 0.0) continue;
      const double a = pieces.vLeft[j] - b * l;  // f(t) = a + b t on the segment
      if (r > s) {
        const double t = (b * s + eta * (a - fs)) / (b * (1.0 - eta));
        if (t > std::max(l, s) && t < r) best = std::max(best, quotient(s, t));
      }
      if (l < s) {
        const double u = (b * s - eta * (fs - a)) / (b * (1.0 - eta));
        if (u > l && u < std::min(r, s)) best = std::max(best, quotient(u, s));
      }
    }
  }
  return best;
}

/// Fractional Sobolev norm
///   ( \int_0^T |f|^p + \iint |f(t)-f(s)|^p / |t-s|^{1+p eta} )^{1/p}.
///
/// The L^p term and the within-segment part of the double integral are
/// closed forms; the rest is reduced to the lag integral
/// 2 \int_0^T tau^{-1-p eta} G(tau) dtau with G(tau) = \int |f(t+tau)-f(t)|^p dt,
/// integrated by adaptive Gauss-Kronrod on geometrically graded intervals,
/// with an analytic bound for the remaining sliver at tau -> 0 built from the
/// path's slopes and jump sizes. Uniform grids beyond `gridThreshold` points
/// use exact lattice lags with geometric lag subsampling instead.
inline double sobolevNorm(const Path& f, const NormOrder& order,
                          const QuadratureSpec& spec = {}, int gridThreshold = 400) {
  const double p = order.p, eta = order.eta;
  const double q = p * eta;
  const auto pieces = detail::affinePieces(f);
  const bool jumpy = !pieces.jumps.empty();
  if (jumpy && !(order.embeddingGap() < 0))
    throw DivergenceError(
        "sobolevNorm: path with jumps has infinite W_{eta,p} norm unless eta - 1/p < 0");

  double lp = 0.0;
  for (std::size_t i = 0; i < pieces.left.size(); ++i)
    lp += detail::absAffinePowIntegral(pieces.vLeft[i], pieces.vRight[i],
                                       pieces.right[i] - pieces.left[i], p);

  const double T = f.horizon();
  const ArrayXd fBreaks = f.breakpoints();
  auto lagIntegrand = [&](double tauLag) {
    // G(tau) exactly: the shifted difference is piecewise affine on the
    // merge of the breakpoints with their back-shifted copies
    const double upper = T - tauLag;
    std::vector<double> cuts;
    cuts.reserve(2 * fBreaks.size() + 2);
    cuts.push_back(0.0);
    Eigen::Index i = 0, j = 0;
    const Eigen::Index K = fBreaks.size();
    while (i < K || j < K) {
      const double a = i < K ? fBreaks[i] : std::numeric_limits<double>::infinity();
      const double s = j < K ? fBreaks[j] - tauLag : std::numeric_limits<double>::infinity();
      const double next = std::min(a, s);
      if (a <= s)
        ++i;
      else
        ++j;
      if (next <= 0.0 || next >= upper) continue;
      if (next > cuts.back()) cuts.push_back(next);
    }
    if (upper > cuts.back()) cuts.push_back(upper);
    double g = 0.0;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double l = cuts[c], r = cuts[c + 1];
      if (r <= l) continue;
      // sample the affine difference at interior quarter points and
      // extrapolate to the ends; endpoint evaluation could land on the wrong
      // side of a jump after roundoff in cut +- tau
      const double w = r - l;
      const double dq1 = f(l + 0.25 * w + tauLag) - f(l + 0.25 * w);
      const double dq3 = f(l + 0.75 * w + tauLag) - f(l + 0.75 * w);
      const double dl = 1.5 * dq1 - 0.5 * dq3;
      const double dr = 1.5 * dq3 - 0.5 * dq1;
      g += detail::absAffinePowIntegral(dl, dr, w, p);
    }
    return 2.0 * std::pow(tauLag, -1.0 - q) * g;
  };

  double gagliardo = 0.0;
  const Eigen::Index m = f.values().size();
  if (f.kind() == PathKind::Grid && m > gridThreshold) {
    const double h = T / static_cast<double>(m - 1);
    auto latticeG = [&](Eigen::Index k) {
      double g = 0.0;
      for (Eigen::Index i = 0; i + k + 1 < m; ++i)
        g += detail::absAffinePowIntegral(f.values()[i + k] - f.values()[i],
                                          f.values()[i + k + 1] - f.values()[i + 1], h, p);
      return g;
    };
    // exact lags 1..64, then geometric subsampling with power-law bin weights
    const Eigen::Index kExact = std::min<Eigen::Index>(64, m - 1);
    std::vector<Eigen::Index> lags;
    for (Eigen::Index k = 1; k <= kExact; ++k) lags.push_back(k);
    double kNext = static_cast<double>(kExact) * 1.12;
    while (static_cast<Eigen::Index>(kNext) < m - 1) {
      lags.push_back(static_cast<Eigen::Index>(kNext));
      kNext *= 1.12;
    }
    if (lags.back() != m - 2 && m - 2 >= 1) lags.push_back(m - 2);
    const double gh = latticeG(1);
    // slice tau in (0, h/2]: G(tau) ~ G(h) (tau/h)^p for a continuous grid path
    gagliardo += 2.0 * gh * std::pow(h, -p) * std::pow(0.5 * h, p - q) / (p - q);
    std::vector<double> edges(lags.size() + 1);
    edges.front() = 0.5 * h;
    edges.back() = T;
    for (std::size_t j = 0; j + 1 < lags.size(); ++j)
      edges[j + 1] = (lags[j] + 1 == lags[j + 1])
                         ? (static_cast<double>(lags[j]) + 0.5) * h
                         : std::sqrt(static_cast<double>(lags[j]) * static_cast<double>(lags[j + 1])) * h;
    for (std::size_t j = 0; j < lags.size(); ++j) {
      if (edges[j + 1] <= edges[j]) continue;
      gagliardo += 2.0 * latticeG(lags[j]) * detail::powerTailIntegral(edges[j], edges[j + 1], q);
    }
  } else {
    // adaptive lag integration on geometrically graded intervals
    double hmin = T;
    for (std::size_t i = 0; i < pieces.left.size(); ++i)
      if (pieces.right[i] > pieces.left[i]) hmin = std::min(hmin, pieces.right[i] - pieces.left[i]);
    double jumpMass = 0.0;
    for (double jv : pieces.jumps) jumpMass += std::pow(std::fabs(jv), p);
    double slopeMass = 0.0;
    for (std::size_t i = 0; i < pieces.left.size(); ++i) {
      const double hseg = pieces.right[i] - pieces.left[i];
      if (hseg > 0)
        slopeMass +=
            std::pow(std::fabs((pieces.vRight[i] - pieces.vLeft[i]) / hseg), p) * hseg;
    }
    auto smallTail = [&](double eps) {
      double tail = slopeMass * std::pow(eps, p - q) / (p - q);
      if (jumpy) tail += jumpMass * std::pow(eps, 1.0 - q) / (1.0 - q);
      return 2.0 * tail;
    };
    double eps = std::min(0.5 * hmin, T);
    int levels = 0;
    while (smallTail(eps) > 0.25 * spec.absTol && levels < 60) {
      eps *= 0.5;
      ++levels;
    }
    // geometrically graded seed subdivision from eps up to T
    std::vector<double> edges{eps};
    while (edges.back() < T) edges.push_back(std::min(T, edges.back() * 2.0));
    QuadratureSpec lagSpec;
    lagSpec.absTol = 0.5 * spec.absTol;
    lagSpec.relTol = std::max(spec.relTol, 1e-8);
    gagliardo += integrateAdaptiveMulti(lagIntegrand, edges, lagSpec);
    gagliardo += smallTail(eps);
  }
  return std::pow(lp + gagliardo, 1.0 / p);
}

namespace detail {

/// max(||Id - phi||, ||f - g o phi||) for the increasing piecewise-linear
/// time change through (knots[i], images[i]); exact for step/affine paths.
inline double timeChangeObjective(const Path& f, const Path& g,
                                  const std::vector<double>& knots,
                                  const std::vector<double>& images) {
  const std::size_t K = knots.size();
  double idPart = 0.0;
  for (std::size_t i = 0; i < K; ++i) idPart = std::max(idPart, std::fabs(knots[i] - images[i]));
  auto phi = [&](double t) {
    const auto it = std::upper_bound(knots.begin(), knots.end(), t);
    std::size_t i = static_cast<std::size_t>(it - knots.begin());
    i = std::min(std::max<std::size_t>(i, 1), K - 1);
    const double u0 = knots[i - 1], u1 = knots[i];
    return images[i - 1] + (images[i] - images[i - 1]) * (t - u0) / (u1 - u0);
  };
  // candidate times: f breakpoints, phi knots, pullbacks of g breakpoints
  std::vector<double> cand;
  const ArrayXd bf = f.breakpoints();
  cand.assign(bf.data(), bf.data() + bf.size());
  cand.insert(cand.end(), knots.begin(), knots.end());
  const ArrayXd bg = g.breakpoints();
  for (std::size_t i = 0; i + 1 < K; ++i) {
    for (Eigen::Index jb = 0; jb < bg.size(); ++jb) {
      const double s = bg[jb];
      if (s >= images[i] && s <= images[i + 1] && images[i + 1] > images[i])
        cand.push_back(knots[i] +
                       (knots[i + 1] - knots[i]) * (s - images[i]) / (images[i + 1] - images[i]));
    }
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  double supPart = 0.0;
  const double eps = 1e-9 * f.horizon();
  for (double t : cand) {
    supPart = std::max(supPart, std::fabs(f(t) - g(phi(t))));
    supPart = std::max(supPart, std::fabs(f.leftLimit(t) - g.leftLimit(phi(t))));
    const double tm = std::max(0.0, t - eps);
    supPart = std::max(supPart, std::fabs(f.leftLimit(t) - g(phi(tm))));
  }
  return std::max(idPart, supPart);
}

inline std::vector<double> jumpTimes(const Path& f) {
  std::vector<double> out;
  const ArrayXd b = f.breakpoints();
  for (Eigen::Index i = 0; i < b.size(); ++i)
    if (f(b[i]) != f.leftLimit(b[i])) out.push_back(b[i]);
  return out;
}

}  // namespace detail

/// Upper bound on the Skorohod distance: the minimum over the identity time
/// change and piecewise-linear time changes with at most `searchDepth`
/// interior knots. Candidate time changes come from matching jump times of f
/// to jump times of g, then coordinate descent on the knot images.
/// Always <= supDistance(f, g).
inline double skorohodDistanceUpper(const Path& f, const Path& g, int searchDepth = 8) {
  const double ident = supDistance(f, g);
  if (searchDepth <= 0 || ident == 0.0) return ident;
  const double T = f.horizon();

  double best = ident;
  std::vector<double> knots, images;

  // candidate 1: uniform knots at i T / (searchDepth + 1)
  {
    const int K = searchDepth + 1;
    knots.resize(K + 1);
    images.resize(K + 1);
    for (int i = 0; i <= K; ++i) knots[i] = images[i] = T * static_cast<double>(i) / K;
  }
  // candidate 2: map the jump times of f onto the jump times of g in order
  const auto jf = detail::jumpTimes(f);
  const auto jg = detail::jumpTimes(g);
  if (!jf.empty() && jf.size() == jg.size() &&
      static_cast<int>(jf.size()) <= searchDepth) {
    bool valid = jf.front() > 0 && jg.front() > 0 && jf.back() < T && jg.back() < T;
    for (std::size_t i = 0; valid && i + 1 < jf.size(); ++i)
      valid = jf[i + 1] > jf[i] && jg[i + 1] > jg[i];
    if (valid) {
      std::vector<double> mk{0.0}, mi{0.0};
      mk.insert(mk.end(), jf.begin(), jf.end());
      mi.insert(mi.end(), jg.begin(), jg.end());
      mk.push_back(T);
      mi.push_back(T);
      const double v = detail::timeChangeObjective(f, g, mk, mi);
      if (v < best) {
        best = v;
        knots = mk;
        images = mi;
      }
    }
  }

  // coordinate descent on the images of the winning candidate
  double current = detail::timeChangeObjective(f, g, knots, images);
  const int scanPoints = 64;
  for (int sweep = 0; sweep < 20; ++sweep) {
    bool improved = false;
    for (std::size_t j = 1; j + 1 < images.size(); ++j) {
      const double lo = images[j - 1], hi = images[j + 1];
      double bestY = images[j], bestVal = current;
      for (int s = 1; s < scanPoints; ++s) {
        std::vector<double> yy = images;
        yy[j] = lo + (hi - lo) * s / scanPoints;
        const double v = detail::timeChangeObjective(f, g, knots, yy);
        if (v < bestVal) {
          bestVal = v;
          bestY = yy[j];
          improved = true;
        }
      }
      images[j] = bestY;
      current = bestVal;
    }
    if (!improved) break;
  }
  return std::min(best, std::min(ident, current));
}

/// Left Riemann-Liouville fractional integral at a point, closed form per
/// affine piece of f.
inline double fracIntegralLeftAt(const Path& f, double alpha, double x) {
  if (!(alpha > 0)) throw std::invalid_argument("fracIntegralLeftAt: alpha must be > 0");
  const auto pieces = detail::affinePieces(f);
  const double invGamma = 1.0 / gammaLanczos(alpha);
  double acc = 0.0;
  for (std::size_t i = 0; i < pieces.left.size() && pieces.left[i] < x; ++i) {
    const double l = pieces.left[i];
    const double r = std::min(pieces.right[i], x);
    const double h = pieces.right[i] - pieces.left[i];
    const double b = h > 0 ? (pieces.vRight[i] - pieces.vLeft[i]) / h : 0.0;
    const double a = pieces.vLeft[i] - b * l;
    const double w0 = x - r, w1 = x - l;
    acc += (a + b * x) * (std::pow(w1, alpha) - std::pow(w0, alpha)) / alpha -
           b * (std::pow(w1, alpha + 1) - std::pow(w0, alpha + 1)) / (alpha + 1);
  }
  return invGamma * acc;
}

/// Right Riemann-Liouville fractional integral at a point, mirrored.
inline double fracIntegralRightAt(const Path& f, double alpha, double x) {
  if (!(alpha > 0)) throw std::invalid_argument("fracIntegralRightAt: alpha must be > 0");
  const auto pieces = detail::affinePieces(f);
  const double invGamma = 1.0 / gammaLanczos(alpha);
  double acc = 0.0;
  for (std::size_t i = 0; i < pieces.left.size(); ++i) {
    if (pieces.right[i] <= x) continue;
    const double l = std::max(pieces.left[i], x);
    const double r = pieces.right[i];
    const double h = pieces.right[i] - pieces.left[i];
    const double b = h > 0 ? (pieces.vRight[i] - pieces.vLeft[i]) / h : 0.0;
    const double a = pieces.vLeft[i] - b * pieces.left[i];
    const double w0 = l - x, w1 = r - x;
    acc += (a + b * x) * (std::pow(w1, alpha) - std::pow(w0, alpha)) / alpha +
           b * (std::pow(w1, alpha + 1) - std::pow(w0, alpha + 1)) / (alpha + 1);
  }
  return invGamma * acc;
}

/// Fractional integrals sampled on a uniform output grid.
inline Path fracIntegralLeft(const Path& f, double alpha, int outPoints = 513) {
  if (alpha < 0) throw std::invalid_argument("fracIntegralLeft: alpha must be >= 0");
  if (alpha == 0.0) return f;  // I^0 is the identity
  const double T = f.horizon();
  ArrayXd out(outPoints);
  for (int k = 0; k < outPoints; ++k)
    out[k] = fracIntegralLeftAt(f, alpha, T * static_cast<double>(k) / (outPoints - 1));
  return Path::grid(T, std::move(out));
}

inline Path fracIntegralRight(const Path& f, double alpha, int outPoints = 513) {
  if (alpha < 0) throw std::invalid_argument("fracIntegralRight: alpha must be >= 0");
  if (alpha == 0.0) return f;
  const double T = f.horizon();
  ArrayXd out(outPoints);
  for (int k = 0; k < outPoints; ++k)
    out[k] = fracIntegralRightAt(f, alpha, T * static_cast<double>(k) / (outPoints - 1));
  return Path::grid(T, std::move(out));
}

}  // namespace steinq
