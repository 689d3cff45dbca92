#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>

#include "steinq/ppp.hpp"
#include "steinq/quadrature.hpp"
#include "steinq/queues.hpp"

namespace steinq {

enum class FamilyKind { MM1, MMInfty };
enum class GramMethod { ClosedForm, Quadrature };

/// The orthogonal kernel family behind the interpolated fluctuation process.
///
///  - MM1: u_i(s, r) = r 1_{[iT/n,(i+1)T/n)}(s) / sqrt(T (lam+mu)) against the
///    +-1 mark measure of total time intensity n(lam+mu).
///  - MMInfty (T = 1): u_i(x, z) = a_{i+1} - a_i + mu b_i against
///    lam n dx x mu e^{-mu z} dz, where a_i(x,z) indicates arrival before i/n
///    with departure after, and b_i is the sojourn overlap with
///    [i/n, (i+1)/n].
struct OrthogonalFamily {
  FamilyKind kind;
  int n;
  double lambda, mu, T;
  ControlMeasure measure;
};

inline OrthogonalFamily buildFamily(FamilyKind kind, double lambda, double mu, int n, double T) {
  if (!(lambda > 0) || !(mu > 0) || n < 1 || !(T > 0))
    throw std::invalid_argument("buildFamily: bad parameters");
  if (kind == FamilyKind::MMInfty && T != 1.0)
    throw std::invalid_argument(
        "buildFamily: the infinite-server family is only provided at T = 1; rescale time "
        "upstream");
  ControlMeasure m = kind == FamilyKind::MM1 ? ControlMeasure::mm1Marks(lambda, mu, n, T)
                                             : ControlMeasure::serviceMarks(lambda, mu, n, T);
  return {kind, n, lambda, mu, T, m};
}

namespace detail {

inline double alphaInd(double grid, double x, double z) {
  return (x <= grid && grid <= x + z) ? 1.0 : 0.0;
}

inline double betaOverlap(double lo, double hi, double x, double z) {
  return std::max(0.0, std::min(hi, x + z) - std::max(lo, x));
}

}  // namespace detail

/// Kernel i of the family, with its exact first two moments attached.
inline DeterministicKernel familyKernel(const OrthogonalFamily& fam, int i) {
  if (i < 0 || i >= fam.n) throw std::invalid_argument("familyKernel: index out of range");
  const double h = fam.T / static_cast<double>(fam.n);
  if (fam.kind == FamilyKind::MM1) {
    const double scale = 1.0 / std::sqrt(fam.T * (fam.lambda + fam.mu));
    auto u = signedStripKernel(fam.measure, i * h, (i + 1) * h, scale);
    u.compensator = fam.measure.timeRate() * h * scale *
                    ((fam.lambda - fam.mu) / (fam.lambda + fam.mu));
    u.secondMoment = 1.0;  // n(lam+mu) * (T/n) * scale^2, simplified exactly
    return u;
  }
  const double lo = i * h, mid = (i + 1) * h;
  const double mu = fam.mu;
  DeterministicKernel u;
  u.eval = [lo, mid, mu](double x, double z) {
    return detail::alphaInd(mid, x, z) - detail::alphaInd(lo, x, z) +
           mu * detail::betaOverlap(lo, mid, x, z);
  };
  u.timeBreaks = Eigen::ArrayXd(2);
  u.timeBreaks << lo, mid;
  u.markBreaks = [lo, mid](double x) {
    Eigen::ArrayXd zb(2);
    zb << std::max(0.0, lo - x), std::max(0.0, mid - x);
    return zb;
  };
  // \int u dnu = lam exactly: the indicator difference contributes
  // (lam n/mu)(E_i - E_{i+1}) and mu \int b_i cancels it up to lam.
  u.compensator = fam.lambda;
  const double e0 = std::exp(-mu * lo), e1 = std::exp(-mu * mid);
  u.secondMoment = 2.0 * fam.lambda + (fam.lambda * fam.n / mu) * (e1 - e0);
  return u;
}

/// Off-diagonal Gram decomposition for the infinite-server family, i < j:
///   i1 = \int (a_{i+1}-a_i)(a_{j+1}-a_j) dnu
///   i2 = mu \int b_i (a_{j+1}-a_j) dnu
///   i3 = mu \int b_j (a_{i+1}-a_i) dnu
///   i4 = mu^2 \int b_i b_j dnu
/// The four closed forms cancel pairwise: i1 + i3 = 0 and i2 + i4 = 0.
struct CrossTerms {
  double i1, i2, i3, i4;
  double sum() const { return (i1 + i3) + (i2 + i4); }
};

/// Diagonal Gram decomposition, the six terms of u_i^2 expanded:
///   j1 = \int a_{i+1},  j2 = \int a_i,  j3 = -2 \int a_{i+1} a_i,
///   j4 = 2 mu \int b_i a_{i+1},  j5 = -2 mu \int b_i a_i,
///   j6 = mu^2 \int b_i^2, all against dnu.
struct DiagTerms {
  double j1, j2, j3, j4, j5, j6;
  double sum() const { return j1 + j2 + j3 + j4 + j5 + j6; }
};

inline CrossTerms crossTermsClosed(const OrthogonalFamily& fam, int i, int j) {
  if (fam.kind != FamilyKind::MMInfty)
    throw std::invalid_argument("crossTermsClosed: infinite-server family only");
  if (!(0 <= i && i < j && j < fam.n))
    throw std::invalid_argument("crossTermsClosed: need 0 <= i < j < n");
  const double n = static_cast<double>(fam.n);
  const double mu = fam.mu, lam = fam.lambda;
  const double K = lam * n / mu;
  const double A = 2.0 * std::exp(-mu * (j - i) / n) - std::exp(-mu * (j - i - 1) / n) -
                   std::exp(-mu * (j - i + 1) / n);
  const double D = std::exp(-mu * j / n) - std::exp(-mu * (j + 1) / n);
  return {K * A, K * A + lam * D, -(K * A), -(K * A) - lam * D};
}

inline DiagTerms diagTermsClosed(const OrthogonalFamily& fam, int i) {
  if (fam.kind != FamilyKind::MMInfty)
    throw std::invalid_argument("diagTermsClosed: infinite-server family only");
  if (!(0 <= i && i < fam.n)) throw std::invalid_argument("diagTermsClosed: index out of range");
  const double n = static_cast<double>(fam.n);
  const double mu = fam.mu, lam = fam.lambda;
  const double K = lam * n / mu;
  const double e0 = std::exp(-mu * i / n);
  const double e1 = std::exp(-mu * (i + 1) / n);
  const double f = std::exp(-mu / n);
  DiagTerms t;
  t.j1 = K * (1.0 - e1);
  t.j2 = K * (1.0 - e0);
  t.j3 = -2.0 * K * (f - e1);
  t.j4 = 2.0 * K * (1.0 - f) - 2.0 * lam * e1;
  t.j5 = -2.0 * K * (1.0 - f) - 2.0 * K * (e1 - e0);
  t.j6 = lam * (2.0 + 2.0 * e1 + (2.0 * n / mu) * (e1 - e0 + f - 1.0));
  return t;
}

namespace detail {

/// 2-D quadrature of an integrand against the service-mark measure with the
/// trapeze geometry of indices i (and optionally j) declared.
inline double trapezeQuadrature(const OrthogonalFamily& fam,
                                const std::function<double(double, double)>& g, int i, int j,
                                const QuadratureSpec& spec) {
  const double h = fam.T / static_cast<double>(fam.n);
  Eigen::ArrayXd tb(4);
  tb << i * h, (i + 1) * h, j * h, (j + 1) * h;
  auto zb = [=](double x) {
    Eigen::ArrayXd z(4);
    z << std::max(0.0, i * h - x), std::max(0.0, (i + 1) * h - x), std::max(0.0, j * h - x),
        std::max(0.0, (j + 1) * h - x);
    return z;
  };
  return measureIntegral(fam.measure, g, tb, zb, spec);
}

}  // namespace detail

inline CrossTerms crossTermsQuadrature(const OrthogonalFamily& fam, int i, int j,
                                       const QuadratureSpec& spec = {1e-9, 1e-9, 40}) {
  if (!(0 <= i && i < j && j < fam.n))
    throw std::invalid_argument("crossTermsQuadrature: need 0 <= i < j < n");
  const double h = fam.T / static_cast<double>(fam.n);
  const double mu = fam.mu;
  auto dAlpha = [h](int k) {
    return [h, k](double x, double z) {
      return detail::alphaInd((k + 1) * h, x, z) - detail::alphaInd(k * h, x, z);
    };
  };
  auto beta = [h](int k) {
    return [h, k](double x, double z) { return detail::betaOverlap(k * h, (k + 1) * h, x, z); };
  };
  const auto dAi = dAlpha(i);
  const auto dAj = dAlpha(j);
  const auto bi = beta(i);
  const auto bj = beta(j);
  CrossTerms t;
  t.i1 = detail::trapezeQuadrature(
      fam, [&](double x, double z) { return dAi(x, z) * dAj(x, z); }, i, j, spec);
  t.i2 = mu * detail::trapezeQuadrature(
                 fam, [&](double x, double z) { return bi(x, z) * dAj(x, z); }, i, j, spec);
  t.i3 = mu * detail::trapezeQuadrature(
                 fam, [&](double x, double z) { return bj(x, z) * dAi(x, z); }, i, j, spec);
  t.i4 = mu * mu *
         detail::trapezeQuadrature(
             fam, [&](double x, double z) { return bi(x, z) * bj(x, z); }, i, j, spec);
  return t;
}

inline DiagTerms diagTermsQuadrature(const OrthogonalFamily& fam, int i,
                                     const QuadratureSpec& spec = {1e-9, 1e-9, 40}) {
  if (!(0 <= i && i < fam.n)) throw std::invalid_argument("diagTermsQuadrature: bad index");
  const double h = fam.T / static_cast<double>(fam.n);
  const double mu = fam.mu;
  auto a0 = [h, i](double x, double z) { return detail::alphaInd(i * h, x, z); };
  auto a1 = [h, i](double x, double z) { return detail::alphaInd((i + 1) * h, x, z); };
  auto bi = [h, i](double x, double z) { return detail::betaOverlap(i * h, (i + 1) * h, x, z); };
  DiagTerms t;
  t.j1 = detail::trapezeQuadrature(fam, [&](double x, double z) { return a1(x, z); }, i, i, spec);
  t.j2 = detail::trapezeQuadrature(fam, [&](double x, double z) { return a0(x, z); }, i, i, spec);
  t.j3 = -2.0 * detail::trapezeQuadrature(
                    fam, [&](double x, double z) { return a1(x, z) * a0(x, z); }, i, i, spec);
  t.j4 = 2.0 * mu *
         detail::trapezeQuadrature(
             fam, [&](double x, double z) { return bi(x, z) * a1(x, z); }, i, i, spec);
  t.j5 = -2.0 * mu *
         detail::trapezeQuadrature(
             fam, [&](double x, double z) { return bi(x, z) * a0(x, z); }, i, i, spec);
  t.j6 = mu * mu *
         detail::trapezeQuadrature(
             fam, [&](double x, double z) { return bi(x, z) * bi(x, z); }, i, i, spec);
  return t;
}

/// Gram matrix of the family. The closed form is algebraically simplified
/// (off-diagonals vanish by the pairwise cancellation, so they are exactly
/// zero); the quadrature method integrates the kernel products directly and
/// serves as an independent oracle.
inline Eigen::MatrixXd gramMatrix(const OrthogonalFamily& fam,
                                  GramMethod method = GramMethod::ClosedForm,
                                  const QuadratureSpec& spec = {1e-9, 1e-9, 40}) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(fam.n, fam.n);
  if (method == GramMethod::ClosedForm) {
    if (fam.kind == FamilyKind::MM1) {
      // strip masses: n(lam+mu) (T/n) / (T(lam+mu)) = 1, off-strips disjoint
      return Eigen::MatrixXd::Identity(fam.n, fam.n);
    }
    for (int i = 0; i < fam.n; ++i) g(i, i) = diagTermsClosed(fam, i).sum();
    for (int i = 0; i < fam.n; ++i)
      for (int j = i + 1; j < fam.n; ++j) g(i, j) = g(j, i) = crossTermsClosed(fam, i, j).sum();
    return g;
  }
  // quadrature oracle
  const double h = fam.T / static_cast<double>(fam.n);
  for (int i = 0; i < fam.n; ++i) {
    for (int j = i; j < fam.n; ++j) {
      double entry;
      try {
        if (fam.kind == FamilyKind::MM1) {
          const double scale = 1.0 / std::sqrt(fam.T * (fam.lambda + fam.mu));
          auto ui = [=](double s, double r) {
            return (s >= i * h && s < (i + 1) * h) ? scale * r : 0.0;
          };
          auto uj = [=](double s, double r) {
            return (s >= j * h && s < (j + 1) * h) ? scale * r : 0.0;
          };
          Eigen::ArrayXd tb(4);
          tb << i * h, (i + 1) * h, j * h, (j + 1) * h;
          entry = measureIntegral(
              fam.measure, [&](double s, double r) { return ui(s, r) * uj(s, r); }, tb, nullptr,
              spec);
        } else {
          const auto ki = familyKernel(fam, i);
          const auto kj = familyKernel(fam, j);
          entry = detail::trapezeQuadrature(
              fam, [&](double x, double z) { return ki.eval(x, z) * kj.eval(x, z); }, i, j, spec);
        }
      } catch (const ToleranceError& e) {
        throw ToleranceError("gramMatrix quadrature did not converge at entry (" +
                             std::to_string(i) + "," + std::to_string(j) + "): " + e.what());
      }
      g(i, j) = g(j, i) = entry;
    }
  }
  return g;
}

namespace detail {

// \int\int lam n mu e^{-mu(e-x)} (a + b x + c e)^3 dx de over a rectangle,
// expanded into separable exponential-polynomial factors.
inline double cellCubicIntegral(double a, double b, double c, double x0, double x1, double e0,
                                double e1, double lamN, double mu) {
  double total = 0.0;
  static const double trinomial[4][4] = {
      {1, 3, 3, 1}, {3, 6, 3, 0}, {3, 3, 0, 0}, {1, 0, 0, 0}};  // 3!/(i! j! k!) over j,k
  for (int jx = 0; jx <= 3; ++jx) {
    for (int ke = 0; ke + jx <= 3; ++ke) {
      const double coef = trinomial[jx][ke] * std::pow(a, 3 - jx - ke) * std::pow(b, jx) *
                          std::pow(c, ke);
      if (coef == 0.0) continue;
      total += coef * powExpIntegral(jx, mu, x0, x1) * powExpIntegral(ke, -mu, e0, e1);
    }
  }
  return lamN * mu * total;
}

}  // namespace detail

/// Sum over all index triples of \int |u_i u_j u_k| dnu, which equals
/// \int (sum_i |u_i|)^3 dnu.
///
/// MM1: the strips are disjoint, so only the diagonal triples survive and the
/// sum is n / sqrt(T (lam + mu)) exactly.
///
/// MMInfty: on the cell where the arrival falls in grid interval p and the
/// departure in interval q, sum_i |u_i| is affine in (x, x+z), so the integral
/// decomposes into exact exponential-polynomial cell integrals. The
/// quadrature method integrates the same cube numerically instead.
inline double tripleAbsSum(const OrthogonalFamily& fam, GramMethod method = GramMethod::ClosedForm,
                           const QuadratureSpec& spec = {1e-8, 1e-8, 40}) {
  const double n = static_cast<double>(fam.n);
  if (fam.kind == FamilyKind::MM1) {
    if (method == GramMethod::ClosedForm) return n / std::sqrt(fam.T * (fam.lambda + fam.mu));
    const double scale = 1.0 / std::sqrt(fam.T * (fam.lambda + fam.mu));
    Eigen::ArrayXd tb(2);
    tb << 0.0, fam.T;
    // |sum_i |u_i||^3 = scale^3 on all of [0,T)
    return measureIntegral(
        fam.measure, [&](double s, double) { return (s < fam.T ? 1.0 : 0.0) * scale * scale * scale; },
        tb, nullptr, spec);
  }

  const double h = fam.T / n;
  const double mu = fam.mu;
  const double lamN = fam.lambda * n;

  if (method == GramMethod::Quadrature) {
    // S(x, z) evaluated directly from the cell structure
    auto S = [&](double x, double z) {
      double s = 0.0;
      for (int i = 0; i < fam.n; ++i) {
        const double v = detail::alphaInd((i + 1) * h, x, z) - detail::alphaInd(i * h, x, z) +
                         mu * detail::betaOverlap(i * h, (i + 1) * h, x, z);
        s += std::fabs(v);
      }
      return s * s * s;
    };
    Eigen::ArrayXd tb(fam.n + 1);
    for (int i = 0; i <= fam.n; ++i) tb[i] = i * h;
    auto zb = [&](double x) {
      std::vector<double> z;
      for (int i = 0; i <= fam.n; ++i) {
        if (i * h - x > 0) z.push_back(i * h - x);
        // kink of |u_i| where the departure term changes sign
        if (i < fam.n && i * h + 1.0 / mu - x > 0 && i * h + 1.0 / mu < (i + 1) * h)
          z.push_back(i * h + 1.0 / mu - x);
      }
      std::sort(z.begin(), z.end());
      return Eigen::Map<Eigen::ArrayXd>(z.data(), static_cast<Eigen::Index>(z.size())).eval();
    };
    return measureIntegral(fam.measure, [&](double x, double z) { return S(x, z); }, tb, zb, spec);
  }

  double total = 0.0;
  for (int p = 0; p < fam.n; ++p) {
    const double x0 = p * h, x1 = (p + 1) * h;
    // departure within the same interval: S = mu (e - x) on the triangle
    // e in (x, x1); integrate mu^3 w^3 against mu e^{-mu w} then over x
    {
      // inner: P3(y) = \int_0^y w^3 e^{-mu w} dw, then \int_{x0}^{x1} P3(x1 - x) dx
      // = \int_0^h P3(v) dv, done as a double exponential-polynomial integral
      // \int_0^h \int_0^v w^3 e^{-mu w} dw dv = \int_0^h (h - w) w^3 e^{-mu w} dw
      Eigen::ArrayXd poly(5);
      poly << 0, 0, 0, h, -1.0;  // (h - w) w^3
      total += lamN * std::pow(mu, 4) * polyExpIntegral(poly, -mu, 0.0, h);
    }
    // departure in a later interval q < n
    for (int q = p + 1; q < fam.n; ++q) {
      const double e0 = q * h, e1 = (q + 1) * h;
      const double eStar = q * h + 1.0 / mu;  // sign change of the departure kernel
      // below eStar: S = 2 + mu (2 q h - x - e); above: S = mu (e - x)
      if (eStar >= e1) {
        total += detail::cellCubicIntegral(2.0 + 2.0 * mu * q * h, -mu, -mu, x0, x1, e0, e1, lamN,
                                           mu);
      } else if (eStar <= e0) {
        total += detail::cellCubicIntegral(0.0, -mu, mu, x0, x1, e0, e1, lamN, mu);
      } else {
        total += detail::cellCubicIntegral(2.0 + 2.0 * mu * q * h, -mu, -mu, x0, x1, e0, eStar,
                                           lamN, mu);
        total += detail::cellCubicIntegral(0.0, -mu, mu, x0, x1, eStar, e1, lamN, mu);
      }
    }
    // departure past the horizon: S = 1 + mu (1 - x), z-tail mass e^{-mu(1-x)}
    {
      const double aa = 1.0 + mu;  // S = aa - mu x with T = 1
      Eigen::ArrayXd poly(4);
      const double a3 = aa * aa * aa, a2 = aa * aa;
      poly << a3, -3.0 * a2 * mu, 3.0 * aa * mu * mu, -mu * mu * mu;  // (aa - mu x)^3
      total += lamN * std::exp(-mu) * polyExpIntegral(poly, mu, x0, x1);
    }
  }
  return total;
}

struct BoundReport {
  FamilyKind kind;
  GramMethod method;
  int n;
  double lambda, mu, T;
  double eta;
  Eigen::MatrixXd gram;
  Eigen::VectorXd xiSq;
  double tripleSum;
  double bound;
};

/// Gaussian-approximation bound for the interpolated fluctuation process:
/// 0.5 n^{-3/2+eta} times the triple absolute moment sum, valid for an
/// orthogonal family. Throws if the Gram matrix is not (numerically)
/// diagonal, naming the offending pair.
inline BoundReport steinBound(const OrthogonalFamily& fam, double eta,
                              GramMethod method = GramMethod::ClosedForm) {
  if (!(eta > 0 && eta < 0.5)) throw std::invalid_argument("steinBound: eta must be in (0, 1/2)");
  BoundReport rep;
  rep.kind = fam.kind;
  rep.method = method;
  rep.n = fam.n;
  rep.lambda = fam.lambda;
  rep.mu = fam.mu;
  rep.T = fam.T;
  rep.eta = eta;
  rep.gram = gramMatrix(fam, method);
  for (int i = 0; i < fam.n; ++i)
    for (int j = i + 1; j < fam.n; ++j)
      if (std::fabs(rep.gram(i, j)) > 1e-8)
        throw std::invalid_argument("steinBound: family is not orthogonal at pair (" +
                                    std::to_string(i) + "," + std::to_string(j) + "), entry " +
                                    std::to_string(rep.gram(i, j)));
  rep.xiSq = rep.gram.diagonal();
  rep.tripleSum = tripleAbsSum(fam, method);
  rep.bound = 0.5 * std::pow(static_cast<double>(fam.n), -1.5 + eta) * rep.tripleSum;
  return rep;
}

inline void to_json(nlohmann::json& j, const BoundReport& r) {
  std::vector<std::vector<double>> gram(r.n, std::vector<double>(r.n));
  for (int a = 0; a < r.n; ++a)
    for (int b = 0; b < r.n; ++b) gram[a][b] = r.gram(a, b);
  j = {{"family", r.kind == FamilyKind::MM1 ? "mm1" : "mminfty"},
       {"method", r.method == GramMethod::ClosedForm ? "closed-form" : "quadrature"},
       {"n", r.n},
       {"lambda", r.lambda},
       {"mu", r.mu},
       {"horizon", r.T},
       {"eta", r.eta},
       {"gram", gram},
       {"xi_squared", std::vector<double>(r.xiSq.data(), r.xiSq.data() + r.xiSq.size())},
       {"triple_abs_sum", r.tripleSum},
       {"bound", r.bound}};
}

}  // namespace steinq
