#pragma once

#include <chrono>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "steinq/bounds.hpp"
#include "steinq/harness.hpp"
#include "steinq/ppp.hpp"
#include "steinq/queues.hpp"
#include "steinq/stein.hpp"
#include "steinq/theta.hpp"

namespace steinq::acceptance {

struct CriterionResult {
  int id;
  std::string name;
  bool pass;
  std::string detail;
  double seconds;
};

/// Fitted regularity constants shared between criteria: the interpolation-gap
/// constant from criterion 5 and the Brownian-interpolation constant from
/// criterion 12 feed the end-to-end directional check.
struct Context {
  double gapConstant = std::numeric_limits<double>::quiet_NaN();       // from criterion 5
  double brownianConstant = std::numeric_limits<double>::quiet_NaN();  // from criterion 12
};

namespace detail {

inline std::pair<double, double> meanSE(const std::vector<double>& v) {
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(v.size()))};
}

inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace detail

inline std::string harnessHash(const std::string& bytes) {
  return steinq::detail::fnv1a64Hex(bytes);
}

inline constexpr std::uint64_t kDefaultSeed = 0x5EEDACCE55ULL;

// --- criterion bodies ------------------------------------------------------

inline CriterionResult mm1GramIdentity(std::uint64_t) {
  bool pass = true;
  double worst = 0;
  for (int n : {4, 16, 64}) {
    for (auto [lam, mu] : {std::pair{1.0, 2.0}, {1.0, 3.0}, {2.0, 5.0}}) {
      const auto fam = buildFamily(FamilyKind::MM1, lam, mu, n, 1.0);
      const Eigen::MatrixXd g = gramMatrix(fam);
      const double dev = (g - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
      worst = std::max(worst, dev);
      pass = pass && dev <= 1e-13;
    }
  }
  return {1, "mm1-gram-identity", pass, "max deviation from identity " + detail::fmt(worst), 0};
}

inline CriterionResult mmInftyOrthogonality(std::uint64_t) {
  bool pass = true;
  double worstOff = 0, worstQuadOff = 0, worstDiagRel = 0, worstDiagQuadRel = 0;
  for (int n : {4, 8, 16, 32}) {
    for (double mu : {1.0, 2.0}) {
      const auto fam = buildFamily(FamilyKind::MMInfty, 1.0, mu, n, 1.0);
      const Eigen::MatrixXd gc = gramMatrix(fam, GramMethod::ClosedForm);
      const Eigen::MatrixXd gq = gramMatrix(fam, GramMethod::Quadrature);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (i == j) continue;
          worstOff = std::max(worstOff, std::fabs(gc(i, j)));
          worstQuadOff = std::max(worstQuadOff, std::fabs(gq(i, j)));
        }
        const double want = n * (gammaFn((i + 1.0) / n, 1.0, mu) -
                                 gammaFn(static_cast<double>(i) / n, 1.0, mu));
        worstDiagRel = std::max(worstDiagRel, std::fabs(gc(i, i) - want) / want);
        worstDiagQuadRel = std::max(worstDiagQuadRel, std::fabs(gq(i, i) - gc(i, i)) / gc(i, i));
      }
    }
  }
  pass = worstOff <= 1e-13 && worstQuadOff < 1e-8 && worstDiagRel <= 1e-12 &&
         worstDiagQuadRel <= 1e-6;
  return {2, "mminfty-orthogonality", pass,
          "closed off-diag " + detail::fmt(worstOff) + ", quadrature off-diag " +
              detail::fmt(worstQuadOff) + ", diag rel err " + detail::fmt(worstDiagRel) +
              ", diag quad rel " + detail::fmt(worstDiagQuadRel),
          0};
}

inline CriterionResult closedFormsVsQuadrature(std::uint64_t seed) {
  RandomStream rng(seed, 3);
  bool pass = true;
  double worst = 0;
  auto relGap = [](double closed, double quad) {
    return std::fabs(closed - quad) / std::max(std::fabs(closed), 1e-12);
  };
  for (int tuple = 0; tuple < 20; ++tuple) {
    const int n = 4 + static_cast<int>(rng.uniform() * 13);
    const double lam = 0.5 + 2.0 * rng.uniform();
    const double mu = 0.5 + 2.0 * rng.uniform();
    const auto fam = buildFamily(FamilyKind::MMInfty, lam, mu, n, 1.0);
    const int i = static_cast<int>(rng.uniform() * (n - 1));
    const int maxJump = std::max(1, n / 2);
    const int j = std::min(n - 1, i + 1 + static_cast<int>(rng.uniform() * maxJump));
    const auto cc = crossTermsClosed(fam, i, j);
    const auto cq = crossTermsQuadrature(fam, i, j);
    const auto dc = diagTermsClosed(fam, i);
    const auto dq = diagTermsQuadrature(fam, i);
    for (auto [c, q] : {std::pair{cc.i1, cq.i1},
                        {cc.i2, cq.i2},
                        {cc.i3, cq.i3},
                        {cc.i4, cq.i4},
                        {dc.j1, dq.j1},
                        {dc.j2, dq.j2},
                        {dc.j3, dq.j3},
                        {dc.j4, dq.j4},
                        {dc.j5, dq.j5},
                        {dc.j6, dq.j6}}) {
      worst = std::max(worst, relGap(c, q));
    }
  }
  pass = worst <= 1e-6;
  return {3, "closed-forms-vs-quadrature", pass, "worst relative gap " + detail::fmt(worst), 0};
}

inline CriterionResult tripleSums(std::uint64_t) {
  bool pass = true;
  double worstRel = 0;
  for (auto [lam, mu, T, n] : {std::tuple{1.0, 3.0, 1.0, 4}, {1.0, 2.0, 0.4, 16},
                               {2.0, 5.0, 2.0, 32}}) {
    const auto fam = buildFamily(FamilyKind::MM1, lam, mu, n, T);
    const double want = n / std::sqrt(T * (lam + mu));
    const double got = tripleAbsSum(fam);
    worstRel = std::max(worstRel, std::fabs(got - want) / want);
  }
  pass = worstRel <= 1e-12;
  double lo = 1e300, hi = 0;
  for (int n : {8, 16, 32, 64}) {
    const auto fam = buildFamily(FamilyKind::MMInfty, 1.0, 1.0, n, 1.0);
    const double perN = tripleAbsSum(fam) / n;
    lo = std::min(lo, perN);
    hi = std::max(hi, perN);
  }
  const double ratio = hi / lo;
  pass = pass && ratio <= 1.5;
  return {4, "triple-absolute-moments", pass,
          "mm1 rel err " + detail::fmt(worstRel) + ", mminfty per-n ratio " + detail::fmt(ratio),
          0};
}

inline CriterionResult interpolationGapCheck(std::uint64_t seed, Context* ctx) {
  bool pass = true;
  std::string detailStr;
  double cFit = 0;
  for (int n : {100, 1000, 10000}) {
    const QueueParams p{1.0, 2.0, n, 0.4, 1.0};
    const int M = 1000;
    std::vector<double> gaps(M);
    const RandomStream base(seed, 50 + n);
    parallelFor(M, [&](std::size_t r) {
      RandomStream rng = base.substream(r);
      const auto b = simulateMm1(p, rng);
      gaps[r] = n * supDistance(b.Ln, interpolateAffine(b.Ln, n));
    });
    const auto [mean, se] = detail::meanSE(gaps);
    const double bound = interpolationGapBound(1.0, n);
    pass = pass && (mean + 3 * se <= bound);
    cFit = std::max(cFit, mean / (std::log(n) / std::log(std::log(n))));
    detailStr += "n=" + std::to_string(n) + ": " + detail::fmt(mean + 3 * se) + " <= " +
                 detail::fmt(bound) + "; ";
  }
  if (ctx) ctx->gapConstant = cFit;
  return {5, "interpolation-gap-bound", pass, detailStr + "fitted c " + detail::fmt(cFit), 0};
}

inline CriterionResult maxPoisson(std::uint64_t seed) {
  bool pass = true;
  std::string detailStr;
  for (int n : {1000, 5000}) {
    const int M = 20000;
    std::vector<double> maxima(M);
    const RandomStream base(seed, 60 + n);
    parallelFor(M, [&](std::size_t r) {
      RandomStream rng = base.substream(r);
      long best = 0;
      for (int i = 0; i < n; ++i) best = std::max(best, rng.poisson(1.0));
      maxima[r] = static_cast<double>(best);
    });
    const auto [mean, se] = detail::meanSE(maxima);
    const double bound = maxPoissonBound(n, 1.0).wForm;
    pass = pass && (mean + 3 * se <= bound);
    detailStr += "n=" + std::to_string(n) + ": " + detail::fmt(mean + 3 * se) + " <= " +
                 detail::fmt(bound) + "; ";
  }
  return {6, "max-of-poisson-bound", pass, detailStr, 0};
}

inline CriterionResult campbellMecke(std::uint64_t seed) {
  const int M = 100000;
  bool pass = true;
  std::string detailStr;

  const auto m1 = ControlMeasure::mm1Marks(1.0, 2.0, 5, 1.0);
  const auto u1 = signedStripKernel(m1, 0.2, 0.8, 1.0);
  const auto r1 = campbellMeckeCheck([](const PointConfiguration&) { return 1.0; }, u1, m1, M,
                                     RandomStream(seed, 71));
  bool ok = std::fabs(r1.lhs - r1.rhs) <= 3 * r1.combinedSE() + 1e-9;
  pass = pass && ok;
  detailStr += "constant: gap " + detail::fmt(std::fabs(r1.lhs - r1.rhs)) + "; ";

  const auto v = signedStripKernel(m1, 0.5, 0.9, 0.7);
  const auto r2 = campbellMeckeCheck(
      [&](const PointConfiguration& c) { return divergence(v, c, m1); }, u1, m1, M,
      RandomStream(seed, 72));
  ok = std::fabs(r2.lhs - r2.rhs) <= 3 * r2.combinedSE();
  pass = pass && ok;
  detailStr += "divergence pair: gap " + detail::fmt(std::fabs(r2.lhs - r2.rhs)) + " vs 3se " +
               detail::fmt(3 * r2.combinedSE()) + "; ";

  const auto m2 = ControlMeasure::serviceMarks(1.0, 2.0, 3, 1.0);
  auto u3 = timeIndicatorKernel(m2, 0.1, 0.6);
  u3.markBreaks = [](double) {
    Eigen::ArrayXd z(1);
    z << 1.0;
    return z;
  };
  const auto r3 = campbellMeckeCheck(
      [](const PointConfiguration& c) { return std::min<double>(static_cast<double>(c.size()), 5.0); },
      u3, m2, M, RandomStream(seed, 73));
  ok = std::fabs(r3.lhs - r3.rhs) <= 3 * r3.combinedSE();
  pass = pass && ok;
  detailStr += "clipped count: gap " + detail::fmt(std::fabs(r3.lhs - r3.rhs)) + " vs 3se " +
               detail::fmt(3 * r3.combinedSE());
  return {7, "campbell-mecke-identity", pass, detailStr, 0};
}

inline CriterionResult divergenceIsometry(std::uint64_t seed) {
  const int M = 100000;
  bool pass = true;
  std::string detailStr;
  struct Setup {
    std::string name;
    ControlMeasure m;
    DeterministicKernel u;
  };
  std::vector<Setup> setups;
  {
    const auto m = ControlMeasure::mm1Marks(1.0, 2.0, 8, 1.0);
    setups.push_back({"mm1-marks", m, signedStripKernel(m, 0.25, 0.5, 0.8)});
  }
  {
    const auto fam = buildFamily(FamilyKind::MMInfty, 1.0, 2.0, 8, 1.0);
    setups.push_back({"service-marks", fam.measure, familyKernel(fam, 2)});
  }
  int tag = 81;
  for (const auto& s : setups) {
    std::vector<double> vals(M);
    const RandomStream base(seed, tag++);
    parallelFor(M, [&](std::size_t r) {
      RandomStream rng = base.substream(r);
      const auto cfg = sampleMarkedPpp(s.m, rng);
      vals[r] = divergence(s.u, cfg, s.m);
    });
    double mean = 0;
    for (double x : vals) mean += x;
    mean /= M;
    double m2 = 0, m4 = 0;
    for (double x : vals) {
      const double d = x - mean;
      m2 += d * d;
      m4 += d * d * d * d;
    }
    m2 /= M;
    m4 /= M;
    const double target = *s.u.secondMoment;
    const double seMean = std::sqrt(m2 / M);
    const double seVar = std::sqrt(std::max(m4 - m2 * m2, 0.0) / M);
    const bool okMean = std::fabs(mean) <= 3 * seMean;
    const bool okVar = std::fabs(m2 - target) <= 3 * seVar;
    pass = pass && okMean && okVar;
    detailStr += s.name + ": mean " + detail::fmt(mean) + " (3se " + detail::fmt(3 * seMean) +
                 "), var " + detail::fmt(m2) + " vs " + detail::fmt(target) + "; ";
  }
  return {8, "divergence-isometry", pass, detailStr, 0};
}

inline CriterionResult thetaRoundTrip(std::uint64_t seed) {
  RandomStream rng(seed, 9);
  double worstTrip = 0;
  const double tau = 1.7;
  for (int rep = 0; rep < 100; ++rep) {
    const int jumps = 5 + static_cast<int>(rng.uniform() * 25);
    ArrayXd t(jumps), v(jumps);
    double val = rng.gaussian();
    for (int i = 0; i < jumps; ++i) {
      t[i] = rng.uniform();
      val += rng.gaussian();
      v[i] = val;
    }
    std::sort(t.data(), t.data() + jumps);
    const Path f = Path::step(1.0, rng.gaussian(), std::move(t), std::move(v));
    const auto img = thetaForward(f, tau);
    worstTrip = std::max(worstTrip, supDistance(f, thetaInverse(img.initial, img.residual, tau)));
  }
  double worstY = 0;
  const QueueParams p{1.2, 0.9, 80, 1.0, 0.0};
  for (int rep = 0; rep < 100; ++rep) {
    const auto b = simulateMmInftyTrapeze(p, rng);
    const auto img = thetaForward(b.Zn, p.mu);
    worstY = std::max(worstY,
                      supDistance(*b.Yn, img.residual) / (1.0 + b.Yn->supAbs()));
  }
  const bool pass = worstTrip < 1e-10 && worstY < 1e-12;
  return {9, "theta-round-trip", pass,
          "round-trip sup " + detail::fmt(worstTrip) + ", Y identity rel " + detail::fmt(worstY),
          0};
}

inline CriterionResult simulatorDuality(std::uint64_t seed) {
  const QueueParams p{1.0, 1.0, 100, 1.0, 0.0};
  const int M = 10000;
  Eigen::MatrixXd fa(M, 5), fb(M, 5);
  const RandomStream baseA(seed, 101), baseB(seed, 102);
  parallelFor(M, [&](std::size_t r) {
    RandomStream ra = baseA.substream(r);
    RandomStream rb = baseB.substream(r);
    const auto ba = simulateMmInftyTrapeze(p, ra);
    const auto bb = simulateMmInftyEvents(p, rb);
    auto fill = [](const TrajectoryBundle& b, Eigen::MatrixXd& out, std::size_t row) {
      out(row, 0) = b.Ln(b.params.T);
      out(row, 1) = b.Ln.supAbs();
      out(row, 2) = b.Ln.integral(b.params.T);
      out(row, 3) = b.Ln(b.params.T / 2);
      out(row, 4) = static_cast<double>(b.Ln.times().size());
    };
    fill(ba, fa, r);
    fill(bb, fb, r);
  });
  bool pass = true;
  std::string detailStr;
  const char* names[5] = {"terminal", "sup", "integral", "midpoint", "jumps"};
  for (int k = 0; k < 5; ++k) {
    std::vector<double> a(M), b(M);
    for (int r = 0; r < M; ++r) {
      a[r] = fa(r, k);
      b[r] = fb(r, k);
    }
    const auto ks = twoSampleKs(a, b);
    pass = pass && ks.pValue > 0.001;
    detailStr += std::string(names[k]) + " p=" + detail::fmt(ks.pValue) + "; ";
  }
  return {10, "simulator-duality", pass, detailStr, 0};
}

inline CriterionResult chebyshevHitting(std::uint64_t seed) {
  bool pass = true;
  std::string detailStr;
  const double lambda = 1.0, T = 1.0;
  for (int n : {100, 1000}) {
    const int M = 100000;
    std::vector<char> exceed(M, 0);
    const RandomStream base(seed, 110 + n);
    parallelFor(M, [&](std::size_t r) {
      RandomStream rng = base.substream(r);
      exceed[r] = rng.poisson(lambda * n * T) >= 2.0 * lambda * n * T ? 1 : 0;
    });
    long hits = 0;
    for (char c : exceed) hits += c;
    const double prob = static_cast<double>(hits) / M;
    const double bound = chebyshevTauBound(lambda, n, T);
    pass = pass && prob <= bound;
    detailStr += "n=" + std::to_string(n) + ": p " + detail::fmt(prob) + " <= " +
                 detail::fmt(bound) + "; ";
  }
  return {11, "chebyshev-tail-bound", pass, detailStr, 0};
}

inline CriterionResult brownianInterpolationRate(std::uint64_t seed, Context* ctx) {
  const double eta = 0.1, p = 2.0;
  std::vector<std::pair<double, double>> points;
  double num = 0, den = 0;
  std::string detailStr;
  for (int n : {16, 64, 256}) {
    const auto g = brownianInterpolationGap(eta, p, n, 200, 64 * n, RandomStream(seed, 120 + n));
    points.push_back({static_cast<double>(n), g.estimate});
    const double shape = std::pow(static_cast<double>(n), -(0.5 - eta));
    num += g.estimate * shape;
    den += shape * shape;
    detailStr += "n=" + std::to_string(n) + ": " + detail::fmt(g.estimate) + "; ";
  }
  const auto fit = rateFit(points, false);
  const bool pass = fit.exponent >= -0.6 && fit.exponent <= -0.3;
  if (ctx) ctx->brownianConstant = num / den;
  return {12, "brownian-interpolation-rate", pass,
          detailStr + "fitted slope " + detail::fmt(fit.exponent) + " in [-0.6,-0.3]", 0};
}

inline CriterionResult endToEndDirectional(std::uint64_t seed, Context* ctx) {
  Context local;
  if (!ctx || std::isnan(ctx->gapConstant)) {
    interpolationGapCheck(seed, &local);
    brownianInterpolationRate(seed, &local);
    ctx = &local;
  } else if (std::isnan(ctx->brownianConstant)) {
    brownianInterpolationRate(seed, ctx);
  }
  const int n = 256;
  const double lambda = 1.0, mu = 2.0, x0 = 1.0, T = 0.4, eta = 0.1;
  const QueueParams qp{lambda, mu, n, T, x0};
  const auto fam = buildFamily(FamilyKind::MM1, lambda, mu, n, T);
  const auto panel = defaultPanel(T);
  PathSampler fluct = [&](RandomStream& rng) {
    return interpolateAffine(simulateMm1(qp, rng).Zn, n);
  };
  const Eigen::VectorXd unitXi = Eigen::VectorXd::Ones(n);
  PathSampler comparator = [&](RandomStream& rng) {
    return sampleInterpolatedGaussian(unitXi, T, rng);
  };
  const double bound = steinBound(fam, eta).bound;
  const double term1Fit = ctx->gapConstant * (std::log(n) / std::log(std::log(n))) /
                          (std::sqrt(static_cast<double>(n)) * std::sqrt(lambda + mu));
  const double term3Fit = ctx->brownianConstant * std::pow(static_cast<double>(n), -(0.5 - eta));

  auto emitReport = [&]() {
    const auto d = estimatePanelDistance(fluct, comparator, panel, 10000, RandomStream(seed, 131),
                                         RandomStream(seed, 132));
    nlohmann::json rep = {{"n", n},
                          {"lambda", lambda},
                          {"mu", mu},
                          {"x0", x0},
                          {"T", T},
                          {"eta", eta},
                          {"seed", seed},
                          {"panel_distance", d.dhat},
                          {"panel_distance_se", d.se},
                          {"argmax_member", d.argmax},
                          {"family_bound", bound},
                          {"interpolation_term", term1Fit},
                          {"brownian_term", term3Fit},
                          {"member_means_fluctuation",
                           std::vector<double>(d.meansA.data(), d.meansA.data() + d.meansA.size())},
                          {"member_means_comparator",
                           std::vector<double>(d.meansB.data(), d.meansB.data() + d.meansB.size())}};
    return std::pair<PanelDistance, std::string>(d, rep.dump());
  };
  const auto [d1, bytes1] = emitReport();
  const auto [d2, bytes2] = emitReport();
  const bool deterministic = bytes1 == bytes2;

  const double rhs = bound + term1Fit + term3Fit;
  const bool below = d1.dhat + 3 * d1.se <= rhs;
  const bool pass = below && deterministic;
  return {13, "end-to-end-directional", pass,
          "dhat+3se " + detail::fmt(d1.dhat + 3 * d1.se) + " <= bound " + detail::fmt(bound) +
              " + gap " + detail::fmt(term1Fit) + " + brownian " + detail::fmt(term3Fit) +
              (deterministic ? ", report deterministic, hash " + harnessHash(bytes1)
                             : ", REPORT NOT DETERMINISTIC"),
          0};
}

// --- dispatch ---------------------------------------------------------------

/// Stated runtime budgets in seconds (0 = unbounded).
inline double runtimeBudget(int id) {
  switch (id) {
    case 1:
      return 1;
    case 2:
      return 30;
    case 3:
      return 60;
    case 4:
      return 120;
    case 5:
      return 300;
    case 6:
      return 60;
    case 7:
      return 120;
    case 13:
      return 600;
    default:
      return 0;
  }
}

inline CriterionResult runCriterion(int id, Context& ctx, std::uint64_t seed = kDefaultSeed) {
  const auto start = std::chrono::steady_clock::now();
  CriterionResult res;
  switch (id) {
    case 1:
      res = mm1GramIdentity(seed);
      break;
    case 2:
      res = mmInftyOrthogonality(seed);
      break;
    case 3:
      res = closedFormsVsQuadrature(seed);
      break;
    case 4:
      res = tripleSums(seed);
      break;
    case 5:
      res = interpolationGapCheck(seed, &ctx);
      break;
    case 6:
      res = maxPoisson(seed);
      break;
    case 7:
      res = campbellMecke(seed);
      break;
    case 8:
      res = divergenceIsometry(seed);
      break;
    case 9:
      res = thetaRoundTrip(seed);
      break;
    case 10:
      res = simulatorDuality(seed);
      break;
    case 11:
      res = chebyshevHitting(seed);
      break;
    case 12:
      res = brownianInterpolationRate(seed, &ctx);
      break;
    case 13:
      res = endToEndDirectional(seed, &ctx);
      break;
    default:
      throw std::invalid_argument("runCriterion: unknown criterion id");
  }
  res.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double budget = runtimeBudget(id);
  if (budget > 0 && res.seconds >= budget) {
    res.pass = false;
    res.detail += " [runtime budget " + detail::fmt(budget) + " s exceeded]";
  }
  return res;
}

/// Named verification suites exposed by the command-line tool.
inline std::vector<int> suiteCriteria(const std::string& suite) {
  static const std::map<std::string, std::vector<int>> suites{
      {"gram", {1, 2}},        {"appendixB", {3, 4}}, {"bounds", {5, 6, 11, 12}},
      {"theta", {9}},          {"ppp", {7, 8, 10}},   {"all", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13}},
  };
  const auto it = suites.find(suite);
  if (it == suites.end()) throw std::invalid_argument("unknown suite '" + suite + "'");
  return it->second;
}

inline std::vector<CriterionResult> runMany(const std::vector<int>& ids,
                                            std::uint64_t seed = kDefaultSeed) {
  Context ctx;
  std::vector<CriterionResult> out;
  for (int id : ids) out.push_back(runCriterion(id, ctx, seed));
  return out;
}

}  // namespace steinq::acceptance
