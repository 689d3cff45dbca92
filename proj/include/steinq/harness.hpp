#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "steinq/bounds.hpp"
#include "steinq/norms.hpp"
#include "steinq/parallel.hpp"
#include "steinq/queues.hpp"
#include "steinq/stein.hpp"
#include "steinq/theta.hpp"

namespace steinq {

struct PathFunctional {
  std::string name;
  std::function<double(const Path&)> fn;
};

using TestFunctionalPanel = std::vector<PathFunctional>;

namespace detail {

// \int w(t) f(t) dt with w smooth and f piecewise affine: GK15 per segment
// is exact to machine precision for the product.
template <class W>
double weightedPathIntegral(const Path& f, W&& w) {
  const ArrayXd b = f.breakpoints();
  double total = 0.0;
  for (Eigen::Index i = 0; i + 1 < b.size(); ++i) {
    if (b[i + 1] <= b[i]) continue;
    double err;
    total += gk15([&](double t) { return w(t) * f(t); }, b[i], b[i + 1], err);
  }
  return total;
}

inline double logSumExp(const std::vector<double>& x, double beta) {
  double m = x[0];
  for (double v : x) m = std::max(m, v);
  double s = 0.0;
  for (double v : x) s += std::exp(beta * (v - m));
  return m + std::log(s / static_cast<double>(x.size())) / beta;
}

}  // namespace detail

/// The default panel: twelve bounded 1-Lipschitz functionals of the path,
/// deterministic and seed-independent.
///   - six smoothed weighted averages tanh(\int w_k f) with ||w_k||_{L^1} = 1,
///   - three smoothed running-max surrogates tanh(logsumexp_beta f(t_j)),
///     beta = 10, over grids of 9/17/33 points,
///   - three saturated evaluations tanh(f(t0)) at interior times.
inline TestFunctionalPanel defaultPanel(double T) {
  TestFunctionalPanel panel;
  struct Weight {
    std::string name;
    std::function<double(double)> w;
  };
  const double pi = 3.14159265358979323846;
  std::vector<Weight> weights{
      {"avg-flat", [T](double) { return 1.0 / T; }},
      {"avg-ramp-up", [T](double t) { return 2.0 * t / (T * T); }},
      {"avg-ramp-down", [T](double t) { return 2.0 * (T - t) / (T * T); }},
      {"avg-sine", [T, pi](double t) { return pi / (2.0 * T) * std::sin(pi * t / T); }},
      {"avg-exp",
       [T](double t) { return std::exp(-t) / (1.0 - std::exp(-T)); }},
      {"avg-quad", [T](double t) { return 3.0 * t * t / (T * T * T); }},
  };
  for (auto& wt : weights) {
    auto w = wt.w;
    panel.push_back({wt.name, [w](const Path& f) {
                       return std::tanh(detail::weightedPathIntegral(f, w));
                     }});
  }
  for (int points : {9, 17, 33}) {
    panel.push_back({"softmax-" + std::to_string(points), [points, T](const Path& f) {
                       std::vector<double> v(points);
                       for (int j = 0; j < points; ++j)
                         v[j] = f(T * static_cast<double>(j) / (points - 1));
                       return std::tanh(detail::logSumExp(v, 10.0));
                     }});
  }
  for (double frac : {0.25, 0.5, 0.75}) {
    panel.push_back({"eval-" + std::to_string(frac).substr(0, 4),
                     [frac, T](const Path& f) { return std::tanh(f(frac * T)); }});
  }
  return panel;
}

using PathSampler = std::function<Path(RandomStream&)>;

struct PanelDistance {
  double dhat;
  double se;          // delta-method standard error at the maximizing member
  std::string argmax;
  Eigen::VectorXd meansA, meansB;
};

/// dhat = max_k | mean_A F_k - mean_B F_k | over the panel, a lower bound of
/// the test-class distance. Replications are indexed substreams, so the
/// result does not depend on the worker count.
inline PanelDistance estimatePanelDistance(const PathSampler& samplerA, const PathSampler& samplerB,
                                           const TestFunctionalPanel& panel, int replications,
                                           const RandomStream& baseA, const RandomStream& baseB) {
  if (panel.empty()) throw std::invalid_argument("estimatePanelDistance: empty panel");
  if (replications < 2) throw std::invalid_argument("estimatePanelDistance: need >= 2 replications");
  const int K = static_cast<int>(panel.size());
  Eigen::MatrixXd va(replications, K), vb(replications, K);
  parallelFor(static_cast<std::size_t>(replications), [&](std::size_t r) {
    RandomStream ra = baseA.substream(r);
    RandomStream rb = baseB.substream(r);
    const Path pa = samplerA(ra);
    const Path pb = samplerB(rb);
    for (int k = 0; k < K; ++k) {
      va(static_cast<Eigen::Index>(r), k) = panel[k].fn(pa);
      vb(static_cast<Eigen::Index>(r), k) = panel[k].fn(pb);
    }
  });
  PanelDistance out;
  out.meansA = va.colwise().mean();
  out.meansB = vb.colwise().mean();
  int best = 0;
  double bestGap = -1.0;
  for (int k = 0; k < K; ++k) {
    const double gap = std::fabs(out.meansA[k] - out.meansB[k]);
    if (gap > bestGap) {
      bestGap = gap;
      best = k;
    }
  }
  const double m = static_cast<double>(replications);
  const double varA = (va.col(best).array() - out.meansA[best]).square().sum() / (m - 1.0);
  const double varB = (vb.col(best).array() - out.meansB[best]).square().sum() / (m - 1.0);
  out.dhat = bestGap;
  out.se = std::sqrt(varA / m + varB / m);
  out.argmax = panel[best].name;
  return out;
}

/// Interpolated Gaussian comparator: the piecewise-linear path with
/// independent centered Gaussian knot increments of variance xiSq_i * T/n.
/// With unit xiSq this is the interpolated standard Brownian motion; with the
/// gamma increments it is the interpolated time-changed one.
inline Path sampleInterpolatedGaussian(const Eigen::VectorXd& xiSq, double T, RandomStream& rng) {
  const int n = static_cast<int>(xiSq.size());
  ArrayXd k(n + 1), v(n + 1);
  k[0] = 0.0;
  v[0] = 0.0;
  const double h = T / n;
  for (int i = 0; i < n; ++i) {
    k[i + 1] = T * static_cast<double>(i + 1) / n;
    v[i + 1] = v[i] + std::sqrt(xiSq[i] * h) * rng.gaussian();
  }
  return Path::linear(T, std::move(k), std::move(v));
}

struct ExperimentConfig {
  QueueModel model = QueueModel::MM1;
  double lambda = 1.0, mu = 2.0, x0 = 1.0, T = 0.4;
  std::vector<int> nGrid{16, 64, 256};
  int replications = 2000;
  int brownianReplications = 200;
  std::string panel = "default";
  double eta = 0.1, p = 2.0;
  std::uint64_t seed = 20240901;
  std::string output;  // file prefix; empty = no files written
  bool enforceRegime = true;

  void validate() const {
    if (!(lambda > 0) || !(mu > 0) || !(T > 0))
      throw std::invalid_argument("ExperimentConfig: rates and horizon must be positive");
    if (nGrid.empty()) throw std::invalid_argument("ExperimentConfig: empty n grid");
    if (replications < 2) throw std::invalid_argument("ExperimentConfig: need replications >= 2");
    if (!(eta > 0 && eta < 0.5)) throw std::invalid_argument("ExperimentConfig: eta in (0, 1/2)");
    if (panel != "default")
      throw std::invalid_argument("ExperimentConfig: unknown panel id '" + panel + "'");
    if (model == QueueModel::MM1 && enforceRegime) {
      if (!(lambda < mu) || !(T <= x0 / (mu - lambda) + 1e-12))
        throw std::invalid_argument(
            "ExperimentConfig: the enforced regime needs lambda < mu and T <= x0/(mu-lambda)");
    }
    if (model == QueueModel::MMInfty && x0 != 0.0)
      throw std::invalid_argument("ExperimentConfig: the infinite-server model starts empty");
  }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"model", c.model == QueueModel::MM1 ? "mm1" : "mminfty"},
       {"lambda", c.lambda},
       {"mu", c.mu},
       {"x0", c.x0},
       {"T", c.T},
       {"n_grid", c.nGrid},
       {"replications", c.replications},
       {"brownian_replications", c.brownianReplications},
       {"panel", c.panel},
       {"eta", c.eta},
       {"p", c.p},
       {"seed", c.seed},
       {"output", c.output},
       {"enforce_regime", c.enforceRegime}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  const std::string model = j.at("model").get<std::string>();
  if (model == "mm1")
    c.model = QueueModel::MM1;
  else if (model == "mminfty")
    c.model = QueueModel::MMInfty;
  else
    throw std::invalid_argument("ExperimentConfig: unknown model '" + model + "'");
  c.lambda = j.at("lambda").get<double>();
  c.mu = j.at("mu").get<double>();
  c.x0 = j.value("x0", 0.0);
  c.T = j.at("T").get<double>();
  c.nGrid = j.at("n_grid").get<std::vector<int>>();
  c.replications = j.at("replications").get<int>();
  c.brownianReplications = j.value("brownian_replications", 200);
  c.panel = j.value("panel", std::string("default"));
  c.eta = j.value("eta", 0.1);
  c.p = j.value("p", 2.0);
  c.seed = j.at("seed").get<std::uint64_t>();
  c.output = j.value("output", std::string());
  c.enforceRegime = j.value("enforce_regime", true);
}

struct RateRow {
  int n;
  double interpolationGap, interpolationGapSE;  // E || Z - pi_n Z ||_inf
  double panelDistance, panelDistanceSE;        // between pi_n Z (or Y) and the comparator
  double brownianGap, brownianGapSE;            // E || pi_n B - B ||_{eta,p}
  double steinBnd;
  double total() const { return interpolationGap + panelDistance + brownianGap; }
};

struct RateFitResult {
  double exponent;
  double c;
  Eigen::VectorXd residuals;
  bool nonDecaying;
};

/// Least squares of log d on log n. With `logFactorShape` the fixed offset
/// log(log n / log log n) is removed first, so a clean
/// c log n/(log log n sqrt n) sequence returns exponent -1/2 and that c.
inline RateFitResult rateFit(const std::vector<std::pair<double, double>>& points,
                             bool logFactorShape = true) {
  if (points.size() < 3) throw std::invalid_argument("rateFit: need at least 3 points");
  const int m = static_cast<int>(points.size());
  Eigen::MatrixXd X(m, 2);
  Eigen::VectorXd y(m);
  for (int i = 0; i < m; ++i) {
    const double n = points[i].first;
    const double d = points[i].second;
    if (!(n > 1) || !(d > 0)) throw std::invalid_argument("rateFit: points must have n > 1, d > 0");
    X(i, 0) = 1.0;
    X(i, 1) = std::log(n);
    y[i] = std::log(d) - (logFactorShape ? std::log(std::log(n) / std::log(std::log(n))) : 0.0);
  }
  for (int i = 1; i < m; ++i)
    if (X(i, 1) == X(0, 1) && i == m - 1) throw std::invalid_argument("rateFit: degenerate design");
  const Eigen::Matrix2d gram = X.transpose() * X;
  if (std::fabs(gram.determinant()) < 1e-12) throw std::invalid_argument("rateFit: degenerate design");
  const Eigen::Vector2d beta = gram.ldlt().solve(X.transpose() * y);
  RateFitResult out;
  out.c = std::exp(beta[0]);
  out.exponent = beta[1];
  out.residuals = y - X * beta;
  out.nonDecaying = out.exponent > -0.05;
  return out;
}

struct RateReport {
  ExperimentConfig config;
  std::vector<RateRow> rows;
  double fittedBoundConstant = 0.0;  // c in c log n/(log log n sqrt n) over totals
  double fittedExponent = 0.0;       // decay exponent of the panel distance
  std::string route;                 // which fluctuation object the panel compares
  std::vector<std::pair<std::string, bool>> verdicts;
  std::string contentHash;
  bool allPassed() const {
    for (const auto& v : verdicts)
      if (!v.second) return false;
    return true;
  }
};

namespace detail {

inline std::string fnv1a64Hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

inline std::pair<double, double> meanSE(const std::vector<double>& v) {
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(v.size()))};
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const RateReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"n", row.n},
                    {"interpolation_gap", row.interpolationGap},
                    {"interpolation_gap_se", row.interpolationGapSE},
                    {"panel_distance", row.panelDistance},
                    {"panel_distance_se", row.panelDistanceSE},
                    {"brownian_gap", row.brownianGap},
                    {"brownian_gap_se", row.brownianGapSE},
                    {"stein_bound", row.steinBnd},
                    {"total", row.total()}});
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : r.verdicts) verdicts.push_back({{"name", v.first}, {"pass", v.second}});
  j = {{"config", r.config},
       {"route", r.route},
       {"rows", rows},
       {"fitted_bound_constant", r.fittedBoundConstant},
       {"fitted_exponent", r.fittedExponent},
       {"verdicts", verdicts},
       {"content_hash", r.contentHash}};
}

inline std::string reportCsv(const RateReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "n,term,value,se\n";
  for (const auto& row : r.rows) {
    os << row.n << ",interpolation_gap," << row.interpolationGap << "," << row.interpolationGapSE
       << "\n";
    os << row.n << ",panel_distance," << row.panelDistance << "," << row.panelDistanceSE << "\n";
    os << row.n << ",brownian_gap," << row.brownianGap << "," << row.brownianGapSE << "\n";
    os << row.n << ",stein_bound," << row.steinBnd << ",0\n";
  }
  return os.str();
}

/// Run the full three-term experiment over the n grid:
///   term 1: Monte Carlo E || Z_n - pi_n Z_n ||_inf,
///   term 2: panel distance between the interpolated fluctuation and its
///           matched interpolated Gaussian comparator,
///   term 3: Monte Carlo E || pi_n B - B ||_{eta,p},
/// plus the orthogonal-family bound at each n. Identical config and seed give
/// a byte-identical report regardless of the worker count.
inline RateReport runExperiment(const ExperimentConfig& configIn) {
  configIn.validate();
  RateReport report;
  report.config = configIn;

  // the infinite-server family is pinned at unit horizon; rescale time
  ExperimentConfig config = configIn;
  if (config.model == QueueModel::MMInfty && config.T != 1.0) {
    config.lambda = configIn.lambda * configIn.T;
    config.mu = configIn.mu * configIn.T;
    config.T = 1.0;
  }
  report.route = config.model == QueueModel::MM1 ? "direct-Z" : "theta-Y";

  const auto panel = defaultPanel(config.T);
  const RandomStream master(config.seed);

  std::vector<std::pair<double, double>> panelPoints, totalPoints;
  for (std::size_t ni = 0; ni < config.nGrid.size(); ++ni) {
    const int n = config.nGrid[ni];
    const QueueParams qp{config.lambda, config.mu, n, config.T, config.x0};
    RateRow row;
    row.n = n;

    // term 1
    std::vector<double> gaps(config.replications);
    const RandomStream term1Base = master.substream(ni * 8 + 1);
    parallelFor(static_cast<std::size_t>(config.replications), [&](std::size_t r) {
      try {
        RandomStream rng = term1Base.substream(r);
        const auto b = config.model == QueueModel::MM1 ? simulateMm1(qp, rng)
                                                       : simulateMmInftyTrapeze(qp, rng);
        gaps[r] = supDistance(b.Zn, interpolateAffine(b.Zn, n));
      } catch (const std::exception& e) {
        throw std::runtime_error("runExperiment[n=" + std::to_string(n) + ", replication=" +
                                 std::to_string(r) + ", seed=" + std::to_string(config.seed) +
                                 "]: " + e.what());
      }
    });
    std::tie(row.interpolationGap, row.interpolationGapSE) = detail::meanSE(gaps);

    // term 2
    const auto fam = buildFamily(config.model == QueueModel::MM1 ? FamilyKind::MM1
                                                                 : FamilyKind::MMInfty,
                                 config.lambda, config.mu, n, config.T);
    const Eigen::MatrixXd gram = gramMatrix(fam);
    const Eigen::VectorXd xiSq = gram.diagonal();
    PathSampler fluctuation = [&](RandomStream& rng) {
      try {
        const auto b = config.model == QueueModel::MM1 ? simulateMm1(qp, rng)
                                                       : simulateMmInftyTrapeze(qp, rng);
        return interpolateAffine(config.model == QueueModel::MM1 ? b.Zn : *b.Yn, n);
      } catch (const std::exception& e) {
        throw std::runtime_error("runExperiment[n=" + std::to_string(n) +
                                 ", seed=" + std::to_string(config.seed) + "]: " + e.what());
      }
    };
    // xiSq carries \int u_i^2 dnu; the comparator increments use xiSq_i T/n,
    // which recovers the interpolated B (unit case) or B o gamma
    PathSampler comparator = [&](RandomStream& rng) {
      return sampleInterpolatedGaussian(xiSq, config.T, rng);
    };
    const auto pd = estimatePanelDistance(fluctuation, comparator, panel, config.replications,
                                          master.substream(ni * 8 + 2), master.substream(ni * 8 + 3));
    row.panelDistance = pd.dhat;
    row.panelDistanceSE = pd.se;

    // term 3
    const auto bg = brownianInterpolationGap(config.eta, config.p, n,
                                             config.brownianReplications, 64 * n,
                                             master.substream(ni * 8 + 4));
    row.brownianGap = bg.estimate;
    row.brownianGapSE = bg.se;

    row.steinBnd = steinBound(fam, config.eta).bound;
    report.rows.push_back(row);
    panelPoints.push_back({static_cast<double>(n), std::max(pd.dhat, 1e-12)});
    totalPoints.push_back({static_cast<double>(n), row.total()});
  }

  if (report.rows.size() >= 3) {
    report.fittedExponent = rateFit(panelPoints, false).exponent;
  }
  // smallest single constant whose log n/(log log n sqrt n) curve dominates
  // every total on the grid
  report.fittedBoundConstant = 0.0;
  for (const auto& [n, tot] : totalPoints) {
    const double s = std::log(n) / (std::log(std::log(n)) * std::sqrt(n));
    report.fittedBoundConstant = std::max(report.fittedBoundConstant, tot / s);
  }

  // directional verdicts: the measured panel distance must sit below the
  // family bound plus the regularity terms
  for (const auto& row : report.rows) {
    const bool pass = row.panelDistance + 3.0 * row.panelDistanceSE <=
                      row.steinBnd + row.interpolationGap + row.brownianGap + 1e-12;
    report.verdicts.push_back(
        {"panel_distance_below_bound_n" + std::to_string(row.n), pass});
  }

  nlohmann::json body = report;
  body.erase("content_hash");
  report.contentHash = detail::fnv1a64Hex(body.dump());

  if (!config.output.empty()) {
    nlohmann::json full = report;
    std::ofstream js(configIn.output + ".json");
    js << full.dump(2) << "\n";
    std::ofstream cs(configIn.output + ".csv");
    cs << reportCsv(report);
  }
  return report;
}

}  // namespace steinq
