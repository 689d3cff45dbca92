#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "steinq/harness.hpp"

using namespace steinq;

namespace {

Path randomStepPath(RandomStream& rng, double T, int jumps) {
  ArrayXd t(jumps), v(jumps);
  double val = 0;
  for (int i = 0; i < jumps; ++i) {
    t[i] = rng.uniform() * T;
    val += 0.3 * rng.gaussian();
    v[i] = val;
  }
  std::sort(t.data(), t.data() + jumps);
  return Path::step(T, 0.0, std::move(t), std::move(v));
}

}  // namespace

TEST_CASE("panel members are bounded by one and 1-Lipschitz") {
  const double T = 0.7;
  const auto panel = defaultPanel(T);
  CHECK(panel.size() == 12);
  RandomStream rng(600);
  for (int rep = 0; rep < 60; ++rep) {
    const Path f = randomStepPath(rng, T, 14);
    const Path g = randomStepPath(rng, T, 14);
    const double dist = supDistance(f, g);
    for (const auto& member : panel) {
      const double vf = member.fn(f);
      const double vg = member.fn(g);
      CHECK(std::fabs(vf) <= 1.0);
      CHECK(std::fabs(vg) <= 1.0);
      if (dist > 0) CHECK(std::fabs(vf - vg) / dist <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("panel members are deterministic") {
  const auto p1 = defaultPanel(1.0);
  const auto p2 = defaultPanel(1.0);
  RandomStream rng(601);
  const Path f = randomStepPath(rng, 1.0, 9);
  for (std::size_t k = 0; k < p1.size(); ++k) CHECK(p1[k].fn(f) == p2[k].fn(f));
}

TEST_CASE("panel distance vanishes on identical sampler streams") {
  const auto panel = defaultPanel(1.0);
  PathSampler s = [](RandomStream& rng) { return randomStepPath(rng, 1.0, 10); };
  const auto d = estimatePanelDistance(s, s, panel, 200, RandomStream(602), RandomStream(602));
  CHECK(d.dhat == 0.0);
}

TEST_CASE("panel distance on independent copies of the same law stays within noise") {
  const auto panel = defaultPanel(1.0);
  PathSampler s = [](RandomStream& rng) { return randomStepPath(rng, 1.0, 10); };
  const auto d = estimatePanelDistance(s, s, panel, 4000, RandomStream(603), RandomStream(604));
  // Bonferroni over 12 members at the 3-sigma level
  CHECK(d.dhat <= 3.5 * d.se + 0.02);
  // the estimate never exceeds the largest pairwise gap by construction
  double maxGap = 0;
  for (Eigen::Index k = 0; k < d.meansA.size(); ++k)
    maxGap = std::max(maxGap, std::fabs(d.meansA[k] - d.meansB[k]));
  CHECK(d.dhat == maxGap);
}

TEST_CASE("panel distance rejects an empty panel") {
  PathSampler s = [](RandomStream& rng) { return randomStepPath(rng, 1.0, 3); };
  CHECK_THROWS_AS(estimatePanelDistance(s, s, {}, 10, RandomStream(605), RandomStream(606)),
                  std::invalid_argument);
}

TEST_CASE("rate fit recovers exact power laws") {
  std::vector<std::pair<double, double>> pure;
  for (double n : {16.0, 32.0, 64.0, 128.0, 256.0}) pure.push_back({n, std::pow(n, -0.5)});
  const auto fit = rateFit(pure, false);
  CHECK(fit.exponent == doctest::Approx(-0.5).epsilon(1e-10));
  CHECK(fit.c == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(!fit.nonDecaying);

  std::vector<std::pair<double, double>> shaped;
  for (double n : {16.0, 32.0, 64.0, 128.0}) {
    shaped.push_back({n, std::log(n) / (std::log(std::log(n)) * std::sqrt(n))});
  }
  const auto fitShaped = rateFit(shaped, true);
  CHECK(fitShaped.exponent == doctest::Approx(-0.5).epsilon(1e-10));
  CHECK(fitShaped.c == doctest::Approx(1.0).epsilon(1e-10));

  std::vector<std::pair<double, double>> flat;
  for (double n : {16.0, 32.0, 64.0}) flat.push_back({n, 0.37});
  const auto fitFlat = rateFit(flat, false);
  CHECK(std::fabs(fitFlat.exponent) < 1e-12);
  CHECK(fitFlat.nonDecaying);

  CHECK_THROWS_AS(rateFit({{16.0, 1.0}, {32.0, 0.5}}, false), std::invalid_argument);
}

TEST_CASE("experiment config serializes and validates") {
  ExperimentConfig c;
  c.model = QueueModel::MM1;
  c.lambda = 1.0;
  c.mu = 2.0;
  c.x0 = 1.0;
  c.T = 0.4;
  c.nGrid = {8, 16};
  c.replications = 50;
  c.seed = 7;
  const nlohmann::json j = c;
  const auto back = j.get<ExperimentConfig>();
  CHECK(back.mu == 2.0);
  CHECK(back.nGrid == c.nGrid);
  CHECK(back.seed == 7);

  ExperimentConfig bad = c;
  bad.mu = 0.5;  // lambda > mu violates the enforced regime
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  ExperimentConfig badInf = c;
  badInf.model = QueueModel::MMInfty;
  badInf.x0 = 1.0;
  CHECK_THROWS_AS(badInf.validate(), std::invalid_argument);
  ExperimentConfig badPanel = c;
  badPanel.panel = "bespoke";
  CHECK_THROWS_AS(badPanel.validate(), std::invalid_argument);
}

TEST_CASE("a small experiment runs, reports all terms, and is deterministic") {
  ExperimentConfig c;
  c.model = QueueModel::MM1;
  c.lambda = 1.0;
  c.mu = 2.0;
  c.x0 = 1.0;
  c.T = 0.4;
  c.nGrid = {16};
  c.replications = 300;
  c.brownianReplications = 40;
  c.seed = 99;
  const auto r1 = runExperiment(c);
  REQUIRE(r1.rows.size() == 1);
  CHECK(r1.rows[0].interpolationGap > 0);
  CHECK(r1.rows[0].brownianGap > 0);
  CHECK(r1.rows[0].steinBnd > 0);
  CHECK(r1.route == "direct-Z");

  const auto r2 = runExperiment(c);
  const nlohmann::json j1 = r1, j2 = r2;
  CHECK(j1.dump() == j2.dump());
  CHECK(reportCsv(r1) == reportCsv(r2));
  CHECK(r1.contentHash == r2.contentHash);

  // worker count must not affect the bytes
  setenv("STEINQ_THREADS", "3", 1);
  const auto r3 = runExperiment(c);
  unsetenv("STEINQ_THREADS");
  const nlohmann::json j3 = r3;
  CHECK(j1.dump() == j3.dump());
}

TEST_CASE("drift-regime totals sit below the single fitted bound curve") {
  ExperimentConfig c;
  c.model = QueueModel::MM1;
  c.lambda = 1.0;
  c.mu = 2.0;
  c.x0 = 1.0;
  c.T = 0.4;
  c.nGrid = {16, 64, 256};
  c.replications = 400;
  c.brownianReplications = 40;
  c.seed = 101;
  const auto r = runExperiment(c);
  REQUIRE(r.rows.size() == 3);
  for (const auto& row : r.rows) {
    const double shape =
        std::log(row.n) / (std::log(std::log(row.n)) * std::sqrt(static_cast<double>(row.n)));
    CHECK(row.total() <= r.fittedBoundConstant * shape + 1e-12);
  }
}

TEST_CASE("the infinite-server experiment uses the theta route") {
  ExperimentConfig c;
  c.model = QueueModel::MMInfty;
  c.lambda = 1.0;
  c.mu = 1.0;
  c.x0 = 0.0;
  c.T = 1.0;
  c.nGrid = {16};
  c.replications = 300;
  c.brownianReplications = 40;
  c.seed = 100;
  const auto r = runExperiment(c);
  CHECK(r.route == "theta-Y");
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].panelDistance >= 0);
  CHECK(r.verdicts.size() == 1);
}
