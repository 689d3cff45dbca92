// Command-line front end: run experiments from a JSON config, verify the
// numerical suites, and fit decay rates to exported measurements.
#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "steinq/acceptance.hpp"
#include "steinq/harness.hpp"

namespace {

int runCommand(const std::string& configPath) {
  std::ifstream in(configPath);
  if (!in) {
    std::fprintf(stderr, "cannot open config '%s'\n", configPath.c_str());
    return 2;
  }
  nlohmann::json j;
  in >> j;
  const auto config = j.get<steinq::ExperimentConfig>();
  const auto report = steinq::runExperiment(config);
  std::printf("route: %s\n", report.route.c_str());
  std::printf("%6s %16s %16s %16s %14s\n", "n", "interp-gap", "panel-dist", "brownian-gap",
              "bound");
  for (const auto& row : report.rows)
    std::printf("%6d %10.6f+-%.4f %10.6f+-%.4f %10.6f+-%.4f %14.6f\n", row.n,
                row.interpolationGap, row.interpolationGapSE, row.panelDistance,
                row.panelDistanceSE, row.brownianGap, row.brownianGapSE, row.steinBnd);
  std::printf("fitted bound constant: %.6f\n", report.fittedBoundConstant);
  for (const auto& v : report.verdicts)
    std::printf("[%s] %s\n", v.second ? "PASS" : "FAIL", v.first.c_str());
  std::printf("content hash: %s\n", report.contentHash.c_str());
  if (!config.output.empty())
    std::printf("wrote %s.json and %s.csv\n", config.output.c_str(), config.output.c_str());
  return report.allPassed() ? 0 : 1;
}

int verifyCommand(const std::string& suite, std::uint64_t seed) {
  const auto ids = steinq::acceptance::suiteCriteria(suite);
  const auto results = steinq::acceptance::runMany(ids, seed);
  bool all = true;
  for (const auto& r : results) {
    std::printf("[%s] %02d %-28s (%6.2f s)  %s\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                r.seconds, r.detail.c_str());
    all = all && r.pass;
  }
  return all ? 0 : 1;
}

int fitCommand(const std::string& inputPath, bool logFactorShape, const std::string& term) {
  std::ifstream in(inputPath);
  if (!in) {
    std::fprintf(stderr, "cannot open input '%s'\n", inputPath.c_str());
    return 2;
  }
  std::vector<std::pair<double, double>> points;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 2) continue;
    try {
      if (cells.size() >= 3 && !term.empty()) {
        // report-style rows: n,term,value,se
        if (cells[1] != term) continue;
        points.push_back({std::stod(cells[0]), std::stod(cells[2])});
      } else {
        points.push_back({std::stod(cells[0]), std::stod(cells[1])});
      }
    } catch (const std::exception&) {
      continue;  // header or malformed line
    }
  }
  try {
    const auto fit = steinq::rateFit(points, logFactorShape);
    std::printf("points: %zu\n", points.size());
    std::printf("exponent: %.6f\n", fit.exponent);
    std::printf("constant: %.6f\n", fit.c);
    std::printf("non-decaying: %s\n", fit.nonDecaying ? "yes" : "no");
    std::printf("residuals:");
    for (Eigen::Index i = 0; i < fit.residuals.size(); ++i)
      std::printf(" %.4g", fit.residuals[i]);
    std::printf("\n");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fit error: %s\n", e.what());
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Queueing diffusion-approximation simulators and numerical verification"};
  app.require_subcommand(1);

  std::string configPath;
  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("--config", configPath, "experiment config file")->required();

  std::string suite = "all";
  std::uint64_t seed = steinq::acceptance::kDefaultSeed;
  auto* verify = app.add_subcommand("verify", "run a verification suite");
  verify->add_option("--suite", suite, "one of gram, appendixB, bounds, theta, ppp, all");
  verify->add_option("--seed", seed, "master seed for the Monte Carlo checks");

  std::string inputPath;
  bool logFactorShape = false;
  std::string term;
  auto* fit = app.add_subcommand("fit", "fit a decay rate to (n, value) CSV rows");
  fit->add_option("--input", inputPath, "CSV file of n,value rows or a report CSV")->required();
  fit->add_flag("--log-factor-shape", logFactorShape,
                "remove the log n/log log n factor before the power-law fit");
  fit->add_option("--term", term, "when reading a report CSV, which term column to fit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return runCommand(configPath);
    if (*verify) return verifyCommand(suite, seed);
    if (*fit) return fitCommand(inputPath, logFactorShape, term);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
