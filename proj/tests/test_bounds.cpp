#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "steinq/bounds.hpp"
#include "steinq/queues.hpp"

using namespace steinq;

TEST_CASE("lambert W fixed points") {
  CHECK(lambertW0(0.0) == 0.0);
  CHECK(lambertW0(std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-14));
  // bisection oracle for W(1)
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid * std::exp(mid) < 1.0)
      lo = mid;
    else
      hi = mid;
  }
  CHECK(lambertW0(1.0) == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-13));
  CHECK(lambertW0(1.0) == doctest::Approx(0.5671432904).epsilon(1e-9));
  CHECK_THROWS_AS(lambertW0(-0.5), std::domain_error);
}

TEST_CASE("lambert W satisfies the defining identity across twelve decades") {
  for (double x = 1e-6; x <= 1e6; x *= 10.0) {
    const double w = lambertW0(x);
    CHECK(w * std::exp(w) == doctest::Approx(x).epsilon(1e-12));
  }
  // near the branch point
  const double w = lambertW0(-0.99 * std::exp(-1.0));
  CHECK(w * std::exp(w) == doctest::Approx(-0.99 * std::exp(-1.0)).epsilon(1e-10));
}

TEST_CASE("max-of-poisson bound dominates the Monte Carlo mean") {
  const double nu = 1.0;
  const int n = 5000, M = 20000;
  const auto b = maxPoissonBound(n, nu);
  std::vector<double> maxima(M);
  parallelFor(M, [&](std::size_t r) {
    RandomStream rng = RandomStream(500).substream(r);
    long best = 0;
    for (int i = 0; i < n; ++i) best = std::max(best, rng.poisson(nu));
    maxima[r] = static_cast<double>(best);
  });
  double mean = 0;
  for (double v : maxima) mean += v;
  mean /= M;
  double var = 0;
  for (double v : maxima) var += (v - mean) * (v - mean);
  var /= (M - 1);
  CHECK(mean + 3 * std::sqrt(var / M) <= b.wForm);
}

TEST_CASE("max-of-poisson bound is nondecreasing in n") {
  double prev = 0;
  for (double n : {100.0, 1000.0, 10000.0, 100000.0}) {
    const double b = maxPoissonBound(n, 1.0).wForm;
    CHECK(b >= prev);
    prev = b;
  }
}

TEST_CASE("w-form equals the grid-minimized exponential-moment bound at nu = 1") {
  const double nu = 1.0;
  const double n = 5000.0;
  // oracle: inf_u (log n + nu(e^u - u - 1))/u over a 64-point grid, refined
  auto objective = [&](double u) { return (std::log(n) + nu * (std::exp(u) - u - 1.0)) / u; };
  double bestU = 0, bestV = 1e300;
  for (int i = 1; i <= 64; ++i) {
    const double u = 6.0 * i / 64.0;
    if (objective(u) < bestV) {
      bestV = objective(u);
      bestU = u;
    }
  }
  double a = std::max(1e-6, bestU - 0.2), c = bestU + 0.2;
  for (int i = 0; i < 200; ++i) {
    const double m1 = a + 0.382 * (c - a), m2 = c - 0.382 * (c - a);
    if (objective(m1) < objective(m2))
      c = m2;
    else
      a = m1;
  }
  const double infValue = objective(0.5 * (a + c));
  const auto b = maxPoissonBound(n, nu);
  CHECK(b.wForm == doctest::Approx(infValue + nu).epsilon(1e-6));
}

TEST_CASE("asymptotic form is flagged by regime") {
  const auto small = maxPoissonBound(50, 1.0);
  CHECK(!small.asymptoticValid);  // denominator near or below zero
  const auto large = maxPoissonBound(1e9, 1.0);
  CHECK(large.asymptoticValid);
  CHECK(large.asymptoticBound >= large.wForm);  // W(z) >= log z - log log z
  CHECK(large.validityThresholdN == doctest::Approx(std::exp(std::exp(2.0) + 1.0)));
}

TEST_CASE("interpolation gap bound closed form and domain") {
  CHECK(interpolationGapBound(1.0, std::exp(std::exp(1.0))) ==
        doctest::Approx(2.0 * std::exp(1.0)).epsilon(1e-12));
  CHECK_THROWS_AS(interpolationGapBound(1.0, 2.0), std::domain_error);
}

TEST_CASE("interpolation gap bound dominates the simulated single-server gap") {
  const int n = 100;
  const QueueParams p{1.0, 2.0, n, 0.4, 1.0};
  const int M = 300;
  std::vector<double> gaps(M);
  parallelFor(M, [&](std::size_t r) {
    RandomStream rng = RandomStream(501).substream(r);
    const auto b = simulateMm1(p, rng);
    gaps[r] = n * supDistance(b.Ln, interpolateAffine(b.Ln, n));
  });
  double mean = 0;
  for (double v : gaps) mean += v;
  mean /= M;
  double var = 0;
  for (double v : gaps) var += (v - mean) * (v - mean);
  var /= (M - 1);
  CHECK(mean + 3 * std::sqrt(var / M) <= interpolationGapBound(1.0, n));
}

TEST_CASE("per-interval oscillation is dominated by the jump count") {
  const int n = 50;
  const QueueParams p{1.0, 2.0, n, 0.4, 1.0};
  RandomStream rng(502);
  const auto b = simulateMm1(p, rng);
  const double h = p.T / n;
  // oscillation and up/down counts per interpolation interval
  std::vector<double> osc(n, 0.0);
  std::vector<long> jumps(n, 0);
  for (Eigen::Index k = 0; k < b.Ln.times().size(); ++k) {
    const double t = b.Ln.times()[k];
    int cell = std::min(n - 1, static_cast<int>(t / h));
    const double ref = b.Ln(cell * h);
    ++jumps[cell];
    osc[cell] = std::max(osc[cell], std::fabs(b.Ln.values()[k] - ref) * n);
  }
  for (int i = 0; i < n; ++i) CHECK(osc[i] <= static_cast<double>(jumps[i]) + 1e-9);
}

TEST_CASE("chebyshev tail bound") {
  CHECK(chebyshevTauBound(1.0, 100.0, 1.0) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(chebyshevTauBound(1.0, 200.0, 1.0) ==
        doctest::Approx(0.5 * chebyshevTauBound(1.0, 100.0, 1.0)).epsilon(1e-15));
  // Monte Carlo probability of doubling the mean count lies below the bound
  const double lambda = 1.0, T = 1.0;
  const int n = 100, M = 10000;
  long exceed = 0;
  RandomStream rng(503);
  for (int r = 0; r < M; ++r)
    if (rng.poisson(lambda * n * T) >= 2.0 * lambda * n * T) ++exceed;
  CHECK(static_cast<double>(exceed) / M <= chebyshevTauBound(lambda, n, T));
}

TEST_CASE("brownian interpolation gap: resolution guard and halving ratio") {
  CHECK_THROWS_AS(brownianInterpolationGap(0.1, 2.0, 16, 10, 64, RandomStream(504)),
                  std::invalid_argument);
  const double eta = 0.1;
  const auto g16 = brownianInterpolationGap(eta, 2.0, 16, 200, 64 * 16, RandomStream(505));
  const auto g32 = brownianInterpolationGap(eta, 2.0, 32, 200, 64 * 32, RandomStream(506));
  CHECK(g32.estimate < g16.estimate);  // monotone decreasing trend
  const double ratio = g32.estimate / g16.estimate;
  const double want = std::pow(2.0, -(0.5 - eta));
  CHECK(ratio == doctest::Approx(want).epsilon(0.25));
}
