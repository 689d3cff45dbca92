#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "steinq/rng.hpp"
#include "steinq/stein.hpp"

using namespace steinq;

TEST_CASE("single-kernel family has constant absolute value") {
  const auto fam = buildFamily(FamilyKind::MM1, 1.0, 2.0, 1, 1.5);
  const auto u = familyKernel(fam, 0);
  const double want = 1.0 / std::sqrt(1.5 * 3.0);
  for (double s : {0.0, 0.7, 1.49}) {
    CHECK(std::fabs(u.eval(s, 1.0)) == doctest::Approx(want).epsilon(1e-15));
    CHECK(std::fabs(u.eval(s, -1.0)) == doctest::Approx(want).epsilon(1e-15));
  }
  CHECK(u.eval(1.5, 1.0) == 0.0);  // right-open strip
}

TEST_CASE("trapeze geometry of the infinite-server kernels") {
  const auto fam = buildFamily(FamilyKind::MMInfty, 1.0, 1.0, 4, 1.0);
  const int i = 1;
  const double h = 0.25;
  const auto u = familyKernel(fam, i);
  // membership indicator: in service at the grid point
  auto alpha = [&](double x, double z) {
    return (x <= i * h && i * h <= x + z) ? 1.0 : 0.0;
  };
  for (double x : {0.1, 0.2, 0.3, 0.6}) {
    for (double z : {0.01, 0.2, 1.0}) {
      CHECK(detail::alphaInd(i * h, x, z) == alpha(x, z));
      const double want = detail::alphaInd((i + 1) * h, x, z) - alpha(x, z) +
                          fam.mu * detail::betaOverlap(i * h, (i + 1) * h, x, z);
      CHECK(u.eval(x, z) == want);
    }
  }
  // full overlap: arrival before i/n, departure after (i+1)/n
  CHECK(detail::betaOverlap(i * h, (i + 1) * h, 0.1, 2.0) == doctest::Approx(h).epsilon(1e-15));
  // partial overlap from the left
  CHECK(detail::betaOverlap(i * h, (i + 1) * h, 0.3, 2.0) ==
        doctest::Approx((i + 1) * h - 0.3).epsilon(1e-13));
}

TEST_CASE("infinite-server family requires unit horizon") {
  CHECK_THROWS_AS(buildFamily(FamilyKind::MMInfty, 1.0, 1.0, 4, 2.0), std::invalid_argument);
}

TEST_CASE("single-server Gram matrix is the identity exactly") {
  for (int n : {4, 16, 64}) {
    for (auto [lam, mu] : {std::pair{1.0, 2.0}, {1.0, 3.0}, {2.0, 5.0}}) {
      const auto fam = buildFamily(FamilyKind::MM1, lam, mu, n, 1.0);
      const Eigen::MatrixXd g = gramMatrix(fam);
      CHECK((g - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  // quadrature route agrees
  const auto fam = buildFamily(FamilyKind::MM1, 1.0, 2.0, 4, 1.0);
  const Eigen::MatrixXd gq = gramMatrix(fam, GramMethod::Quadrature);
  CHECK((gq - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("off-diagonal cancellation is pairwise and exact") {
  const auto fam = buildFamily(FamilyKind::MMInfty, 1.0, 1.0, 2, 1.0);
  const auto t = crossTermsClosed(fam, 0, 1);
  CHECK(t.i1 + t.i3 == 0.0);
  CHECK(t.i2 + t.i4 == 0.0);
  CHECK(t.sum() == 0.0);
}

TEST_CASE("cross terms match their defining integrals") {
  RandomStream rng(400);
  for (int rep = 0; rep < 6; ++rep) {
    const int n = 3 + static_cast<int>(rng.uniform() * 10);
    const double lam = 0.5 + 2.0 * rng.uniform();
    const double mu = 0.5 + 2.5 * rng.uniform();
    const auto fam = buildFamily(FamilyKind::MMInfty, lam, mu, n, 1.0);
    const int i = static_cast<int>(rng.uniform() * (n - 1));
    const int j = i + 1 + static_cast<int>(rng.uniform() * (n - i - 1));
    const auto c = crossTermsClosed(fam, i, j);
    const auto q = crossTermsQuadrature(fam, i, j);
    CHECK(c.i1 == doctest::Approx(q.i1).epsilon(1e-6));
    CHECK(c.i2 == doctest::Approx(q.i2).epsilon(1e-6));
    CHECK(c.i3 == doctest::Approx(q.i3).epsilon(1e-6));
    CHECK(c.i4 == doctest::Approx(q.i4).epsilon(1e-6));
  }
  const auto fam = buildFamily(FamilyKind::MMInfty, 1.0, 1.0, 4, 1.0);
  CHECK_THROWS_AS(crossTermsClosed(fam, 2, 1), std::invalid_argument);
  CHECK_THROWS_AS(crossTermsQuadrature(fam, 2, 2), std::invalid_argument);
}

TEST_CASE("diagonal terms sum to the gamma increment") {
  const auto fam = buildFamily(FamilyKind::MMInfty, 1.0, 1.0, 4, 1.0);
  const auto d = diagTermsClosed(fam, 2);
  const double want = 2.0 * 1.0 + (1.0 * 4.0 / 1.0) * (std::exp(-3.0 / 4) - std::exp(-2.0 / 4));
  CHECK(d.sum() == doctest::Approx(want).epsilon(1e-12));
  const auto q = diagTermsQuadrature(fam, 2);
  CHECK(d.j1 == doctest::Approx(q.j1).epsilon(1e-8));
  CHECK(d.j2 == doctest::Approx(q.j2).epsilon(1e-8));
  CHECK(d.j3 == doctest::Approx(q.j3).epsilon(1e-8));
  CHECK(d.j4 == doctest::Approx(q.j4).epsilon(1e-8));
  CHECK(d.j5 == doctest::Approx(q.j5).epsilon(1e-8));
  CHECK(d.j6 == doctest::Approx(q.j6).epsilon(1e-8));
}

TEST_CASE("gram diagonal equals n times the gamma increments") {
  for (int n : {2, 8, 32, 64}) {
    for (double mu : {1.0, 2.0}) {
      const auto fam = buildFamily(FamilyKind::MMInfty, 1.0, mu, n, 1.0);
      const Eigen::MatrixXd g = gramMatrix(fam);
      for (int i = 0; i < n; ++i) {
        const double want =
            n * (gammaFn((i + 1.0) / n, 1.0, mu) - gammaFn(static_cast<double>(i) / n, 1.0, mu));
        CHECK(g(i, i) == doctest::Approx(want).epsilon(1e-12));
        if (i + 2 < n) CHECK(g(i, i + 2) == 0.0);
      }
    }
  }
  // the specific value 2 (gamma(1/2) - gamma(0)) = 2 e^{-1/2}
  const auto fam = buildFamily(FamilyKind::MMInfty, 1.0, 1.0, 2, 1.0);
  CHECK(gramMatrix(fam)(0, 0) == doctest::Approx(2.0 * std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("quadrature gram is diagonal to 1e-8") {
  const auto fam = buildFamily(FamilyKind::MMInfty, 1.0, 2.0, 6, 1.0);
  const Eigen::MatrixXd gq = gramMatrix(fam, GramMethod::Quadrature);
  const Eigen::MatrixXd gc = gramMatrix(fam, GramMethod::ClosedForm);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      if (i == j)
        CHECK(gq(i, i) == doctest::Approx(gc(i, i)).epsilon(1e-8));
      else
        CHECK(std::fabs(gq(i, j)) < 1e-8);
    }
  }
}

TEST_CASE("single-server triple sum closed form") {
  const auto fam = buildFamily(FamilyKind::MM1, 1.0, 3.0, 4, 1.0);
  CHECK(tripleAbsSum(fam) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(tripleAbsSum(fam, GramMethod::Quadrature) == doctest::Approx(2.0).epsilon(1e-10));
  // triple/n does not depend on n
  for (int n : {2, 8, 32}) {
    const auto f = buildFamily(FamilyKind::MM1, 1.0, 3.0, n, 1.0);
    CHECK(tripleAbsSum(f) / n == doctest::Approx(0.5).epsilon(1e-14));
  }
}

TEST_CASE("infinite-server triple sum: exact cells match the quadrature oracle") {
  for (int n : {2, 5, 8}) {
    for (double mu : {1.0, 2.5}) {
      const auto fam = buildFamily(FamilyKind::MMInfty, 1.3, mu, n, 1.0);
      const double ex = tripleAbsSum(fam);
      const double qu = tripleAbsSum(fam, GramMethod::Quadrature);
      CHECK(ex == doctest::Approx(qu).epsilon(1e-9));
    }
  }
}

TEST_CASE("triple sum dominates the diagonal-triple subsum") {
  const auto fam = buildFamily(FamilyKind::MMInfty, 1.0, 1.5, 6, 1.0);
  double diagOnly = 0.0;
  for (int i = 0; i < fam.n; ++i) {
    const auto k = familyKernel(fam, i);
    diagOnly += detail::trapezeQuadrature(
        fam,
        [&](double x, double z) {
          const double v = std::fabs(k.eval(x, z));
          return v * v * v;
        },
        i, i, {1e-9, 1e-9, 40});
  }
  CHECK(tripleAbsSum(fam) >= diagOnly);
}

TEST_CASE("stein bound values and monotonicity") {
  const auto fam = buildFamily(FamilyKind::MM1, 1.0, 2.0, 16, 1.0);
  const auto repSmall = steinBound(fam, 1e-9);
  CHECK(repSmall.bound ==
        doctest::Approx(0.5 / std::sqrt(16.0) / std::sqrt(3.0)).epsilon(1e-6));
  const auto repMid = steinBound(fam, 0.2);
  const auto repHigh = steinBound(fam, 0.4);
  CHECK(repSmall.bound < repMid.bound);
  CHECK(repMid.bound < repHigh.bound);
  CHECK_THROWS_AS(steinBound(fam, 0.7), std::invalid_argument);
  CHECK_THROWS_AS(steinBound(fam, 0.0), std::invalid_argument);
}

TEST_CASE("infinite-server bound decays like n^{-1/2+eta} with a stable constant") {
  const double eta = 0.1;
  double lo = 1e300, hi = 0.0;
  for (int n : {8, 16, 32, 64}) {
    const auto fam = buildFamily(FamilyKind::MMInfty, 1.0, 1.0, n, 1.0);
    const auto rep = steinBound(fam, eta);
    const double c = rep.bound / std::pow(static_cast<double>(n), -0.5 + eta);
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  CHECK(hi / lo < 1.5);
}

TEST_CASE("stein bound rejects a non-orthogonal family, naming the pair") {
  auto fam = buildFamily(FamilyKind::MMInfty, 1.0, 2.0, 4, 1.0);
  fam.measure = ControlMeasure::serviceMarks(1.0, 1.0, 4, 1.0);  // kernels no longer orthogonal
  try {
    steinBound(fam, 0.1, GramMethod::Quadrature);
    CHECK(false);
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("pair") != std::string::npos);
  }
}

TEST_CASE("xi squared carries the gamma increments after the T/n rescaling") {
  const int n = 8;
  const auto fam = buildFamily(FamilyKind::MMInfty, 1.0, 2.0, n, 1.0);
  const auto rep = steinBound(fam, 0.1);
  for (int i = 0; i < n; ++i) {
    const double dgamma =
        gammaFn((i + 1.0) / n, 1.0, 2.0) - gammaFn(static_cast<double>(i) / n, 1.0, 2.0);
    CHECK(rep.xiSq[i] * (1.0 / n) == doctest::Approx(dgamma).epsilon(1e-12));
  }
  // report serializes
  const nlohmann::json j = rep;
  CHECK(j.at("triple_abs_sum").get<double>() == rep.tripleSum);
  CHECK(j.at("family").get<std::string>() == "mminfty");
}
