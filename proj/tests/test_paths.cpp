#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "steinq/paths.hpp"
#include "steinq/rng.hpp"

using namespace steinq;

namespace {

Path randomStepPath(RandomStream& rng, double T, int jumps) {
  ArrayXd t(jumps), v(jumps);
  double val = 0;
  for (int i = 0; i < jumps; ++i) {
    t[i] = rng.uniform() * T;
    val += rng.gaussian();
    v[i] = val;
  }
  std::sort(t.data(), t.data() + jumps);
  return Path::step(T, 0.0, std::move(t), std::move(v));
}

// pointwise a f + b g for step paths, as an independent construction
Path stepCombination(double a, const Path& f, double b, const Path& g) {
  std::vector<double> times;
  for (Eigen::Index i = 0; i < f.times().size(); ++i) times.push_back(f.times()[i]);
  for (Eigen::Index i = 0; i < g.times().size(); ++i) times.push_back(g.times()[i]);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  ArrayXd t(times.size()), v(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    t[i] = times[i];
    v[i] = a * f(times[i]) + b * g(times[i]);
  }
  return Path::step(f.horizon(), a * f(0.0) + b * g(0.0) - 0.0, std::move(t), std::move(v));
}

}  // namespace

TEST_CASE("step path evaluation is rcll") {
  ArrayXd t(2), v(2);
  t << 0.3, 0.7;
  v << 1.0, -2.0;
  const Path f = Path::step(1.0, 0.5, t, v);
  CHECK(f(0.0) == 0.5);
  CHECK(f(0.3) == 1.0);           // right continuous
  CHECK(f.leftLimit(0.3) == 0.5);  // left limit keeps the old value
  CHECK(f(0.5) == 1.0);
  CHECK(f(0.7) == -2.0);
  CHECK(f(1.0) == -2.0);
  CHECK(f.integral(1.0) == doctest::Approx(0.5 * 0.3 + 1.0 * 0.4 - 2.0 * 0.3).epsilon(1e-15));
}

TEST_CASE("linear path with a repeated knot encodes a jump") {
  ArrayXd k(4), v(4);
  k << 0.0, 0.5, 0.5, 1.0;
  v << 0.0, 1.0, 3.0, 4.0;
  const Path f = Path::linear(1.0, k, v);
  CHECK(f(0.25) == doctest::Approx(0.5));
  CHECK(f.leftLimit(0.5) == 1.0);
  CHECK(f(0.5) == 3.0);
  CHECK(f(0.75) == doctest::Approx(3.5));
  CHECK(f.integral(1.0) == doctest::Approx(0.25 + 3.5 * 0.5).epsilon(1e-15));
}

TEST_CASE("exp-segment path evaluates and integrates in closed form") {
  ArrayXd s(2), a(2), b(2), c(2);
  s << 0.0, 0.4;
  a << 1.0, 2.0;
  b << 0.5, 0.0;
  c << -1.0, 0.3;
  const double tau = 2.0;
  const Path f = Path::expSegments(1.0, tau, s, a, b, c);
  CHECK(f(0.0) == doctest::Approx(0.0));
  CHECK(f(0.2) == doctest::Approx(1.0 + 0.1 - std::exp(-0.4)));
  CHECK(f(0.4) == doctest::Approx(2.3));
  // integral against a fine Riemann sum
  const int n = 200000;
  double riemann = 0;
  for (int i = 0; i < n; ++i) riemann += f((i + 0.5) / n) / n;
  CHECK(f.integral(1.0) == doctest::Approx(riemann).epsilon(1e-8));
}

TEST_CASE("affine interpolation matches the path at every mesh point") {
  RandomStream rng(3);
  const Path f = randomStepPath(rng, 2.0, 40);
  for (int n : {1, 7, 16}) {
    const Path pf = interpolateAffine(f, n);
    for (int i = 0; i <= n; ++i) {
      const double ti = 2.0 * i / n;
      CHECK(pf(ti) == doctest::Approx(f(ti)).epsilon(1e-15));
    }
  }
}

TEST_CASE("interpolating an affine path returns it exactly") {
  ArrayXd k(2), v(2);
  k << 0.0, 1.0;
  v << 0.25, -1.75;
  const Path f = Path::linear(1.0, k, v);
  const Path pf = interpolateAffine(f, 8);
  for (double t : {0.0, 0.1, 0.37, 0.5, 0.777, 1.0})
    CHECK(pf(t) == doctest::Approx(f(t)).epsilon(1e-15));
}

TEST_CASE("interpolation of the step path jumping at 0.3 with n=2") {
  ArrayXd t(1), v(1);
  t << 0.3;
  v << 1.0;
  const Path f = Path::step(1.0, 0.0, t, v);
  const Path pf = interpolateAffine(f, 2);
  // line from (0,0) to (0.5,1), then flat at 1
  CHECK(pf(0.0) == 0.0);
  CHECK(pf(0.25) == doctest::Approx(0.5));
  CHECK(pf(0.5) == 1.0);
  CHECK(pf(0.75) == doctest::Approx(1.0));
  CHECK(pf(1.0) == 1.0);
}

TEST_CASE("interpolation rejects n = 0") {
  const Path f = Path::constant(1.0, 2.0);
  CHECK_THROWS_AS(interpolateAffine(f, 0), std::invalid_argument);
}

TEST_CASE("interpolation is linear on the mesh and idempotent") {
  RandomStream rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const Path f = randomStepPath(rng, 1.0, 25);
    const Path g = randomStepPath(rng, 1.0, 25);
    const double a = rng.gaussian(), b = rng.gaussian();
    const int n = 9;
    const Path lhs = interpolateAffine(stepCombination(a, f, b, g), n);
    const Path pf = interpolateAffine(f, n);
    const Path pg = interpolateAffine(g, n);
    for (int i = 0; i <= n; ++i) {
      const double ti = static_cast<double>(i) / n;
      CHECK(std::fabs(lhs(ti) - (a * pf(ti) + b * pg(ti))) < 1e-14 * (1 + std::fabs(lhs(ti))));
    }
    const Path ppf = interpolateAffine(pf, n);
    CHECK((ppf.values() == pf.values()).all());
  }
}

TEST_CASE("paths serialize to json and back") {
  RandomStream rng(5);
  const Path f = randomStepPath(rng, 1.5, 10);
  ArrayXd gv(5);
  gv << 0, 1, -1, 2, 0;
  const Path g = Path::grid(1.5, gv);
  ArrayXd k(3), v(3);
  k << 0.0, 0.4, 1.5;
  v << 1, 2, 3;
  const Path h = Path::linear(1.5, k, v);
  ArrayXd s(1), aa(1), bb(1), cc(1);
  s << 0.0;
  aa << 2.0;
  bb << -0.5;
  cc << 1.0;
  const Path e = Path::expSegments(1.5, 3.0, s, aa, bb, cc);
  for (const Path* p : {&f, &g, &h, &e}) {
    nlohmann::json j = *p;
    const Path q = j.get<Path>();
    for (double t : {0.0, 0.2, 0.5, 0.9, 1.2, 1.5}) {
      CHECK(q(t) == doctest::Approx((*p)(t)).epsilon(1e-15));
      CHECK(q.leftLimit(t) == doctest::Approx(p->leftLimit(t)).epsilon(1e-15));
    }
  }
}

TEST_CASE("constructor validation") {
  ArrayXd t(2), v(2);
  t << 0.5, 0.3;  // decreasing
  v << 1, 2;
  CHECK_THROWS_AS(Path::step(1.0, 0, t, v), std::invalid_argument);
  ArrayXd k(2), w(3);
  k << 0.0, 1.0;
  w << 1, 2, 3;
  CHECK_THROWS_AS(Path::linear(1.0, k, w), ShapeError);
  ArrayXd one(1);
  one << 0.0;
  CHECK_THROWS_AS(Path::grid(1.0, one), ShapeError);
  // a knot may encode one jump, not more
  ArrayXd k3(5), v3(5);
  k3 << 0.0, 0.5, 0.5, 0.5, 1.0;
  v3 << 0, 1, 2, 3, 4;
  CHECK_THROWS_AS(Path::linear(1.0, k3, v3), std::invalid_argument);
}
