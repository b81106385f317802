#include <cmath>
#include <sstream>

#include "doctest.h"
#include "helmbif/io.hpp"
#include "helmbif/radial_core.hpp"

using namespace helmbif;

namespace {

double max_err_free(const RadialProfile& w, double lambda) {
  const double k = std::sqrt(lambda);
  double e = std::abs(w.values(0) - 1.0);
  for (Eigen::Index i = 1; i < w.size(); ++i) {
    const double r = w.grid.nodes(i);
    e = std::max(e, std::abs(w.values(i) - std::sin(k * r) / (k * r)));
  }
  return e;
}

}  // namespace

TEST_CASE("grids") {
  const RadialGrid u = RadialGrid::uniform(10.0, 101);
  CHECK(u.size() == 101);
  CHECK(u.nodes(0) == 0.0);
  CHECK(u.r_max() == 10.0);
  CHECK(u.step() == doctest::Approx(0.1));
  CHECK(u.is_uniform());

  const RadialGrid d = RadialGrid::for_lambda(4.0);
  CHECK(d.r_max() == doctest::Approx(100.0));
  CHECK(d.max_spacing() <= 2 * M_PI / 2.0 / 64 + 1e-12);

  const RadialGrid g = RadialGrid::geometric(20.0, 0.1, 1e-4);
  CHECK(g.nodes(0) == 0.0);
  CHECK(g.r_max() == 20.0);
  CHECK(!g.is_uniform());
  for (Eigen::Index i = 1; i < g.size(); ++i) CHECK(g.nodes(i) > g.nodes(i - 1));
  CHECK(g.nodes(1) == doctest::Approx(1e-4));

  CHECK_THROWS_AS(RadialGrid::uniform(-1.0, 10), Error);
  CHECK_THROWS_AS(RadialGrid::uniform(1.0, 1), Error);
  CHECK_THROWS_AS(RadialGrid::for_lambda(0.0), Error);
}

TEST_CASE("free solution sin(kr)/(kr)") {
  for (double lambda : {1.0, 4.0}) {
    const RadialGrid g = RadialGrid::for_lambda(lambda, 200.0);
    const RadialProfile w = integrate_radial(lambda, {}, 1.0, g);
    CHECK(max_err_free(w, lambda) <= 1e-8);
    CHECK(w.derivs(0) == 0.0);
    // w'(r) = (k r cos(kr) - sin(kr)) / (k r^2)
    const double k = std::sqrt(lambda);
    double de = 0.0;
    for (Eigen::Index i = 1; i < g.size(); ++i) {
      const double r = g.nodes(i);
      de = std::max(de, std::abs(w.derivs(i) - (k * r * std::cos(k * r) - std::sin(k * r)) / (k * r * r)));
    }
    CHECK(de <= 1e-8);
  }
}

TEST_CASE("free solution on a geometric grid") {
  const RadialGrid g = RadialGrid::geometric(60.0, 0.05, 1e-3);
  const RadialProfile w = integrate_radial(1.0, {}, 1.0, g);
  CHECK(max_err_free(w, 1.0) <= 1e-8);
}

TEST_CASE("integrator order four") {
  IntegratorOptions opt;
  opt.substeps = 1;
  const double e1 = max_err_free(integrate_radial(1.0, {}, 1.0, RadialGrid::uniform(100.0, 501), opt), 1.0);
  const double e2 = max_err_free(integrate_radial(1.0, {}, 1.0, RadialGrid::uniform(100.0, 1001), opt), 1.0);
  // Observed order; the ratio tends to 16 from below.
  CHECK(std::log2(e1 / e2) >= 3.99);
}

TEST_CASE("Taylor start curvature") {
  // sin(kr)/(kr) = 1 - lambda r^2/6 + ..., so w''(0) = -lambda/3.
  for (double lambda : {1.0, 2.5}) {
    const RadialGrid g = RadialGrid::uniform(10.0, 1001);
    const RadialProfile w = integrate_radial(lambda, {}, 2.0, g);
    REQUIRE(w.has_curvature());
    CHECK(w.curvature(0) == doctest::Approx(-lambda / 3.0 * 2.0).epsilon(1e-12));
  }
}

TEST_CASE("source term with a manufactured solution") {
  // w = exp(-r^2): -w'' - 2w'/r - lambda w = (6 - 4 r^2 - lambda) exp(-r^2).
  const double lambda = 1.3;
  RadialRhs rhs;
  rhs.source = [=](double r) { return (6 - 4 * r * r - lambda) * std::exp(-r * r); };
  const RadialGrid g = RadialGrid::uniform(6.0, 601);
  const RadialProfile w = integrate_radial(lambda, rhs, 1.0, g);
  double e = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i)
    e = std::max(e, std::abs(w.values(i) - std::exp(-g.nodes(i) * g.nodes(i))));
  CHECK(e <= 1e-9);
}

TEST_CASE("constant potential shifts the frequency") {
  const double lambda = 1.0, c = 0.44;
  RadialRhs rhs;
  rhs.potential = [=](double) { return c; };
  const RadialGrid g = RadialGrid::uniform(80.0, 2001);
  CHECK(max_err_free(integrate_radial(lambda, rhs, 1.0, g), lambda + c) <= 1e-8);
}

TEST_CASE("small amplitude cubic solution is linear") {
  const double a = 1e-4;
  const RadialGrid g = RadialGrid::for_lambda(1.0);
  const RadialProfile u = solve_scalar(a, 1.0, g);
  double e = 0.0;
  e = std::abs(u.values(0) - a);
  for (Eigen::Index i = 1; i < g.size(); ++i) {
    const double r = g.nodes(i);
    e = std::max(e, std::abs(u.values(i) - a * std::sin(r) / r));
  }
  CHECK(e / a <= 1e-6);
}

TEST_CASE("coupled pair reduces to two scalar problems") {
  PairRhs rhs;
  rhs.h1 = [](double, double u, double) { return u * u * u; };
  rhs.h2 = [](double, double, double v) { return 0.5 * v; };
  const RadialGrid g = RadialGrid::uniform(50.0, 1001);
  const auto [u, v] = integrate_radial_pair(1.0, 2.0, rhs, 0.8, 1.0, g);
  const RadialProfile us = solve_scalar(0.8, 1.0, g);
  CHECK((u.values - us.values).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(max_err_free(v, 2.5) <= 1e-8);
}

TEST_CASE("solutions decay like 1/r") {
  const RadialGrid g = RadialGrid::for_lambda(1.0);
  const RadialProfile u = solve_scalar(1.0, 1.0, g);
  double m = 0.0;
  for (Eigen::Index i = g.size() / 2; i < g.size(); ++i)
    m = std::max(m, (1 + g.nodes(i)) * std::abs(u.values(i)));
  CHECK(m < 1.0);
  CHECK(std::isfinite(weighted_norm(u, 1).value));
}

TEST_CASE("integrator errors") {
  CHECK_THROWS_AS(integrate_radial(0.0, {}, 1.0, RadialGrid::uniform(10, 101)), Error);
  try {
    integrate_radial(100.0, {}, 1.0, RadialGrid::uniform(10, 11));
    FAIL("expected a resolution error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Resolution);
  }
  // Defocusing cubic: -w'' ~ -w^3 blows up at finite r.
  RadialRhs blow;
  blow.cubic = -1.0;
  bool diverged = false;
  try {
    integrate_radial(1.0, blow, 10.0, RadialGrid::uniform(10, 201));
  } catch (const DivergedError& e) {
    diverged = true;
    CHECK(e.last_radius() >= 0.0);
    CHECK(e.last_radius() < 10.0);
  }
  CHECK(diverged);
}

TEST_CASE("weighted norms") {
  const RadialGrid g = RadialGrid::uniform(50.0, 5001);
  const RadialProfile inv = sample_profile(
      g, [](double r) { return 1 / std::sqrt(1 + r * r); },
      [](double r) { return -r / std::pow(1 + r * r, 1.5); },
      [](double r) { return (2 * r * r - 1) / std::pow(1 + r * r, 2.5); });
  CHECK(weighted_norm(inv, 1).value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(weighted_norm(RadialProfile::zero(g), 3).value == 0.0);

  auto sinc = [](double r) { return r == 0 ? 1.0 : std::sin(r) / r; };
  const RadialProfile s = sample_profile(g, sinc, [](double) { return 0.0; }, [](double) { return 0.0; });
  const WeightedNorm n = weighted_norm(s, 1);
  // Dense sampling oracle.
  double best = 0.0;
  for (int i = 0; i <= 500000; ++i) {
    const double r = 50.0 * i / 500000;
    best = std::max(best, std::sqrt(1 + r * r) * std::abs(sinc(r)));
  }
  CHECK(n.value >= 1.0);
  CHECK(n.value <= std::sqrt(2.0));
  CHECK(n.value <= best);
  CHECK(n.value == doctest::Approx(best).epsilon(1e-5));

  // Adding nodes never decreases the supremum.
  const RadialGrid g2 = RadialGrid::uniform(50.0, 10001);
  const RadialProfile s2 = sample_profile(g2, sinc, [](double) { return 0.0; }, [](double) { return 0.0; });
  CHECK(weighted_norm(s2, 1).value >= n.value);
  CHECK_THROWS_AS(weighted_norm(s, -1), Error);
}

TEST_CASE("resampling") {
  const RadialGrid src = RadialGrid::uniform(50.0, 2000);
  const RadialGrid dst = RadialGrid::uniform(50.0, 4000);
  auto f = [](double r) { return r == 0 ? 1.0 : std::sin(r) / r; };
  auto df = [](double r) { return r == 0 ? 0.0 : (r * std::cos(r) - std::sin(r)) / (r * r); };
  Eigen::VectorXd v(src.size()), d(src.size());
  for (Eigen::Index i = 0; i < src.size(); ++i) {
    v(i) = f(src.nodes(i));
    d(i) = df(src.nodes(i));
  }
  const RadialProfile p(src, v, d);
  const RadialProfile q = resample(p, dst);
  double e = 0.0;
  for (Eigen::Index i = 0; i < dst.size(); ++i) e = std::max(e, std::abs(q.values(i) - f(dst.nodes(i))));
  CHECK(e <= 1e-8);

  const RadialProfile same = resample(p, src);
  CHECK(same.values == p.values);
  CHECK(same.derivs == p.derivs);

  const RadialProfile c(src, Eigen::VectorXd::Constant(src.size(), 2.5), Eigen::VectorXd::Zero(src.size()));
  CHECK((resample(c, dst).values.array() == 2.5).all());

  CHECK_THROWS_AS(resample(p, RadialGrid::uniform(51.0, 100)), Error);
  try {
    resample(p, RadialGrid::uniform(51.0, 100));
  } catch (const Error& e2) {
    CHECK(e2.kind() == ErrorKind::Range);
  }
}

TEST_CASE("interpolant orders") {
  // Quintic Hermite with curvature: error O(h^6); cubic: O(h^4).
  auto f = [](double r) { return std::cos(r); };
  auto df = [](double r) { return -std::sin(r); };
  auto d2f = [](double r) { return -std::cos(r); };
  double prev5 = 0, prev3 = 0;
  for (int n : {41, 81}) {
    const RadialGrid g = RadialGrid::uniform(10.0, n);
    const RadialProfile p5 = sample_profile(g, f, df, d2f);
    const RadialProfile p3(g, p5.values, p5.derivs);
    const ProfileInterpolant i5(p5), i3(p3);
    double e5 = 0, e3 = 0, e5d = 0;
    for (int j = 0; j < 997; ++j) {
      const double r = 10.0 * (j + 0.5) / 997;
      e5 = std::max(e5, std::abs(i5(r) - f(r)));
      e3 = std::max(e3, std::abs(i3(r) - f(r)));
      e5d = std::max(e5d, std::abs(i5.derivative(r) - df(r)));
    }
    CHECK(e5 < e3);
    CHECK(e5d < 1e-4);
    if (prev5 > 0) {
      CHECK(prev5 / e5 >= 40.0);
      CHECK(prev3 / e3 >= 12.0);
    }
    prev5 = e5;
    prev3 = e3;
  }
}

TEST_CASE("smooth bump derivatives") {
  const SmoothBump b{4.0, 2.0, 1.5};
  CHECK(b(4.0) == doctest::Approx(1.5));
  CHECK(b(1.9) == 0.0);
  CHECK(b(6.1) == 0.0);
  const double h = 1e-5;
  for (double r : {2.5, 3.7, 4.9, 5.6}) {
    CHECK(b.eval(r, 1) == doctest::Approx((b(r + h) - b(r - h)) / (2 * h)).epsilon(1e-6));
    CHECK(b.eval(r, 2) ==
          doctest::Approx((b.eval(r + h, 1) - b.eval(r - h, 1)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("profile sample count mismatch") {
  const RadialGrid g = RadialGrid::uniform(1.0, 10);
  CHECK_THROWS_AS(RadialProfile(g, Eigen::VectorXd::Zero(9), Eigen::VectorXd::Zero(10)), Error);
}

TEST_CASE("profile CSV and JSON round trip") {
  const RadialGrid g = RadialGrid::for_lambda(1.0, 20.0);
  const RadialProfile u = solve_scalar(1.0, 1.0, g);
  std::stringstream ss;
  io::write_profile_csv(ss, u);
  const RadialProfile back = io::read_profile_csv(ss);
  CHECK(back.grid == u.grid);
  CHECK(back.values == u.values);
  CHECK(back.derivs == u.derivs);

  const RadialProfile j = io::profile_from_json(io::Json::parse(io::to_json(u).dump()));
  CHECK(j.grid == u.grid);
  CHECK(j.values == u.values);
  CHECK(j.curvature == u.curvature);

  const RadialGrid geo = RadialGrid::geometric(5.0, 0.1, 1e-3);
  const RadialProfile z = RadialProfile::zero(geo);
  const RadialProfile zj = io::profile_from_json(io::to_json(z));
  CHECK(zj.grid == geo);

  std::stringstream bad("x,y\n1,2\n");
  CHECK_THROWS_AS(io::read_profile_csv(bad), Error);
}
