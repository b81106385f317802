#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "doctest.h"
#include "helmbif/helmholtz_ops.hpp"

using namespace helmbif;

namespace {

constexpr double kPi = std::numbers::pi;

// Composite Simpson rule with m (even) panels.
double simpson(const std::function<double(double)>& f, double a, double b, int m) {
  if (b <= a) return 0.0;
  const double h = (b - a) / m;
  double s = f(a) + f(b);
  for (int i = 1; i < m; ++i) s += f(a + i * h) * (i % 2 ? 4 : 2);
  return s * h / 3;
}

// Psi * f at x from the split formula, each piece integrated separately so the
// kink of the kernel at r = x never sits inside a panel.
double psi_conv_oracle(const std::function<double(double)>& f, double x, double lambda, double rmax) {
  const double k = std::sqrt(lambda);
  const double inner = simpson([&](double r) { return std::sin(k * r) * r * f(r); }, 0, x, 20000);
  const double outer = simpson([&](double r) { return std::cos(k * r) * r * f(r); }, x, rmax, 20000);
  return (std::cos(k * x) * inner + std::sin(k * x) * outer) / (k * x);
}

double d1(const Eigen::VectorXd& q, Eigen::Index i, double h) {
  return (45 * (q(i + 1) - q(i - 1)) - 9 * (q(i + 2) - q(i - 2)) + (q(i + 3) - q(i - 3))) / (60 * h);
}
double d2(const Eigen::VectorXd& q, Eigen::Index i, double h) {
  return (2 * (q(i - 3) + q(i + 3)) - 27 * (q(i - 2) + q(i + 2)) + 270 * (q(i - 1) + q(i + 1)) -
          490 * q(i)) /
         (180 * h * h);
}

double fd_residual(const RadialProfile& w, const RadialProfile& f, double lambda) {
  const double h = w.grid.step();
  double res = 0.0;
  for (Eigen::Index i = 3; i < w.size() - 3; ++i) {
    const double r = w.grid.nodes(i);
    const double lap = d2(w.values, i, h) + 2.0 / r * d1(w.values, i, h);
    res = std::max(res, std::abs(-lap - lambda * w.values(i) - f.values(i)));
  }
  return res;
}

}  // namespace

TEST_CASE("corrected trapezoid") {
  double prev = 0.0;
  for (int n : {41, 81}) {
    const double h = kPi / (n - 1);
    Eigen::VectorXd s(n);
    for (int i = 0; i < n; ++i) s(i) = std::sin(i * h) * std::exp(0.3 * i * h);
    // int_0^pi sin(x) e^{0.3x} dx = (e^{0.3 pi} + 1) / 1.09
    const double e = std::abs(corrected_trapezoid(s, h) - (std::exp(0.3 * kPi) + 1) / 1.09);
    if (prev > 0) CHECK(prev / e >= 30.0);
    prev = e;
  }
  CHECK(prev <= 1e-9);
}

TEST_CASE("fourier_hat closed form for exp(-r)") {
  const RadialGrid g = RadialGrid::uniform(60.0, 12001);
  const RadialProfile f = sample_profile(
      g, [](double r) { return std::exp(-r); }, [](double r) { return -std::exp(-r); },
      [](double r) { return std::exp(-r); });
  for (double rho : {0.5, 1.0, 2.0}) {
    const double exact = std::sqrt(2 / kPi) * 2 / std::pow(1 + rho * rho, 2);
    CHECK(fourier_hat(f, rho).value == doctest::Approx(exact).epsilon(1e-10));
  }
  CHECK(fourier_hat(RadialProfile::zero(g), 1.0).value == 0.0);
  CHECK_THROWS_AS(fourier_hat(f, -1.0), Error);
  CHECK_THROWS_AS(fourier_hat(f, 1.0, 1e-30), PrecisionError);
}

TEST_CASE("fourier_hat of a mollified indicator") {
  // Smooth plateau on [0, 1] falling off on [1, 1.5].
  auto step = [](double t) { return t <= 0 ? 0.0 : std::exp(-1 / t); };
  auto f = [&](double r) {
    const double t = (1.5 - r) / 0.5;
    return step(t) / (step(t) + step(1 - t));
  };
  const RadialGrid g = RadialGrid::uniform(10.0, 4001);
  Eigen::VectorXd v(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) v(i) = f(g.nodes(i));
  const RadialProfile p(g, v, Eigen::VectorXd::Zero(g.size()));
  const double rho = kPi;
  const double oracle = std::sqrt(2 / kPi) *
                        simpson([&](double r) { return f(r) * std::sin(rho * r) * r / rho; }, 0, 1.5, 400000);
  CHECK(std::abs(fourier_hat(p, rho).value - oracle) <= 1e-8);
}

TEST_CASE("convolution against the split-formula oracle") {
  const double lambda = 1.0;
  const SmoothBump bump{3.0, 2.5, 1.0};
  double prev = 0.0;
  for (int n : {301, 601}) {
    const RadialGrid g = RadialGrid::uniform(15.0, n);
    const RadialProfile w = convolve({lambda, KernelKind::Cos}, bump.sample(g));
    double e = 0.0;
    for (double x : {0.5, 2.0, 3.0, 4.4, 7.0, 12.0}) {
      const auto i = static_cast<Eigen::Index>(std::lround(x / g.step()));
      e = std::max(e, std::abs(w.values(i) - psi_conv_oracle(bump, x, lambda, 15.0)));
    }
    if (prev > 0) CHECK(prev / e >= 40.0);
    prev = e;
  }
  CHECK(prev <= 1e-8);
}

TEST_CASE("PsiTilde convolution is a multiple of PsiTilde") {
  const RadialGrid g = RadialGrid::uniform(40.0, 4001);
  const RadialProfile f = SmoothBump{4.0, 3.0, -1.2}.sample(g);
  const double lambda = 2.0;
  const RadialProfile w = convolve({lambda, KernelKind::Sin}, f);
  const RadialProfile t = psi_tilde_profile(lambda, g);
  const double c = 4 * kPi * std::sqrt(kPi / 2) * fourier_hat(f, std::sqrt(lambda)).value;
  CHECK((w.values - c * t.values).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("convolution solves the Helmholtz equation") {
  const RadialGrid g = RadialGrid::uniform(30.0, 6001);
  for (const SmoothBump& b : {SmoothBump{3.0, 2.0, 1.0}, SmoothBump{0.0, 3.0, 2.0}}) {
    const RadialProfile f = b.sample(g);
    CHECK(fd_residual(convolve({1.0, KernelKind::Cos}, f), f, 1.0) <= 1e-6);
    CHECK(fd_residual(r_lambda_omega(1.0, 1.1, f), f, 1.0) <= 1e-6);
    // The PsiTilde part is homogeneous.
    RadialProfile zero = RadialProfile::zero(g);
    CHECK(fd_residual(convolve({1.0, KernelKind::Sin}, f), zero, 1.0) <= 1e-6);
  }
  CHECK(convolve({1.0, KernelKind::Cos}, RadialProfile::zero(g)).values.cwiseAbs().maxCoeff() == 0.0);
  CHECK(r_lambda_omega(1.0, 1.0, RadialProfile::zero(g)).values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("far field of R^omega") {
  const RadialGrid g = RadialGrid::for_lambda(1.0);
  const RadialProfile f = SmoothBump{3.0, 2.0, 1.0}.sample(g);
  const double fh = fourier_hat(f, 1.0).value;
  for (double omega : {kPi / 2, 0.7, 2.4}) {
    const FarField ff = farfield_fit(r_lambda_omega(1.0, omega, f), 1.0);
    double d = std::fmod(ff.phase_total() - omega, kPi);
    if (d < 0) d += kPi;
    CHECK(std::min(d, kPi - d) <= 1e-4);
    CHECK(ff.amplitude == doctest::Approx(std::sqrt(kPi / 2) * std::abs(fh) / std::sin(omega)).epsilon(1e-6));
  }
  for (double bad : {0.0, 5e-7, kPi - 5e-7}) {
    try {
      r_lambda_omega(1.0, bad, f);
      FAIL("expected a singular-parameter error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::SingularParameter);
    }
  }
}

TEST_CASE("far-field remainder bound") {
  const RadialGrid g = RadialGrid::uniform(60.0, 6001);
  for (double lambda : {1.0, 3.0}) {
    const double k = std::sqrt(lambda);
    for (const SmoothBump& b : {SmoothBump{5.0, 4.0, 1.0}, SmoothBump{2.0, 2.0, -3.0}}) {
      const RadialProfile f = b.sample(g);
      const auto [re, im] = convolve_complex(lambda, f);
      const double amp = std::sqrt(kPi / 2) * fourier_hat(f, k).value;
      const double bound = 2 / k * weighted_norm(f, 3).value;
      for (Eigen::Index i = g.size() / 2; i < g.size(); ++i) {
        const double r = g.nodes(i);
        CHECK(std::abs(r * r * (re.values(i) - amp * std::cos(k * r) / r)) <= bound);
        CHECK(std::abs(r * r * (im.values(i) - amp * std::sin(k * r) / r)) <= bound);
        // Outside the support both forms of Phi * f coincide.
        CHECK(re.values(i) == doctest::Approx(amp * std::cos(k * r) / r).epsilon(1e-8).scale(1e-12));
      }
    }
  }
}

TEST_CASE("linearity") {
  const RadialGrid g = RadialGrid::uniform(30.0, 1501);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  const RadialProfile f1 = SmoothBump{4, 3, u(rng)}.sample(g);
  const RadialProfile f2 = SmoothBump{6, 2, u(rng)}.sample(g);
  const double a = u(rng), b = u(rng);
  RadialProfile mix(g, a * f1.values + b * f2.values, a * f1.derivs + b * f2.derivs,
                    a * f1.curvature + b * f2.curvature);
  const auto w = r_lambda_omega(1.0, 1.3, mix).values;
  const auto w1 = r_lambda_omega(1.0, 1.3, f1).values, w2 = r_lambda_omega(1.0, 1.3, f2).values;
  CHECK((w - (a * w1 + b * w2)).cwiseAbs().maxCoeff() <= 1e-14 * w.cwiseAbs().maxCoeff() + 1e-15);
}

TEST_CASE("dense matrices match the prefix-sum path") {
  const RadialGrid g = RadialGrid::uniform(20.0, 401);
  const ConvolutionOperator op(g, 1.0);
  std::mt19937 rng(3);
  std::normal_distribution<double> n01;
  Eigen::VectorXd f(g.size());
  for (auto& x : f) x = n01(rng);
  const auto r = op.apply(f);
  CHECK((op.psi_matrix() * f - r.psi).cwiseAbs().maxCoeff() <= 1e-12 * r.psi.cwiseAbs().maxCoeff());
  const Eigen::VectorXd t = op.psi_tilde_left() * op.psi_tilde_right().dot(f);
  CHECK((t - r.psit).cwiseAbs().maxCoeff() <= 1e-12 * r.psit.cwiseAbs().maxCoeff());
  CHECK_THROWS_AS(op.apply(Eigen::VectorXd::Zero(10)), Error);
}

TEST_CASE("alpha and beta") {
  const RadialGrid g = RadialGrid::for_lambda(1.0);
  const AlphaBeta t = alpha_beta(psi_tilde_profile(1.0, g), 1.0);
  CHECK(t.alpha == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(t.beta) <= 1e-10);

  const RadialProfile f = SmoothBump{3.0, 2.0, 1.0}.sample(g);
  const AlphaBeta c = alpha_beta(convolve({1.0, KernelKind::Cos}, f), 1.0);
  CHECK(std::abs(c.alpha) <= 1e-8);
  CHECK(c.beta == doctest::Approx(4 * kPi * std::sqrt(kPi / 2) * fourier_hat(f, 1.0).value).epsilon(1e-8));
  const AlphaBeta s = alpha_beta(convolve({1.0, KernelKind::Sin}, f), 1.0);
  CHECK(std::abs(s.beta) <= 1e-8);

  RadialProfile q = sample_profile(
      g, [](double r) { return r == 0 ? 0.0 : std::sin(r + kPi / 4) / r; },
      [](double r) { return r == 0 ? 0.0 : (r * std::cos(r + kPi / 4) - std::sin(r + kPi / 4)) / (r * r); },
      [](double) { return 0.0; });
  const AlphaBeta e = alpha_beta(q, 1.0);
  CHECK(e.alpha == doctest::Approx(4 * kPi / std::sqrt(2.0)).epsilon(1e-9));
  CHECK(e.beta == doctest::Approx(4 * kPi / std::sqrt(2.0)).epsilon(1e-9));

  const RadialProfile slow = sample_profile(
      g, [](double r) { return 1 / (1 + r); }, [](double r) { return -1 / ((1 + r) * (1 + r)); },
      [](double r) { return 2 / std::pow(1 + r, 3); });
  try {
    alpha_beta(slow, 1.0);
    FAIL("expected a not-in-U1 error");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::NotInU1);
  }
}

TEST_CASE("solutions decompose into Psi * f plus a PsiTilde multiple") {
  const double lambda = 1.0;
  const RadialGrid g = RadialGrid::for_lambda(lambda);
  const SmoothBump bump{3.0, 2.0, 1.0};
  RadialRhs rhs;
  rhs.source = [&](double r) { return bump(r); };
  const RadialProfile w = integrate_radial(lambda, rhs, 0.7, g);
  const RadialProfile f = bump.sample(g);
  const double a = alpha_beta(w, lambda).alpha;
  const Eigen::VectorXd rec = convolve({lambda, KernelKind::Cos}, f).values + a * psi_tilde_profile(lambda, g).values;
  CHECK((rec - w.values).cwiseAbs().maxCoeff() <= 1e-5);
}

TEST_CASE("kernels") {
  const FundamentalKernel c{4.0, KernelKind::Cos}, s{4.0, KernelKind::Sin};
  CHECK(c.kappa() == 2.0);
  CHECK(c(1.0) == doctest::Approx(std::cos(2.0) / (4 * kPi)));
  CHECK(s(1.0) == doctest::Approx(std::sin(2.0) / (4 * kPi)));
  const RadialProfile t = psi_tilde_profile(4.0, RadialGrid::uniform(5.0, 51));
  CHECK(t.values(0) == doctest::Approx(2.0 / (4 * kPi)));
  CHECK_THROWS_AS(ConvolutionOperator(RadialGrid::geometric(10.0, 0.1, 1e-3), 1.0), Error);
  CHECK_THROWS_AS(ConvolutionOperator(RadialGrid::uniform(10.0, 101), -1.0), Error);
}
