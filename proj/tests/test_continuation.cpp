#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "helmbif/continuation.hpp"

using namespace helmbif;

namespace {

constexpr double kPi = std::numbers::pi;

const RadialGrid& grid() {
  static const RadialGrid g = RadialGrid::uniform(80.0, 801);
  return g;
}

const RadialProfile& u0() {
  static const RadialProfile u = solve_scalar(1.0, 1.0, grid());
  return u;
}

const FixedPointProblem& semitrivial() {
  static const FixedPointProblem p(u0(), SystemParams{});
  return p;
}

const BifurcationPoint& origin() {
  static const BifurcationPoint b = solve_bk(kPi / 2, 0, 1.0, u0());
  return b;
}

const SystemState& switched() {
  static const SystemState s = branch_switch(origin(), semitrivial());
  return s;
}

Eigen::VectorXd random_vector(Eigen::Index n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Eigen::VectorXd x(n);
  for (auto& e : x) e = d(gen);
  return x;
}

double x1(const Eigen::VectorXd& v) {
  const RadialProfile p(grid(), v, Eigen::VectorXd::Zero(v.size()));
  return weighted_norm(p, 1).value;
}

SystemState trivial_state(double b, Mode mode = Mode::Semitrivial) {
  SystemState s;
  s.mode = mode;
  s.w = RadialProfile::zero(grid());
  s.v = RadialProfile::zero(grid());
  s.b = b;
  return s;
}

}  // namespace

TEST_CASE("trivial families are exact zeros") {
  for (double b : {-5.0, 0.0, 0.7, 12.0})
    CHECK(fixed_point_defect(trivial_state(b), semitrivial()).residual == 0.0);

  SystemParams dp;
  dp.mode = Mode::Diagonal;
  const FixedPointProblem diag(u0(), dp);
  for (double b : {-0.5, 0.0, 2.0, 9.0})
    CHECK(fixed_point_defect(trivial_state(b, Mode::Diagonal), diag).residual == 0.0);
  CHECK_THROWS_AS(fixed_point_defect(trivial_state(-1.0, Mode::Diagonal), diag), Error);
  CHECK_THROWS_AS(fixed_point_defect(trivial_state(-3.0, Mode::Diagonal), diag), Error);
}

TEST_CASE("problem construction errors") {
  CHECK_THROWS_AS(FixedPointProblem(solve_scalar(1.0, 1.0, RadialGrid::geometric(40.0, 0.1, 1e-3)),
                                    SystemParams{}),
                  Error);
  SystemParams p;
  p.omega = 1e-8;
  CHECK_THROWS_AS(FixedPointProblem(u0(), p), Error);
  p = SystemParams{};
  p.nu = -1.0;
  CHECK_THROWS_AS(FixedPointProblem(u0(), p), Error);
}

TEST_CASE("default tau1 sits a quarter period from tau0") {
  const double tau0 = sigma_tau_constants(u0(), 1.0).tau0();
  const double d = std::fmod(semitrivial().tau1() - tau0 + 2 * kPi, kPi);
  CHECK(d == doctest::Approx(kPi / 2).epsilon(1e-12));
}

TEST_CASE("Jacobian matches central differences") {
  const FixedPointProblem& p = semitrivial();
  const auto n = p.n();
  for (Mode mode : {Mode::Semitrivial, Mode::Diagonal}) {
    SystemParams sp;
    sp.mode = mode;
    const FixedPointProblem prob(u0(), sp);
    Eigen::VectorXd x(2 * n + 1);
    x << 0.05 * random_vector(n, 1), 0.05 * random_vector(n, 2), 1.3;
    const Eigen::MatrixXd j = prob.jacobian(x);
    for (unsigned seed : {3u, 4u}) {
      Eigen::VectorXd d = random_vector(2 * n + 1, seed);
      const double e = 1e-5;
      const Eigen::VectorXd fd = (prob.defect(x + e * d) - prob.defect(x - e * d)) / (2 * e);
      const Eigen::VectorXd jd = j * d;
      CHECK((fd - jd).cwiseAbs().maxCoeff() <= 1e-7 * std::max(1.0, jd.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("Jacobian on the trivial branch") {
  const FixedPointProblem& p = semitrivial();
  const auto n = p.n();
  const double b = 2.3;
  const Eigen::VectorXd x = p.pack(trivial_state(b));
  const Eigen::MatrixXd j = p.jacobian(x);
  const Eigen::VectorXd phi = random_vector(n, 7), psi = random_vector(n, 8);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(2 * n + 1);
  y << phi, psi, 0.0;
  const Eigen::VectorXd jy = j * y;

  const Eigen::ArrayXd u2 = u0().values.array().square();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  const RadialProfile f1(grid(), (3 * u2 * phi.array()).matrix(), zero);
  const RadialProfile f2(grid(), (u2 * psi.array()).matrix(), zero);
  const Eigen::VectorXd e1 = phi - r_lambda_omega(1.0, p.tau1(), f1).values;
  const Eigen::VectorXd e2 = psi - b * r_lambda_omega(1.0, kPi / 2, f2).values;
  CHECK((jy.head(n) - e1).cwiseAbs().maxCoeff() <= 1e-12 * e1.cwiseAbs().maxCoeff());
  CHECK((jy.tail(n) - e2).cwiseAbs().maxCoeff() <= 1e-12 * e2.cwiseAbs().maxCoeff());
  // No coupling column on the trivial branch.
  CHECK(j.col(2 * n).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Newton keeps isolated trivial solutions") {
  const SystemState s = newton_correct(trivial_state(1.0), semitrivial());
  CHECK(s.residual == 0.0);
  CHECK(s.v.values.cwiseAbs().maxCoeff() == 0.0);

  SystemState t = trivial_state(1.0);
  t.v.values = 1e-4 * random_vector(grid().size(), 11);
  const SystemState back = newton_correct(t, semitrivial());
  CHECK(back.residual <= 1e-10);
  CHECK(back.v.values.cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(back.w.values.cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("Newton is singular at the bifurcation point") {
  SystemState t = trivial_state(origin().b);
  t.v.values = 1e-3 * resample(origin().eigenfunction, grid()).values;
  NewtonOptions o;
  o.min_rcond = 1e-6;
  CHECK_THROWS_AS(newton_correct(t, semitrivial(), o), Error);
  try {
    newton_correct(t, semitrivial(), o);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NearSingular);
  }
  // The same option accepts a point off the ladder.
  t.b = origin().b + 0.5;
  CHECK_NOTHROW(newton_correct(t, semitrivial(), o));
}

TEST_CASE("branch switch leaves the semitrivial family") {
  const SystemState& s = switched();
  CHECK(s.residual <= 1e-10);
  CHECK(x1(s.v.values) >= 0.5e-3);
  CHECK(std::abs(s.b - origin().b) <= 1e-2);
  // The u-component stays near u0, bounded away from 0.
  const Eigen::VectorXd u = u0().values + s.w.values;
  CHECK(x1(u) >= 0.5 * x1(u0().values));
  CHECK(x1(s.w.values) <= 1e-4);
  const FarField fv = farfield_fit(s.v, 1.0);
  CHECK(std::abs(fv.phase_total() - kPi / 2) <= 1e-3);

  // Random perturbation returns to the same point at fixed b.
  SystemState p = s;
  p.w.values += 1e-6 * random_vector(grid().size(), 21);
  p.v.values += 1e-6 * random_vector(grid().size(), 22);
  const SystemState q = newton_correct(p, semitrivial());
  CHECK((q.v.values - s.v.values).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((q.w.values - s.w.values).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("switched state converges to the origin as epsilon shrinks") {
  double prev = INFINITY;
  for (double eps : {4e-3, 1e-3, 2.5e-4}) {
    SwitchOptions o;
    o.epsilon = eps;
    const SystemState s = branch_switch(origin(), semitrivial(), o);
    const double dist = x1(s.w.values) + x1(s.v.values) + std::abs(s.b - origin().b);
    CHECK(dist <= 4 * eps);
    CHECK(dist < prev);
    prev = dist;
  }
}

TEST_CASE("fixed-point solution solves the radial ODE") {
  const SystemState& s = switched();
  const double b = s.b;
  PairRhs rhs;
  rhs.h1 = [b](double, double u, double v) { return u * u * u + b * u * v * v; };
  rhs.h2 = [b](double, double u, double v) { return v * v * v + b * v * u * u; };
  const RadialGrid fine = RadialGrid::uniform(80.0, 3201);
  const auto [u, v] =
      integrate_radial_pair(1.0, 1.0, rhs, u0().values(0) + s.w.values(0), s.v.values(0), fine);
  const RadialProfile ur = resample(u, grid()), vr = resample(v, grid());
  const Eigen::VectorXd uf = u0().values + s.w.values;
  // The collocation error at h = 0.1 dominates the solver tolerance.
  CHECK((ur.values - uf).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK((vr.values - s.v.values).cwiseAbs().maxCoeff() <= 1e-6 * x1(s.v.values) / 1e-3);
}

TEST_CASE("diagonal symmetry at w2 = 0") {
  SystemParams dp;
  dp.mode = Mode::Diagonal;
  const FixedPointProblem diag(u0(), dp);
  const auto n = diag.n();
  const double b = 0.6;
  SystemState s = trivial_state(b, Mode::Diagonal);
  s.w.values = 0.05 * random_vector(n, 31);
  const Defect d = fixed_point_defect(s, diag);
  CHECK(d.dv.values.cwiseAbs().maxCoeff() == 0.0);

  // Scalar oracle: with P = u_b + w1 the first slot is w1 - R(4 (P^3 - u_b^3)).
  const Eigen::ArrayXd ub = u0().values.array() / std::sqrt(1.0 + b);
  const Eigen::ArrayXd P = ub + s.w.values.array();
  const RadialProfile f(grid(), ((1.0 + b) * (P.cube() - ub.cube()) + (3.0 - b) * 0.0).matrix(),
                        Eigen::VectorXd::Zero(n));
  const Eigen::VectorXd e = s.w.values - r_lambda_omega(1.0, diag.tau1(), f).values;
  CHECK((d.du.values - e).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, e.cwiseAbs().maxCoeff()));
}

TEST_CASE("the trivial branch continues with v = 0") {
  const Branch br = continue_branch(trivial_state(1.0), semitrivial(), 0.3, 0.1);
  CHECK(br.points.size() >= 3);
  for (const auto& p : br.points) {
    CHECK(p.v_norm == 0.0);
    CHECK(std::isnan(p.v_phase));
  }
  CHECK(std::isnan(br.phase_label));
  CHECK(std::abs(br.points.back().b - br.points.front().b) > 0.1);
}

TEST_CASE("continuation along the nontrivial branch") {
  ContinuationOptions o;
  o.step_cap = 0.05;
  const Branch br = continue_branch(switched(), semitrivial(), 0.15, 0.05, o);
  REQUIRE(br.points.size() >= 3);
  CHECK(br.termination == Termination::WindowExhausted);
  CHECK(br.phase_label == doctest::Approx(kPi / 2).epsilon(1e-3));
  for (std::size_t i = 0; i < br.points.size(); ++i) {
    const auto& p = br.points[i];
    CHECK(p.residual <= 1e-10);
    CHECK(p.v_norm > 1e-8);
    CHECK(std::abs(p.v_phase - kPi / 2) <= 1e-3);
    if (i > 0) {
      const SystemState& a = br.states[i - 1];
      const SystemState& c = br.states[i];
      const double dist = x1(a.w.values - c.w.values) + x1(a.v.values - c.v.values) +
                          std::abs(a.b - c.b);
      CHECK(dist <= o.step_cap * (1 + 1e-9));
      CHECK(p.arclength > br.points[i - 1].arclength);
    }
  }
  CHECK(br.points.back().v_norm > br.points.front().v_norm);
  CHECK_THROWS_AS(continue_branch(switched(), semitrivial(), -1.0, 0.1), Error);
}

TEST_CASE("smallest singular value") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);
  a.diagonal() << 3.0, -2.0, 0.5, 7.0;
  CHECK(smallest_singular_value(a) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK_THROWS_AS(smallest_singular_value(Eigen::MatrixXd::Zero(2, 3)), Error);
}
