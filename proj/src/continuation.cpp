#include "helmbif/continuation.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace helmbif {

namespace {

constexpr double kPi = std::numbers::pi;

double reduce_phase(double p) {
  double m = std::fmod(p, kPi);
  if (m < 0) m += kPi;
  if (m >= kPi) m -= kPi;
  return m;
}

double sup(const Eigen::VectorXd& x) { return x.size() ? x.cwiseAbs().maxCoeff() : 0.0; }

double x1_norm(const RadialGrid& g, const Eigen::VectorXd& x) {
  return ((1.0 + g.nodes.array().square()).sqrt() * x.array().abs()).maxCoeff();
}

}  // namespace

const char* to_string(Mode m) { return m == Mode::Semitrivial ? "semitrivial" : "diagonal"; }

const char* to_string(Termination t) {
  switch (t) {
    case Termination::WindowExhausted: return "window-exhausted";
    case Termination::StepLimit: return "step-limit";
    case Termination::NewtonFailed: return "newton-failed";
    case Termination::ReturnedToSemitrivial: return "returned-to-semitrivial";
    case Termination::ReturnedToDiagonal: return "returned-to-diagonal";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

FixedPointProblem::FixedPointProblem(RadialProfile u0, SystemParams params)
    : u0_(std::move(u0)), params_(params) {
  if (!u0_.grid.is_uniform()) throw Error(ErrorKind::Domain, "continuation needs a uniform grid");
  if (!(params_.mu > 0) || !(params_.nu > 0))
    throw Error(ErrorKind::Domain, "mu and nu must be positive");
  if (std::abs(params_.sigma) != 1 || std::abs(params_.sigma_first) != 1)
    throw Error(ErrorKind::Domain, "sign choices must be +1 or -1");
  double tau1;
  if (params_.tau1) {
    tau1 = reduce_phase(*params_.tau1);
  } else {
    tau1 = reduce_phase(sigma_tau_constants(u0_, params_.mu).tau0() + 0.5 * kPi);
  }
  params_.tau1 = tau1;
  const double lam2 = params_.mode == Mode::Diagonal ? params_.mu : params_.nu;
  comp_[0] = make_component(params_.mu, tau1, params_.sigma_first, nullptr);
  comp_[1] = make_component(lam2, params_.omega, params_.sigma,
                            lam2 == params_.mu ? comp_[0].op : nullptr);
  const RadialGrid& g = u0_.grid;
  const auto n = g.size();
  const Eigen::VectorXd m =
      (g.step() / g.r_max()) * (1.0 + g.nodes.array().square()).matrix();
  weights_.resize(2 * n + 1);
  weights_ << m, m, 1.0;
}

FixedPointProblem::Component FixedPointProblem::make_component(
    double lambda, double phase, int sigma,
    std::shared_ptr<const ConvolutionOperator> shared) const {
  Component c;
  c.lambda = lambda;
  c.phase = reduce_phase(phase);
  c.sigma = sigma;
  c.op = shared ? std::move(shared) : std::make_shared<const ConvolutionOperator>(u0_.grid, lambda);
  if (c.phase == 0.0) {
    const RadialProfile t = psi_tilde_profile(lambda, u0_.grid);
    c.t = t.values;
    c.dt = t.derivs;
    const auto rows = farfield_functionals(u0_.grid, lambda);
    c.ell = 4 * kPi * (rows.row(0) + sigma * rows.row(1));
  } else {
    if (std::sin(c.phase) < 1e-6) {
      std::ostringstream os;
      os << "phase " << phase << " is within 1e-6 of a multiple of pi";
      throw Error(ErrorKind::SingularParameter, os.str());
    }
    c.cot = std::cos(c.phase) / std::sin(c.phase);
  }
  return c;
}

FixedPointProblem::Nonlinearity FixedPointProblem::nonlinearity(const Eigen::VectorXd& w,
                                                                const Eigen::VectorXd& v,
                                                                double b,
                                                                bool derivatives) const {
  Nonlinearity nl;
  const Eigen::ArrayXd W = w.array(), V = v.array();
  if (params_.mode == Mode::Semitrivial) {
    const Eigen::ArrayXd u0 = u0_.values.array();
    const Eigen::ArrayXd U = u0 + W;
    nl.n1 = (W.cube() + 3 * u0 * W.square() + 3 * u0.square() * W + b * U * V.square()).matrix();
    nl.n2 = (V.cube() + b * V * U.square()).matrix();
    if (derivatives) {
      nl.d11 = (3 * U.square() + b * V.square()).matrix();
      nl.d12 = (2 * b * U * V).matrix();
      nl.d21 = (2 * b * V * U).matrix();
      nl.d22 = (3 * V.square() + b * U.square()).matrix();
      nl.db1 = (U * V.square()).matrix();
      nl.db2 = (V * U.square()).matrix();
    }
    return nl;
  }
  if (!(b > -1.0)) throw Error(ErrorKind::Domain, "diagonal family needs b > -1");
  const double s = 1.0 / std::sqrt(1.0 + b);
  const Eigen::ArrayXd ub = s * u0_.values.array();
  const Eigen::ArrayXd P = ub + W;
  const double c1 = 1.0 + b, c2 = 3.0 - b;
  // P^3 - u_b^3 in factored form, exactly zero at W = 0.
  const Eigen::ArrayXd dcube = W * (P.square() + P * ub + ub.square());
  nl.n1 = (c1 * dcube + c2 * P * V.square()).matrix();
  nl.n2 = (c1 * V.cube() + c2 * P.square() * V).matrix();
  if (derivatives) {
    nl.d11 = (3 * c1 * P.square() + c2 * V.square()).matrix();
    nl.d12 = (2 * c2 * P * V).matrix();
    nl.d21 = (2 * c2 * P * V).matrix();
    nl.d22 = (3 * c1 * V.square() + c2 * P.square()).matrix();
    const Eigen::ArrayXd dub = -ub / (2.0 * c1);
    nl.db1 = (dcube + 3 * c1 * (P.square() - ub.square()) * dub -
              P * V.square() + c2 * V.square() * dub)
                 .matrix();
    nl.db2 = (V.cube() - P.square() * V + 2 * c2 * P * dub * V).matrix();
  }
  return nl;
}

Eigen::VectorXd FixedPointProblem::apply_component(const Component& c, const Eigen::VectorXd& x,
                                                   const Eigen::VectorXd& nl,
                                                   Eigen::VectorXd* deriv) const {
  ConvolutionOperator::Result r = c.op->apply(nl);
  if (c.phase == 0.0) {
    const double a = c.ell.dot(x);
    if (deriv) *deriv = r.dpsi + a * c.dt;
    return r.psi + a * c.t;
  }
  if (deriv) *deriv = r.dpsi + c.cot * r.dpsit;
  return r.psi + c.cot * r.psit;
}

const Eigen::MatrixXd& FixedPointProblem::dense(int i) const {
  std::call_once(dense_once_[i], [&] {
    const Component& c = comp_[i];
    Eigen::MatrixXd k = c.op->psi_matrix();
    if (c.phase != 0.0) k.noalias() += c.cot * c.op->psi_tilde_left() * c.op->psi_tilde_right();
    dense_[i] = std::move(k);
  });
  return dense_[i];
}

Eigen::VectorXd FixedPointProblem::pack(const SystemState& s) const {
  const auto n = this->n();
  if (s.w.size() != n || s.v.size() != n)
    throw Error(ErrorKind::Domain, "state does not match the problem grid");
  Eigen::VectorXd x(2 * n + 1);
  x << s.w.values, s.v.values, s.b;
  return x;
}

SystemState FixedPointProblem::unpack(const Eigen::VectorXd& x) const {
  const auto n = this->n();
  const Eigen::VectorXd w = x.head(n), v = x.segment(n, n);
  const double b = x(2 * n);
  const Nonlinearity nl = nonlinearity(w, v, b, false);
  Eigen::VectorXd dw, dv;
  const Eigen::VectorXd tw = apply_component(comp_[0], w, nl.n1, &dw);
  const Eigen::VectorXd tv = apply_component(comp_[1], v, nl.n2, &dv);
  const RadialGrid& g = grid();
  auto curvature = [&](const Eigen::VectorXd& y, const Eigen::VectorXd& dy,
                       const Eigen::VectorXd& f, double lambda) {
    Eigen::VectorXd c(n);
    c(0) = -(lambda * y(0) + f(0)) / 3.0;
    for (Eigen::Index i = 1; i < n; ++i)
      c(i) = -2.0 / g.nodes(i) * dy(i) - lambda * y(i) - f(i);
    return c;
  };
  SystemState s;
  s.mode = params_.mode;
  s.b = b;
  s.w = RadialProfile(g, w, dw, curvature(w, dw, nl.n1, comp_[0].lambda));
  s.v = RadialProfile(g, v, dv, curvature(v, dv, nl.n2, comp_[1].lambda));
  s.residual = std::max(sup(w - tw), sup(v - tv));
  return s;
}

Eigen::VectorXd FixedPointProblem::defect(const Eigen::VectorXd& x) const {
  const auto n = this->n();
  if (x.size() != 2 * n + 1) throw Error(ErrorKind::Domain, "unknown vector has wrong size");
  const Eigen::VectorXd w = x.head(n), v = x.segment(n, n);
  const Nonlinearity nl = nonlinearity(w, v, x(2 * n), false);
  Eigen::VectorXd f(2 * n);
  f.head(n) = w - apply_component(comp_[0], w, nl.n1, nullptr);
  f.tail(n) = v - apply_component(comp_[1], v, nl.n2, nullptr);
  return f;
}

Eigen::MatrixXd FixedPointProblem::jacobian(const Eigen::VectorXd& x) const {
  const auto n = this->n();
  if (x.size() != 2 * n + 1) throw Error(ErrorKind::Domain, "unknown vector has wrong size");
  const Eigen::VectorXd w = x.head(n), v = x.segment(n, n);
  const Nonlinearity nl = nonlinearity(w, v, x(2 * n), true);
  const Eigen::MatrixXd& k1 = dense(0);
  const Eigen::MatrixXd& k2 = dense(1);
  Eigen::MatrixXd j(2 * n, 2 * n + 1);
  j.block(0, 0, n, n).noalias() = -k1 * nl.d11.asDiagonal();
  j.block(0, n, n, n).noalias() = -k1 * nl.d12.asDiagonal();
  j.block(n, 0, n, n).noalias() = -k2 * nl.d21.asDiagonal();
  j.block(n, n, n, n).noalias() = -k2 * nl.d22.asDiagonal();
  j.block(0, 0, n, n).diagonal().array() += 1.0;
  j.block(n, n, n, n).diagonal().array() += 1.0;
  if (comp_[0].phase == 0.0) j.block(0, 0, n, n).noalias() -= comp_[0].t * comp_[0].ell;
  if (comp_[1].phase == 0.0) j.block(n, n, n, n).noalias() -= comp_[1].t * comp_[1].ell;
  j.col(2 * n).head(n).noalias() = -k1 * nl.db1;
  j.col(2 * n).tail(n).noalias() = -k2 * nl.db2;
  return j;
}

double FixedPointProblem::dot(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  return (weights_.array() * x.array() * y.array()).sum();
}

Defect fixed_point_defect(const SystemState& s, const FixedPointProblem& problem) {
  const Eigen::VectorXd f = problem.defect(problem.pack(s));
  const auto n = problem.n();
  Defect d;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  d.du = RadialProfile(problem.grid(), f.head(n), zero);
  d.dv = RadialProfile(problem.grid(), f.tail(n), zero);
  d.residual = sup(f);
  return d;
}

// ---------------------------------------------------------------------------

namespace {

void check_conditioning(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu, double min_rcond,
                        const char* what) {
  const double rc = lu.rcond();
  if (!(rc >= min_rcond)) {
    std::ostringstream os;
    os << what << ": reciprocal condition estimate " << rc << " below " << min_rcond;
    throw Error(ErrorKind::NearSingular, os.str());
  }
}

}  // namespace

SystemState newton_correct(const SystemState& s, const FixedPointProblem& problem,
                           const NewtonOptions& opt) {
  const auto n = problem.n();
  Eigen::VectorXd x = problem.pack(s);
  Eigen::VectorXd f = problem.defect(x);
  for (int it = 0; it < opt.max_iterations && sup(f) > opt.tolerance; ++it) {
    const Eigen::MatrixXd j = problem.jacobian(x).leftCols(2 * n);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(j);
    check_conditioning(lu, opt.min_rcond, "Newton linearization");
    x.head(2 * n) -= lu.solve(f);
    f = problem.defect(x);
    if (!f.allFinite()) throw Error(ErrorKind::NotConverged, "Newton iterate is not finite");
  }
  if (!(sup(f) <= opt.tolerance)) {
    std::ostringstream os;
    os << "Newton did not reach " << opt.tolerance << "; residual " << sup(f);
    throw Error(ErrorKind::NotConverged, os.str());
  }
  return problem.unpack(x);
}

namespace {

// Newton on [F(x); row . x - rhs] with the bordering row fixed.
struct BorderedResult {
  Eigen::VectorXd x;
  double residual = 0.0;
  int iterations = 0;
  int factorizations = 0;
  bool converged = false;
};

BorderedResult bordered_newton(const FixedPointProblem& problem, Eigen::VectorXd x,
                               const Eigen::RowVectorXd& row, double rhs,
                               const NewtonOptions& opt) {
  const auto n = problem.n();
  BorderedResult out;
  auto residual = [&](const Eigen::VectorXd& y, Eigen::VectorXd& g) {
    g.resize(2 * n + 1);
    g.head(2 * n) = problem.defect(y);
    g(2 * n) = row.dot(y) - rhs;
  };
  auto factor = [&](const Eigen::VectorXd& y) {
    Eigen::MatrixXd j(2 * n + 1, 2 * n + 1);
    j.topRows(2 * n) = problem.jacobian(y);
    j.row(2 * n) = row;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(j);
    check_conditioning(lu, opt.min_rcond, "bordered linearization");
    return lu;
  };
  Eigen::VectorXd g;
  residual(x, g);
  double res = std::max(sup(g.head(2 * n)), std::abs(g(2 * n)));
  // Chord iterations on one factorization; refactor when contraction is slow.
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  bool fresh = false;
  int it = 0, factorizations = 0;
  while (it < opt.max_iterations && res > opt.tolerance) {
    if (factorizations == 0) {
      lu = factor(x);
      ++factorizations;
      fresh = true;
    }
    const Eigen::VectorXd trial = x - lu.solve(g);
    Eigen::VectorXd gt;
    residual(trial, gt);
    const double rt = std::max(sup(gt.head(2 * n)), std::abs(gt(2 * n)));
    ++it;
    if (!gt.allFinite() || rt > 0.25 * res) {
      if (fresh && (!gt.allFinite() || rt >= res)) break;
      if (rt < res && gt.allFinite()) {
        x = trial;
        g = gt;
        res = rt;
      }
      if (factorizations >= 4) break;
      lu = factor(x);
      ++factorizations;
      fresh = true;
      continue;
    }
    x = trial;
    g = gt;
    res = rt;
    fresh = false;
  }
  out.x = std::move(x);
  out.residual = sup(g.head(2 * n));
  out.iterations = it;
  out.factorizations = factorizations;
  out.converged = res <= opt.tolerance;
  return out;
}

}  // namespace

SystemState branch_switch(const BifurcationPoint& origin, const FixedPointProblem& problem,
                          const SwitchOptions& opt) {
  const auto n = problem.n();
  const RadialGrid& g = problem.grid();
  const RadialProfile psi = resample(origin.eigenfunction, g);
  const Eigen::VectorXd phat = psi.values / x1_norm(g, psi.values);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(2 * n + 1);
  x.segment(n, n) = opt.epsilon * phat;
  x(2 * n) = origin.b;
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(2 * n + 1);
  row.segment(n, n) = (problem.weights().segment(n, n).array() * phat.array()).matrix().transpose();
  const double rhs = opt.epsilon * row.segment(n, n).dot(phat);

  BorderedResult r = bordered_newton(problem, x, row, rhs, opt.newton);
  if (!r.converged) {
    std::ostringstream os;
    os << "branch switch did not converge; residual " << r.residual;
    throw Error(ErrorKind::NotConverged, os.str());
  }
  SystemState s = problem.unpack(r.x);
  if (x1_norm(g, s.v.values) < opt.triviality_threshold)
    throw Error(ErrorKind::StepTooSmall, "branch switch fell back onto the trivial family");
  return s;
}

// ---------------------------------------------------------------------------

namespace {

BranchPoint summarize(const SystemState& s, const FixedPointProblem& problem, double arclength,
                      double threshold) {
  const RadialGrid& g = problem.grid();
  BranchPoint p;
  p.arclength = arclength;
  p.b = s.b;
  p.w_norm = x1_norm(g, s.w.values);
  p.v_norm = x1_norm(g, s.v.values);
  p.residual = s.residual;
  p.v_phase = std::numeric_limits<double>::quiet_NaN();
  if (p.v_norm > threshold) {
    const double lam =
        problem.params().mode == Mode::Diagonal ? problem.params().mu : problem.params().nu;
    try {
      p.v_phase = farfield_fit(s.v, lam).phase_total();
    } catch (const Error&) {
    }
  }
  return p;
}

double product_distance(const FixedPointProblem& problem, const Eigen::VectorXd& a,
                        const Eigen::VectorXd& b) {
  const auto n = problem.n();
  const RadialGrid& g = problem.grid();
  return x1_norm(g, a.head(n) - b.head(n)) + x1_norm(g, a.segment(n, n) - b.segment(n, n)) +
         std::abs(a(2 * n) - b(2 * n));
}

}  // namespace

Branch continue_branch(const SystemState& start, const FixedPointProblem& problem, double window,
                       double step, const ContinuationOptions& opt) {
  const auto n = problem.n();
  if (!(window > 0) || !(step > 0)) throw Error(ErrorKind::Domain, "window and step must be positive");

  Branch br;
  Eigen::VectorXd x = problem.pack(start);
  SystemState cur = problem.unpack(x);
  br.points.push_back(summarize(cur, problem, 0.0, opt.triviality_threshold));
  br.states.push_back(cur);
  const bool nontrivial_start = br.points.back().v_norm > opt.triviality_threshold;
  br.phase_label = nontrivial_start ? br.points.back().v_phase
                                    : std::numeric_limits<double>::quiet_NaN();

  // Initial tangent: null direction of [D F, d_b F] oriented along v (or b).
  Eigen::RowVectorXd ref = Eigen::RowVectorXd::Zero(2 * n + 1);
  if (nontrivial_start)
    ref.segment(n, n) =
        (problem.weights().segment(n, n).array() * x.segment(n, n).array()).matrix().transpose();
  else
    ref(2 * n) = 1.0;
  Eigen::VectorXd tangent;
  {
    Eigen::MatrixXd j(2 * n + 1, 2 * n + 1);
    j.topRows(2 * n) = problem.jacobian(x);
    j.row(2 * n) = ref;
    Eigen::VectorXd e = Eigen::VectorXd::Zero(2 * n + 1);
    e(2 * n) = 1.0;
    tangent = j.partialPivLu().solve(e);
    tangent /= std::sqrt(problem.dot(tangent, tangent));
  }

  double s = 0.0;
  double ds = std::min(step, opt.max_step);
  bool was_nontrivial = nontrivial_start;
  double cap_ratio = 0.0;  // product distance per unit arclength, last accepted step
  int steps = 0;
  while (true) {
    if (s >= window * (1 - 1e-12)) {
      br.termination = Termination::WindowExhausted;
      break;
    }
    if (steps >= opt.max_steps) {
      br.termination = Termination::StepLimit;
      break;
    }
    const double h = std::min(ds, window - s);
    const Eigen::VectorXd pred = x + h * tangent;
    Eigen::RowVectorXd row = (problem.weights().array() * tangent.array()).matrix().transpose();
    const double rhs = row.dot(pred);
    BorderedResult r;
    bool ok = false;
    double dist = INFINITY;
    try {
      r = bordered_newton(problem, pred, row, rhs, opt.newton);
      if (r.converged) dist = product_distance(problem, r.x, x);
      ok = r.converged && dist <= opt.step_cap;
    } catch (const Error&) {
      ok = false;
    }
    if (!ok) {
      // A converged step that overshoots the cap is rescaled; otherwise halve.
      ds = std::isfinite(dist) ? std::min(0.5 * ds, 0.9 * h * opt.step_cap / dist) : 0.5 * ds;
      if (ds < opt.min_step) {
        br.termination = Termination::NewtonFailed;
        br.message = "step size fell below the minimum";
        break;
      }
      continue;
    }
    cap_ratio = dist / h;
    const Eigen::VectorXd dx = r.x - x;
    const double len = std::sqrt(problem.dot(dx, dx));
    tangent = dx / len;
    x = r.x;
    s += h;
    ++steps;
    cur = problem.unpack(x);
    BranchPoint p = summarize(cur, problem, s, opt.triviality_threshold);
    p.newton_iterations = r.iterations;
    br.points.push_back(p);
    br.states.push_back(cur);
    if (r.factorizations <= 1 && r.iterations <= 6) ds = std::min(1.5 * ds, opt.max_step);
    ds = std::min(ds, 0.9 * opt.step_cap / cap_ratio);
    if (p.v_norm > opt.triviality_threshold) {
      was_nontrivial = true;
    } else if (was_nontrivial) {
      br.termination = problem.params().mode == Mode::Diagonal ? Termination::ReturnedToDiagonal
                                                               : Termination::ReturnedToSemitrivial;
      break;
    }
  }
  return br;
}

double smallest_singular_value(const Eigen::MatrixXd& a, int iterations) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::Domain, "square matrix required");
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(a.rows(), 1.0, 2.0);
  x.normalize();
  double est = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd z = lu.solve(x);
    const Eigen::VectorXd y = lu.transpose().solve(z);
    const double e = 1.0 / z.norm();
    x = y / y.norm();
    if (it > 2 && std::abs(e - est) <= 1e-12 * e) {
      est = e;
      break;
    }
    est = e;
  }
  return est;
}

}  // namespace helmbif
