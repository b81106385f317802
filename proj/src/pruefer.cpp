#include "helmbif/pruefer.hpp"

#include <Eigen/QR>

#include <cmath>
#include <numbers>
#include <sstream>

namespace helmbif {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_pi(double x) {
  double m = std::fmod(x, kPi);
  if (m < 0) m += kPi;
  if (m >= kPi) m -= kPi;
  return m;
}

// Phases within 1e-8 below a multiple of pi (integration accuracy) reduce to it.
void split_phase(double omega, FarField& f) {
  f.phase_mod_pi = wrap_pi(omega);
  if (kPi - f.phase_mod_pi < 1e-8) f.phase_mod_pi = 0.0;
  f.winding = static_cast<int>(std::lround((omega - f.phase_mod_pi) / kPi));
}

struct Window {
  Eigen::Index first = 0;
  Eigen::Index last = 0;  // inclusive
  double start = 0.0;
  double end = 0.0;
};

Window resolve_window(const RadialGrid& grid, FitWindow w) {
  const double rmax = grid.r_max();
  if (w.end <= 0) w.end = rmax;
  if (w.start <= 0) w.start = 0.75 * w.end;
  if (!(w.start < w.end) || w.end > rmax * (1 + 1e-14))
    throw Error(ErrorKind::Domain, "invalid far-field window");
  Window out;
  const auto n = grid.size();
  out.first = 0;
  while (out.first < n && grid.nodes(out.first) < w.start) ++out.first;
  out.last = n - 1;
  while (out.last > 0 && grid.nodes(out.last) > w.end * (1 + 1e-14)) --out.last;
  if (out.last - out.first + 1 < 8)
    throw Error(ErrorKind::Resolution, "far-field window holds fewer than 8 nodes");
  out.start = grid.nodes(out.first);
  out.end = grid.nodes(out.last);
  return out;
}

// Basis on the window nodes, d = end/r - 1:
//   sin, cos, d sin, d cos, d^2 sin, d^2 cos, sin(3kr)/r^2, cos(3kr)/r^2.
constexpr int kBasis = 8;

Eigen::MatrixXd fit_basis(const RadialGrid& grid, double kappa, const Window& w) {
  const auto m = w.last - w.first + 1;
  Eigen::MatrixXd basis(m, kBasis);
  const double e2 = w.end * w.end;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double r = grid.nodes(w.first + i);
    const double s = std::sin(kappa * r), c = std::cos(kappa * r);
    const double d = w.end / r - 1.0;
    const double q = e2 / (r * r);
    basis.row(i) << s, c, d * s, d * c, d * d * s, d * d * c, q * std::sin(3 * kappa * r),
        q * std::cos(3 * kappa * r);
  }
  return basis;
}

// Linear map from fit coefficients to the local polar coefficients (A, B) at
// the window end: r w = A sin(kr) + B cos(kr), (r w)' = k (A cos(kr) - B sin(kr)).
Eigen::Matrix<double, 2, kBasis> end_map(double kappa, double end) {
  const double s = std::sin(kappa * end), c = std::cos(kappa * end);
  const double s3 = std::sin(3 * kappa * end), c3 = std::cos(3 * kappa * end);
  Eigen::Matrix<double, 1, kBasis> y, dy;
  y << s, c, 0, 0, 0, 0, s3, c3;
  // d/dr (end/r - 1) = -1/end and d/dr (end^2/r^2) = -2/end at r = end.
  dy << kappa * c, -kappa * s, -s / end, -c / end, 0, 0, 3 * kappa * c3 - 2 * s3 / end,
      -3 * kappa * s3 - 2 * c3 / end;
  Eigen::Matrix<double, 2, kBasis> m;
  m.row(0) = s * y + c / kappa * dy;
  m.row(1) = c * y - s / kappa * dy;
  return m;
}

}  // namespace

double FarField::phase_total() const { return phase_mod_pi + winding * kPi; }

RadialProfile scaled_square(const RadialProfile& u, double scale) {
  Eigen::VectorXd v = scale * u.values.array().square();
  Eigen::VectorXd d = 2.0 * scale * u.values.array() * u.derivs.array();
  Eigen::VectorXd c;
  if (u.has_curvature())
    c = 2.0 * scale * (u.derivs.array().square() + u.values.array() * u.curvature.array());
  return RadialProfile(u.grid, std::move(v), std::move(d), std::move(c));
}

PhaseTrajectory pruefer_solve(double lambda, const RadialProfile& g, const PrueferOptions& opt) {
  if (!(lambda > 0)) throw Error(ErrorKind::Domain, "lambda must be positive");
  if (opt.substeps < 1) throw Error(ErrorKind::Domain, "substeps must be positive");
  const RadialGrid& grid = g.grid;
  const auto n = grid.size();
  const double kappa = std::sqrt(lambda);
  ProfileInterpolant gi(g);

  PhaseTrajectory t;
  t.grid = grid;
  t.lambda = lambda;
  t.phi.resize(n);
  t.log_rho.resize(n);
  t.omega_partial.resize(n);

  using State = Eigen::Vector3d;  // phi, log rho, omega
  auto rhs = [&](double r, const State& s) {
    const double gv = gi(r);
    const double th = kappa * s(0);
    const double sn = std::sin(th);
    return State(1.0 + gv / lambda * sn * sn, -gv / (2.0 * kappa) * std::sin(2.0 * th),
                 gv / kappa * sn * sn);
  };

  State s(0.0, -std::log(kappa), 0.0);
  t.phi(0) = s(0);
  t.log_rho(0) = s(1);
  t.omega_partial(0) = s(2);
  for (Eigen::Index i = 1; i < n; ++i) {
    const double r0 = grid.nodes(i - 1);
    const double dr = (grid.nodes(i) - r0) / opt.substeps;
    for (int k = 0; k < opt.substeps; ++k) {
      const double r = r0 + k * dr;
      const State k1 = rhs(r, s);
      const State k2 = rhs(r + 0.5 * dr, s + 0.5 * dr * k1);
      const State k3 = rhs(r + 0.5 * dr, s + 0.5 * dr * k2);
      const State k4 = rhs(r + dr, s + dr * k3);
      const State step = dr / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (std::abs(kappa * step(0)) > opt.max_phase_step) {
        std::ostringstream os;
        os << "phase advances " << kappa * step(0) << " rad in one step near r = " << r;
        throw Error(ErrorKind::Resolution, os.str());
      }
      s += step;
      if (!s.allFinite()) throw DivergedError(r, "phase integration produced non-finite values");
    }
    t.phi(i) = s(0);
    t.log_rho(i) = s(1);
    t.omega_partial(i) = s(2);
  }
  return t;
}

FarField asymptotic_phase(const PhaseTrajectory& traj, const RadialProfile& g,
                          std::optional<double> tolerance) {
  if (!(traj.grid == g.grid))
    throw Error(ErrorKind::Domain, "trajectory and potential live on different grids");
  const double kappa = std::sqrt(traj.lambda);
  const double bound = weighted_norm(g, 2).value / (kappa * traj.grid.r_max());
  if (tolerance && bound > *tolerance) {
    std::ostringstream os;
    os << "phase tail bound " << bound << " exceeds tolerance " << *tolerance;
    throw PrecisionError(bound, os.str());
  }
  const auto last = traj.grid.size() - 1;
  const double omega = traj.omega_partial(last);
  FarField f;
  f.amplitude = std::exp(traj.log_rho(last));
  split_phase(omega, f);
  f.tail_residual_bound = bound;
  return f;
}

Eigen::Matrix<double, 2, Eigen::Dynamic> farfield_functionals(const RadialGrid& grid,
                                                              double lambda, FitWindow window) {
  if (!(lambda > 0)) throw Error(ErrorKind::Domain, "lambda must be positive");
  const Window w = resolve_window(grid, window);
  const Eigen::MatrixXd basis = fit_basis(grid, std::sqrt(lambda), w);
  const auto m = basis.rows();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
  const Eigen::MatrixXd pinv = qr.solve(Eigen::MatrixXd::Identity(m, m));
  const Eigen::MatrixXd coef_rows = end_map(std::sqrt(lambda), w.end) * pinv;
  Eigen::Matrix<double, 2, Eigen::Dynamic> rows = Eigen::MatrixXd::Zero(2, grid.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    const double r = grid.nodes(w.first + i);
    rows(0, w.first + i) = coef_rows(0, i) * r;
    rows(1, w.first + i) = coef_rows(1, i) * r;
  }
  return rows;
}

FarFieldCoefficients farfield_coefficients(const RadialProfile& p, double lambda,
                                           FitWindow window) {
  if (!(lambda > 0)) throw Error(ErrorKind::Domain, "lambda must be positive");
  const Window w = resolve_window(p.grid, window);
  const Eigen::MatrixXd basis = fit_basis(p.grid, std::sqrt(lambda), w);
  const auto m = basis.rows();
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i)
    y(i) = p.grid.nodes(w.first + i) * p.values(w.first + i);
  const Eigen::VectorXd coef = basis.householderQr().solve(y);
  const Eigen::Vector2d ab = end_map(std::sqrt(lambda), w.end) * coef;
  FarFieldCoefficients out;
  out.a = ab(0);
  out.b = ab(1);
  out.residual = (y - basis * coef).cwiseAbs().maxCoeff();
  out.start = w.start;
  out.end = w.end;
  return out;
}

FarField farfield_fit(const RadialProfile& p, double lambda, FitWindow window,
                      const FitOptions& opt) {
  if (p.values.cwiseAbs().maxCoeff() <= opt.triviality_threshold)
    throw Error(ErrorKind::InconsistentProfile, "profile is trivial; no phase defined");
  const FarFieldCoefficients c = farfield_coefficients(p, lambda, window);
  const double kappa = std::sqrt(lambda);

  // Sign convention: positive near the origin.
  double sgn = 0.0;
  for (Eigen::Index i = 0; i < p.size() && sgn == 0.0; ++i)
    if (p.values(i) != 0.0) sgn = p.values(i) > 0 ? 1.0 : -1.0;
  const double a = sgn * c.a, b = sgn * c.b;
  const double amp = std::hypot(a, b);
  if (!(amp > 0)) throw Error(ErrorKind::InconsistentProfile, "vanishing far-field amplitude");
  const double limit = 10.0 * opt.remainder_coefficient * amp / (c.start * c.start);
  if (c.residual > limit) {
    std::ostringstream os;
    os << "far-field residual " << c.residual << " exceeds " << limit
       << "; profile does not decay like sin(kr + p)/r";
    throw Error(ErrorKind::InconsistentProfile, os.str());
  }

  // Local polar angle at the window end: r w = amp sin(theta), theta unwound
  // by the number of sign changes on (0, end].
  const double p_loc = std::atan2(b, a);
  int zeros = 0;
  double prev = 0.0;
  for (Eigen::Index i = 1; i < p.size() && p.grid.nodes(i) <= c.end; ++i) {
    const double v = sgn * p.values(i);
    if (v == 0.0) continue;
    if (prev != 0.0 && (v > 0) != (prev > 0)) ++zeros;
    prev = v;
  }
  const double theta_loc = kappa * c.end + p_loc;
  const double fr = wrap_pi(theta_loc);
  double m2 = std::fmod(theta_loc, 2 * kPi);
  if (m2 < 0) m2 += 2 * kPi;
  const int parity = (m2 < kPi) ? 0 : 1;
  int best = zeros;
  double best_dist = INFINITY;
  for (int m = zeros - 1; m <= zeros + 1; ++m) {
    if (m < 0 || ((m % 2) + 2) % 2 != parity) continue;
    const double d = std::abs((m * kPi + fr) - (zeros + 0.5) * kPi);
    if (d < best_dist) {
      best_dist = d;
      best = m;
    }
  }
  const double theta = best * kPi + fr;
  const double omega = theta - kappa * c.end;

  FarField f;
  f.amplitude = amp;
  split_phase(omega, f);
  f.tail_residual_bound = c.residual / amp;
  return f;
}

ScalarConstants sigma_tau_constants(const RadialProfile& u0, double mu,
                                    const PrueferOptions& opt) {
  if (u0.values.cwiseAbs().maxCoeff() == 0.0 || u0.values(0) == 0.0)
    throw Error(ErrorKind::InconsistentProfile, "u0 is trivial; constants undefined");
  const RadialProfile g1 = scaled_square(u0, 1.0);
  const RadialProfile g3 = scaled_square(u0, 3.0);
  ScalarConstants out;
  out.sigma = asymptotic_phase(pruefer_solve(mu, g1, opt), g1);
  out.tau = asymptotic_phase(pruefer_solve(mu, g3, opt), g3);
  // u0 = u0(0) * rho sin(kr + sigma0 + winding pi) / r.
  out.c0 = u0.values(0) * out.sigma.amplitude * ((out.sigma.winding % 2 == 0) ? 1.0 : -1.0);
  out.sigma.amplitude = std::abs(out.c0);
  return out;
}

}  // namespace helmbif
