#include "helmbif/bifurcation.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>

namespace helmbif {

namespace {
constexpr double kPi = std::numbers::pi;
}

double phase_of_coupling(double b, double lambda, const RadialProfile& u0,
                         const PrueferOptions& opt) {
  const RadialProfile g = scaled_square(u0, b);
  return asymptotic_phase(pruefer_solve(lambda, g, opt), g).phase_total();
}

BifurcationPoint solve_bk(double omega, int k, double lambda, const RadialProfile& u0,
                          const SolveOptions& opt) {
  if (!(omega >= 0.0 && omega < kPi))
    throw Error(ErrorKind::Domain, "omega must lie in [0, pi)");
  const double target = omega + k * kPi;
  auto q = [&](double b) { return phase_of_coupling(b, lambda, u0, opt.pruefer) - target; };

  // Bracket by doubling from +-1; q is strictly increasing and q(0) = -target.
  double lo, hi, qlo, qhi;
  if (target > 0) {
    lo = 0.0;
    qlo = -target;
    hi = 1.0;
    qhi = q(hi);
    while (qhi < 0) {
      lo = hi;
      qlo = qhi;
      hi *= 2.0;
      if (hi > opt.bracket_limit) {
        std::ostringstream os;
        os << "no b in [0, " << opt.bracket_limit << "] reaches phase " << target;
        throw SurjectivityError(lo, os.str());
      }
      qhi = q(hi);
    }
  } else if (target < 0) {
    hi = 0.0;
    qhi = -target;
    lo = -1.0;
    qlo = q(lo);
    while (qlo > 0) {
      hi = lo;
      qhi = qlo;
      lo *= 2.0;
      if (-lo > opt.bracket_limit) {
        std::ostringstream os;
        os << "no b in [" << -opt.bracket_limit << ", 0] reaches phase " << target;
        throw SurjectivityError(hi, os.str());
      }
      qlo = q(lo);
    }
  } else {
    lo = -1.0;
    hi = 1.0;
    qlo = q(lo);
    qhi = q(hi);
  }

  // Illinois regula falsi inside the bracket.
  double b = 0.5 * (lo + hi), qb = INFINITY;
  int side = 0;
  for (int it = 0; it < opt.max_iterations; ++it) {
    b = (lo * qhi - hi * qlo) / (qhi - qlo);
    if (!(b > lo && b < hi)) b = 0.5 * (lo + hi);
    qb = q(b);
    if (std::abs(qb) <= opt.tolerance || hi - lo <= 1e-15 * std::max(1.0, std::abs(b))) break;
    if ((qb < 0) == (qlo < 0)) {
      lo = b;
      qlo = qb;
      if (side == -1) qhi *= 0.5;
      side = -1;
    } else {
      hi = b;
      qhi = qb;
      if (side == 1) qlo *= 0.5;
      side = 1;
    }
  }
  if (!(std::abs(qb) <= opt.tolerance)) {
    std::ostringstream os;
    os << "phase root solve stalled with residual " << qb;
    throw PrecisionError(std::abs(qb), os.str());
  }

  BifurcationPoint p;
  p.family = Family::Semitrivial;
  p.k = k;
  p.omega = omega;
  p.lambda = lambda;
  p.b = b;
  p.kernel_coupling = b;
  p.phase_residual = std::abs(qb);
  RadialRhs rhs;
  rhs.potential = squared_potential(u0, b);
  p.eigenfunction = integrate_radial(lambda, rhs, 1.0, u0.grid);
  return p;
}

double mobius_diagonal(double bk) {
  if (bk == -1.0) throw Error(ErrorKind::Domain, "Moebius map undefined at -1");
  return (3.0 - bk) / (1.0 + bk);
}

std::optional<BifurcationPoint> diagonal_points(double omega, int k, double mu,
                                                const RadialProfile& u0,
                                                const SolveOptions& opt) {
  BifurcationPoint p = solve_bk(omega, k, mu, u0, opt);
  if (p.b == -1.0) return std::nullopt;
  const double bt = mobius_diagonal(p.b);
  if (!(bt > -1.0)) return std::nullopt;
  p.family = Family::Diagonal;
  p.kernel_coupling = p.b;
  p.b = bt;
  const double s = 1.0 / std::sqrt(1.0 + bt);
  RadialProfile ub = u0;
  ub.values *= s;
  ub.derivs *= s;
  if (ub.has_curvature()) ub.curvature *= s;
  p.base = std::move(ub);
  return p;
}

// ---------------------------------------------------------------------------

SpectralReport nystrom_spectrum(double omega, double lambda, const RadialProfile& u0,
                                Eigen::Index n, const NystromOptions& opt) {
  if (std::sin(omega) < 1e-3)
    throw Error(ErrorKind::SingularParameter, "Nystrom check needs omega in [1e-3, pi - 1e-3]");
  const RadialGrid grid = RadialGrid::uniform(u0.grid.r_max(), n);
  const RadialProfile u = resample(u0, grid);
  const double cot = std::cos(omega) / std::sin(omega);

  ConvolutionOperator op(grid, lambda);
  Eigen::MatrixXd A = op.psi_matrix();
  A.noalias() += cot * op.psi_tilde_left() * op.psi_tilde_right();
  const Eigen::VectorXd u2 = u.values.array().square();
  A = A * u2.asDiagonal();

  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::Precision, "eigen-decomposition failed");
  Eigen::VectorXcd ev = es.eigenvalues();
  std::vector<std::complex<double>> sorted(ev.data(), ev.data() + ev.size());
  std::sort(sorted.begin(), sorted.end(),
            [](auto a, auto b) { return std::abs(a) > std::abs(b); });

  SpectralReport rep;
  rep.omega = omega;
  rep.lambda = lambda;
  rep.size = n;
  rep.k_max = opt.k_max;
  rep.tolerance = opt.tolerance;
  rep.eigenvalues = Eigen::Map<Eigen::VectorXcd>(sorted.data(), n);

  const double h = grid.step();
  const double u2max = u2.maxCoeff();
  auto resolved = [&](double b) {
    return std::sqrt(lambda + std::max(b, 0.0) * u2max) * h <= opt.max_local_kh;
  };
  std::map<int, BifurcationPoint> points;
  auto point = [&](int k) -> const BifurcationPoint& {
    auto it = points.find(k);
    if (it == points.end()) it = points.emplace(k, solve_bk(omega, k, lambda, u, opt.solve)).first;
    return it->second;
  };
  std::vector<int> ks;
  if (opt.k_max >= 0) {
    for (int k = -opt.k_max; k <= opt.k_max; ++k) ks.push_back(k);
  } else {
    // Widest symmetric range whose b_k are all resolved by the grid.
    for (int kk = 0; kk <= opt.k_max_cap; ++kk) {
      bool fine = true;
      for (int k : {-kk, kk}) {
        try {
          if (!resolved(point(k).b)) fine = false;
        } catch (const Error&) {
          fine = false;
        }
      }
      if (!fine) break;
      rep.k_max = kk;
    }
    for (int k = -rep.k_max; k <= rep.k_max; ++k) ks.push_back(k);
  }

  std::vector<std::size_t> used;
  double pos_floor = INFINITY, neg_floor = INFINITY;
  bool ok = true;
  for (int k : ks) {
    NystromMatch m;
    m.k = k;
    BifurcationPoint bp;
    try {
      bp = point(k);
    } catch (const Error&) {
      m.resolved = false;
      ok = false;
      rep.matches.push_back(m);
      continue;
    }
    m.b_k = bp.b;
    m.expected = 1.0 / bp.b;
    m.resolved = resolved(bp.b);

    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t j = 0; j < sorted.size(); ++j) {
      const double d = std::abs(sorted[j] - m.expected);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    m.computed = sorted[best].real();
    m.computed_imag = sorted[best].imag();
    m.relative_mismatch = best_d / std::abs(m.expected);
    double sep = INFINITY;
    for (std::size_t j = 0; j < sorted.size(); ++j)
      if (j != best) sep = std::min(sep, std::abs(sorted[j] - sorted[best]));
    m.separation = sep;

    if (m.resolved) {
      // Inverse iteration for the eigenvector, scaled onto psi_k in least squares.
      const double shift = m.computed * (1.0 + 1e-9);
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(A - shift * Eigen::MatrixXd::Identity(n, n));
      Eigen::VectorXd x = bp.eigenfunction.values;
      for (int it = 0; it < 3; ++it) {
        x = lu.solve(x);
        x /= x.cwiseAbs().maxCoeff();
      }
      const Eigen::VectorXd& psi = bp.eigenfunction.values;
      x *= x.dot(psi) / x.squaredNorm();
      m.eigenvector_distance = (x - psi).cwiseAbs().maxCoeff() / psi.cwiseAbs().maxCoeff();

      used.push_back(best);
      if (m.expected > 0)
        pos_floor = std::min(pos_floor, m.expected);
      else
        neg_floor = std::min(neg_floor, -m.expected);
      ok = ok && m.relative_mismatch <= opt.tolerance &&
           m.separation >= 10.0 * opt.tolerance * std::abs(m.expected) &&
           m.eigenvector_distance <= opt.tolerance;
    } else {
      ok = false;
    }
    rep.matches.push_back(m);
  }

  // Every eigenvalue inside the matched window must be one of the matches.
  const double slack = 1.0 - 10.0 * opt.tolerance;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    if (std::find(used.begin(), used.end(), j) != used.end()) continue;
    const auto z = sorted[j];
    const bool inside = (z.real() >= 0 && std::abs(z) >= slack * pos_floor) ||
                        (z.real() < 0 && std::abs(z) >= slack * neg_floor);
    if (inside) rep.unmatched.push_back(z);
  }
  rep.ok = ok && rep.unmatched.empty();
  return rep;
}

// ---------------------------------------------------------------------------

WronskianReport wronskian_check(const RadialProfile& psi, const RadialProfile& v,
                                const RadialProfile& u0) {
  if (!(psi.grid == v.grid) || !(psi.grid == u0.grid))
    throw Error(ErrorKind::Domain, "Wronskian inputs must share a grid");
  const RadialGrid& g = psi.grid;
  const auto n = g.size();
  if (n < 9) throw Error(ErrorKind::Resolution, "Wronskian check needs at least 9 nodes");
  const Eigen::ArrayXd r = g.nodes.array();
  WronskianReport rep;
  rep.q = (r.square() * (psi.values.array() * v.derivs.array() -
                         v.values.array() * psi.derivs.array()))
              .matrix();
  rep.dq_exact =
      (r.square() * u0.values.array().square() * psi.values.array().square()).matrix();
  rep.dq_numeric = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd& q = rep.q;
  double num = 0, den = 0;
  for (Eigen::Index i = 3; i < n - 3; ++i) {
    double d;
    if (g.is_uniform()) {
      const double h = g.step();
      d = (45 * (q(i + 1) - q(i - 1)) - 9 * (q(i + 2) - q(i - 2)) + (q(i + 3) - q(i - 3))) /
          (60 * h);
    } else {
      const double hl = r(i) - r(i - 1), hr = r(i + 1) - r(i);
      d = (q(i + 1) * hl * hl - q(i - 1) * hr * hr + q(i) * (hr * hr - hl * hl)) /
          (hl * hr * (hl + hr));
    }
    rep.dq_numeric(i) = d;
    num += (d - rep.dq_exact(i)) * (d - rep.dq_exact(i));
    den += rep.dq_exact(i) * rep.dq_exact(i);
  }
  rep.relative_l2 = den > 0 ? std::sqrt(num / den) : std::sqrt(num);
  return rep;
}

RadialProfile generalized_kernel_solution(const BifurcationPoint& p, const RadialProfile& u0,
                                          const IntegratorOptions& opt) {
  auto ui = std::make_shared<ProfileInterpolant>(u0);
  auto pi = std::make_shared<ProfileInterpolant>(p.eigenfunction);
  RadialRhs rhs;
  const double b = p.kernel_coupling;
  rhs.potential = [ui, b](double r) {
    const double u = (*ui)(r);
    return b * u * u;
  };
  rhs.source = [ui, pi](double r) {
    const double u = (*ui)(r);
    return -u * u * (*pi)(r);
  };
  return integrate_radial(p.lambda, rhs, 0.0, u0.grid, opt);
}

}  // namespace helmbif
