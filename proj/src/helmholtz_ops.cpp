#include "helmbif/helmholtz_ops.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace helmbif {

namespace {

constexpr double kPi = std::numbers::pi;

// One-sided five-point first derivative at the last node.
constexpr double kEndD1[5] = {25.0, -48.0, 36.0, -16.0, 3.0};  // / (12 h)
// One-sided five-point third derivative at the last node.
constexpr double kEndD3[5] = {5.0, -18.0, 24.0, -14.0, 3.0};  // / (2 h^3)

void require_uniform(const RadialGrid& g) {
  if (!g.is_uniform()) throw Error(ErrorKind::Domain, "quadrature requires a uniform grid");
  if (g.size() < 8) throw Error(ErrorKind::Resolution, "quadrature needs at least 8 nodes");
}

}  // namespace

double FundamentalKernel::kappa() const { return std::sqrt(lambda); }

double FundamentalKernel::operator()(double r) const {
  const double k = kappa();
  if (kind == KernelKind::Sin) return r == 0.0 ? k / (4 * kPi) : std::sin(k * r) / (4 * kPi * r);
  return std::cos(k * r) / (4 * kPi * r);
}

RadialProfile psi_tilde_profile(double lambda, const RadialGrid& grid) {
  const double k = std::sqrt(lambda);
  const double c = 1.0 / (4 * kPi);
  return sample_profile(
      grid, [=](double r) { return r == 0 ? c * k : c * std::sin(k * r) / r; },
      [=](double r) {
        return r == 0 ? 0.0 : c * (k * std::cos(k * r) / r - std::sin(k * r) / (r * r));
      },
      [=](double r) {
        if (r == 0) return -c * k * k * k / 3.0;
        const double s = std::sin(k * r), co = std::cos(k * r);
        return c * (-k * k * s / r - 2 * k * co / (r * r) + 2 * s / (r * r * r));
      });
}

double corrected_trapezoid(const Eigen::VectorXd& F, double h) {
  const auto n = F.size();
  if (n < 5) throw Error(ErrorKind::Resolution, "corrected trapezoid needs five samples");
  const double trap = h * (F.sum() - 0.5 * (F(0) + F(n - 1)));
  double d1a = 0, d1b = 0, d3a = 0, d3b = 0;
  for (int k = 0; k < 5; ++k) {
    d1a -= kEndD1[k] * F(k);
    d1b += kEndD1[k] * F(n - 1 - k);
    d3a -= kEndD3[k] * F(k);
    d3b += kEndD3[k] * F(n - 1 - k);
  }
  d1a /= 12 * h;
  d1b /= 12 * h;
  d3a /= 2 * h * h * h;
  d3b /= 2 * h * h * h;
  return trap - h * h / 12.0 * (d1b - d1a) + std::pow(h, 4) / 720.0 * (d3b - d3a);
}

FourierValue fourier_hat(const RadialProfile& f, double rho, std::optional<double> tolerance) {
  if (!(rho > 0)) throw Error(ErrorKind::Domain, "rho must be positive");
  require_uniform(f.grid);
  const RadialGrid& g = f.grid;
  Eigen::VectorXd F(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i)
    F(i) = std::sin(rho * g.nodes(i)) * g.nodes(i) * f.values(i);
  FourierValue out;
  out.rho = rho;
  out.value = std::sqrt(2.0 / kPi) / rho * corrected_trapezoid(F, g.step());
  out.tail_bound = weighted_norm(f, 3).value / (rho * g.r_max());
  if (tolerance && out.tail_bound > *tolerance) {
    std::ostringstream os;
    os << "Fourier tail bound " << out.tail_bound << " exceeds tolerance " << *tolerance;
    throw PrecisionError(out.tail_bound, os.str());
  }
  return out;
}

// ---------------------------------------------------------------------------

ConvolutionOperator::ConvolutionOperator(const RadialGrid& grid, double lambda)
    : grid_(grid), lambda_(lambda) {
  if (!(lambda > 0)) throw Error(ErrorKind::Domain, "lambda must be positive");
  require_uniform(grid);
  kappa_ = std::sqrt(lambda);
  h_ = grid.step();
  const auto n = grid.size();
  sin_ = (kappa_ * grid.nodes.array()).sin();
  cos_ = (kappa_ * grid.nodes.array()).cos();

  const double R = grid.r_max();
  const double sR = sin_(n - 1), cR = cos_(n - 1);
  end_re_ = Eigen::RowVectorXd::Zero(n);
  end_im_ = Eigen::RowVectorXd::Zero(n);
  for (int k = 0; k < 5; ++k) {
    const auto j = n - 1 - k;
    const double dp = kEndD1[k] * grid.nodes(j) / (12 * h_);  // coefficient of f_j in p'(R)
    end_re_(j) += cR * dp / kappa_;
    end_im_(j) += sR * dp / kappa_;
  }
  end_re_(n - 1) -= sR * R;
  end_im_(n - 1) += cR * R;

  left_.resize(n);
  left_(0) = kappa_;
  for (Eigen::Index i = 1; i < n; ++i) left_(i) = sin_(i) / grid.nodes(i);
  right_.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double w = (j == 0 || j == n - 1) ? 0.5 * h_ : h_;
    right_(j) = w * sin_(j) * grid.nodes(j) / kappa_;
  }
  right_ -= h_ * h_ / 12.0 * end_im_;
}

ConvolutionOperator::Result ConvolutionOperator::apply(const Eigen::VectorXd& f) const {
  const auto n = grid_.size();
  if (f.size() != n) throw Error(ErrorKind::Domain, "sample count does not match grid");
  const Eigen::VectorXd& r = grid_.nodes;
  const double h = h_, k = kappa_, h2 = h * h, h4 = h2 * h2;

  Eigen::VectorXd p = r.cwiseProduct(f);
  Eigen::VectorXd a = sin_.cwiseProduct(p) / k;
  Eigen::VectorXd cr = cos_.cwiseProduct(p) / k;

  Eigen::VectorXd P(n), QR(n);
  P(0) = 0;
  for (Eigen::Index i = 1; i < n; ++i) P(i) = P(i - 1) + 0.5 * h * (a(i - 1) + a(i));
  QR(n - 1) = 0;
  for (Eigen::Index i = n - 2; i >= 0; --i) QR(i) = QR(i + 1) + 0.5 * h * (cr(i) + cr(i + 1));

  const double end_re = end_re_.dot(f);
  const double total = right_.dot(f);  // corrected int_0^R a

  // p'(R) as used by the end correction.
  double dpR = 0;
  for (int q = 0; q < 5; ++q) dpR += kEndD1[q] * p(n - 1 - q);
  dpR /= 12 * h;

  Result out;
  out.psi.resize(n);
  out.dpsi.resize(n);
  out.psit = left_ * total;
  out.dpsit.resize(n);

  out.psi(0) = k * QR(0) + h2 / 12.0 * f(0) -
               h4 / 720.0 * (6.0 * (f(1) - f(0)) / h2 - 3.0 * k * k * f(0)) - h2 / 12.0 * k * end_re;
  out.dpsi(0) = 0;
  out.dpsit(0) = 0;

  for (Eigen::Index i = 1; i < n; ++i) {
    const double x = r(i), s = sin_(i), c = cos_(i);
    double d1, d2, dp;
    if (i < n - 1) {
      d1 = (f(i + 1) - f(i - 1)) / (2 * h);
      d2 = (f(i + 1) - 2 * f(i) + f(i - 1)) / h2;
      dp = (p(i + 1) - p(i - 1)) / (2 * h);
    } else {
      d1 = (3 * f(i) - 4 * f(i - 1) + f(i - 2)) / (2 * h);
      d2 = (2 * f(i) - 5 * f(i - 1) + 4 * f(i - 2) - f(i - 3)) / h2;
      dp = dpR;
    }
    out.psi(i) = (c * P(i) + s * QR(i)) / x - h2 / 12.0 * f(i) +
                 h4 / 720.0 * (6.0 * d1 / x + 3.0 * d2 - k * k * f(i)) - h2 / 12.0 * s / x * end_re;

    const double i1 = P(i) - h2 / 12.0 * (c * p(i) + s * dp / k);
    const double i2 = QR(i) + h2 / 12.0 * (c * dp / k - s * p(i)) - h2 / 12.0 * end_re;
    const double de_re = -k * s / x - c / (x * x);
    const double ds = k * c / x - s / (x * x);
    out.dpsi(i) = de_re * i1 + ds * i2;
    out.dpsit(i) = ds * total;
  }
  return out;
}

namespace {

RadialProfile with_curvature(const RadialGrid& g, double lambda, Eigen::VectorXd v,
                             Eigen::VectorXd d, const Eigen::VectorXd* source) {
  const auto n = g.size();
  Eigen::VectorXd c(n);
  const double s0 = source ? (*source)(0) : 0.0;
  c(0) = -(lambda * v(0) + s0) / 3.0;
  for (Eigen::Index i = 1; i < n; ++i) {
    const double s = source ? (*source)(i) : 0.0;
    c(i) = -2.0 / g.nodes(i) * d(i) - lambda * v(i) - s;
  }
  return RadialProfile(g, std::move(v), std::move(d), std::move(c));
}

}  // namespace

RadialProfile ConvolutionOperator::psi(const RadialProfile& f) const {
  if (!(f.grid == grid_)) throw Error(ErrorKind::Domain, "profile lives on a different grid");
  Result res = apply(f.values);
  return with_curvature(grid_, lambda_, std::move(res.psi), std::move(res.dpsi), &f.values);
}

RadialProfile ConvolutionOperator::psi_tilde(const RadialProfile& f) const {
  if (!(f.grid == grid_)) throw Error(ErrorKind::Domain, "profile lives on a different grid");
  Result res = apply(f.values);
  return with_curvature(grid_, lambda_, std::move(res.psit), std::move(res.dpsit), nullptr);
}

Eigen::MatrixXd ConvolutionOperator::psi_matrix() const {
  const auto n = grid_.size();
  const Eigen::VectorXd& r = grid_.nodes;
  const double h = h_, k = kappa_, h2 = h * h, h4 = h2 * h2;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);

  // Row 0: int_0^R cos(kr) r f dr.
  for (Eigen::Index j = 0; j < n; ++j) {
    const double w = (j == 0 || j == n - 1) ? 0.5 * h : h;
    M(0, j) = w * cos_(j) * r(j);
  }
  M(0, 0) += h2 / 12.0 + 6.0 * h2 / 720.0 + 3.0 * k * k * h4 / 720.0;
  M(0, 1) -= 6.0 * h2 / 720.0;
  M.row(0) -= h2 / 12.0 * k * end_re_;

  Eigen::VectorXd sr = sin_.cwiseProduct(r) / k;  // a_j / f_j
  Eigen::VectorXd cr = cos_.cwiseProduct(r) / k;
  for (Eigen::Index i = 1; i < n; ++i) {
    const double x = r(i), s = sin_(i), c = cos_(i);
    auto row = M.row(i);
    const double lw = c / x, rw = s / x;
    for (Eigen::Index j = 1; j < i; ++j) row(j) = lw * h * sr(j);
    row(i) = lw * 0.5 * h * sr(i);
    if (i < n - 1) {
      row(i) += rw * 0.5 * h * cr(i);
      for (Eigen::Index j = i + 1; j < n - 1; ++j) row(j) = rw * h * cr(j);
      row(n - 1) += rw * 0.5 * h * cr(n - 1);
    }
    row(i) += -h2 / 12.0 - k * k * h4 / 720.0;
    const double c1 = h4 / 720.0 * 6.0 / x, c2 = h4 / 720.0 * 3.0;
    if (i < n - 1) {
      row(i + 1) += c1 / (2 * h) + c2 / h2;
      row(i - 1) += -c1 / (2 * h) + c2 / h2;
      row(i) += -2.0 * c2 / h2;
    } else {
      row(i) += 3.0 * c1 / (2 * h) + 2.0 * c2 / h2;
      row(i - 1) += -4.0 * c1 / (2 * h) - 5.0 * c2 / h2;
      row(i - 2) += c1 / (2 * h) + 4.0 * c2 / h2;
      row(i - 3) += -c2 / h2;
    }
    row -= h2 / 12.0 * rw * end_re_;
  }
  return M;
}

RadialProfile convolve(const FundamentalKernel& kernel, const RadialProfile& f) {
  ConvolutionOperator op(f.grid, kernel.lambda);
  return kernel.kind == KernelKind::Sin ? op.psi_tilde(f) : op.psi(f);
}

std::pair<RadialProfile, RadialProfile> convolve_complex(double lambda, const RadialProfile& f) {
  ConvolutionOperator op(f.grid, lambda);
  return {op.psi(f), op.psi_tilde(f)};
}

RadialProfile r_lambda_omega(double lambda, double omega, const RadialProfile& f) {
  const double s = std::sin(omega);
  if (std::abs(s) < 1e-6) {
    std::ostringstream os;
    os << "omega = " << omega << " is within 1e-6 of a multiple of pi";
    throw Error(ErrorKind::SingularParameter, os.str());
  }
  const double cot = std::cos(omega) / s;
  ConvolutionOperator op(f.grid, lambda);
  RadialProfile a = op.psi(f);
  RadialProfile b = op.psi_tilde(f);
  a.values += cot * b.values;
  a.derivs += cot * b.derivs;
  a.curvature += cot * b.curvature;
  return a;
}

AlphaBeta alpha_beta(const RadialProfile& w, double lambda, FitWindow window) {
  const FarFieldCoefficients c = farfield_coefficients(w, lambda, window);
  AlphaBeta out;
  out.alpha = 4 * kPi * c.a;
  out.beta = 4 * kPi * c.b;
  out.residual = c.residual;
  const double amp = std::hypot(c.a, c.b);
  const double limit = 500.0 * amp / (c.start * c.start);
  if (c.residual > limit && c.residual > 1e-12) {
    std::ostringstream os;
    os << "profile is not of the form (alpha sin + beta cos)/(4 pi r) + O(1/r^2): residual "
       << c.residual;
    throw Error(ErrorKind::NotInU1, os.str());
  }
  return out;
}

}  // namespace helmbif
