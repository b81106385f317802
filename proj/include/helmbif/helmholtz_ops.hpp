#pragma once

#include <Eigen/Core>

#include <optional>
#include <utility>

#include "helmbif/pruefer.hpp"
#include "helmbif/radial_core.hpp"

namespace helmbif {

/// Psi = cos(k|x|)/(4 pi |x|), PsiTilde = sin(k|x|)/(4 pi |x|), Phi = Psi + i PsiTilde.
enum class KernelKind { Cos, Sin, Complex };

struct FundamentalKernel {
  double lambda = 1.0;
  KernelKind kind = KernelKind::Complex;

  double kappa() const;
  /// Real part (Cos, Complex) or imaginary part (Sin) at r > 0.
  double operator()(double r) const;
};

/// Samples of PsiTilde (finite at the origin).
RadialProfile psi_tilde_profile(double lambda, const RadialGrid& grid);

/// f^(rho) = sqrt(2/pi) int f(r) sin(rho r)/(rho r) r^2 dr.
struct FourierValue {
  double rho = 0.0;
  double value = 0.0;
  double tail_bound = 0.0;  // ||f||_{X_3} / (rho r_max)
};

FourierValue fourier_hat(const RadialProfile& f, double rho,
                         std::optional<double> tolerance = std::nullopt);

/// Trapezoid rule on a uniform grid with endpoint corrections through h^4.
double corrected_trapezoid(const Eigen::VectorXd& samples, double h);

/// Radial convolution with Psi and PsiTilde on a uniform grid, truncated at
/// r_max.  The trapezoid sums carry end and kink corrections so that smooth
/// data converge at order h^6; the matrix form reproduces apply() exactly up
/// to rounding.
class ConvolutionOperator {
 public:
  ConvolutionOperator(const RadialGrid& grid, double lambda);

  struct Result {
    Eigen::VectorXd psi, dpsi;    // Psi * f and its radial derivative
    Eigen::VectorXd psit, dpsit;  // PsiTilde * f and its radial derivative
  };

  Result apply(const Eigen::VectorXd& f) const;

  /// Psi * f as a profile with curvature from the ODE.
  RadialProfile psi(const RadialProfile& f) const;
  /// PsiTilde * f as a profile with curvature from the ODE.
  RadialProfile psi_tilde(const RadialProfile& f) const;

  /// Dense matrix of f -> Psi * f on the nodes.
  Eigen::MatrixXd psi_matrix() const;
  /// PsiTilde * f = left() * (right().dot(f)).
  const Eigen::VectorXd& psi_tilde_left() const { return left_; }
  const Eigen::RowVectorXd& psi_tilde_right() const { return right_; }

  const RadialGrid& grid() const { return grid_; }
  double lambda() const { return lambda_; }

 private:
  RadialGrid grid_;
  double lambda_, kappa_, h_;
  Eigen::VectorXd sin_, cos_;
  Eigen::RowVectorXd end_re_, end_im_;  // f -> Re, Im of d/dr(e^{ikr} r f / k) at r_max
  Eigen::VectorXd left_;
  Eigen::RowVectorXd right_;
};

RadialProfile convolve(const FundamentalKernel& kernel, const RadialProfile& f);

/// Real and imaginary parts of Phi * f.
std::pair<RadialProfile, RadialProfile> convolve_complex(double lambda, const RadialProfile& f);

/// R^omega_lambda f = Psi * f + cot(omega) PsiTilde * f.
RadialProfile r_lambda_omega(double lambda, double omega, const RadialProfile& f);

/// w ~ (alpha sin(kr) + beta cos(kr)) / (4 pi r); residual of the fit of r w.
struct AlphaBeta {
  double alpha = 0.0;
  double beta = 0.0;
  double residual = 0.0;
};

AlphaBeta alpha_beta(const RadialProfile& w, double lambda, FitWindow window = {});

}  // namespace helmbif
