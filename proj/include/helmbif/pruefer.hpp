#pragma once

#include <optional>

#include "helmbif/radial_core.hpp"

namespace helmbif {

/// Polar coordinates of y = r w for -y'' - lambda y = g y, w(0) = 1:
///   y = rho sin(phi sqrt(lambda)),  y' = rho sqrt(lambda) cos(phi sqrt(lambda)).
struct PhaseTrajectory {
  RadialGrid grid;
  double lambda = 1.0;
  Eigen::VectorXd phi;
  Eigen::VectorXd log_rho;
  /// Running value of (1/sqrt(lambda)) int_0^r g sin^2(phi sqrt(lambda)) ds.
  Eigen::VectorXd omega_partial;
};

/// w(r) ~ amplitude * sin(sqrt(lambda) r + phase_total()) / r for w(0) = 1.
struct FarField {
  double amplitude = 0.0;
  double phase_mod_pi = 0.0;  // in [0, pi); within 1e-8 below pi counts as 0
  int winding = 0;
  /// Phase error estimate in radians.
  double tail_residual_bound = 0.0;

  double phase_total() const;
};

struct PrueferOptions {
  int substeps = 32;
  double max_phase_step = 0.39269908169872414;  // pi/8 per RK step
};

PhaseTrajectory pruefer_solve(double lambda, const RadialProfile& g,
                              const PrueferOptions& opt = {});

/// Asymptotic phase of the potential g from its trajectory.  Throws
/// PrecisionError if the tail bound ||g||_{X_2} / (sqrt(lambda) r_max)
/// exceeds `tolerance`.
FarField asymptotic_phase(const PhaseTrajectory& traj, const RadialProfile& g,
                          std::optional<double> tolerance = std::nullopt);

struct FitWindow {
  double start = -1.0;  // default 0.75 * r_max
  double end = -1.0;    // default r_max
};

struct FitOptions {
  /// A residual above 10 * remainder_coefficient * amplitude / start^2 is
  /// rejected as not far-field.
  double remainder_coefficient = 50.0;
  double triviality_threshold = 1e-12;
};

/// Least-squares far-field fit of r w over the window, sign-normalized by
/// w(0); the winding is recovered from sign changes of w on (0, end].
FarField farfield_fit(const RadialProfile& w, double lambda, FitWindow window = {},
                      const FitOptions& opt = {});

/// Coefficients (A, B) of r w ~ A sin(kr) + B cos(kr) at the window end,
/// without normalization.  Residual is the max fit residual of r w.
struct FarFieldCoefficients {
  double a = 0.0;
  double b = 0.0;
  double residual = 0.0;
  double start = 0.0;
  double end = 0.0;
};
FarFieldCoefficients farfield_coefficients(const RadialProfile& w, double lambda,
                                           FitWindow window = {});

/// Linear rows taking the samples of w to (A, B) of farfield_coefficients.
Eigen::Matrix<double, 2, Eigen::Dynamic> farfield_functionals(const RadialGrid& grid,
                                                              double lambda,
                                                              FitWindow window = {});

/// Far field of u0 (amplitude |c0|, phase sigma0) and of the linearization
/// potential 3 u0^2 (phase tau0).
struct ScalarConstants {
  FarField sigma;
  FarField tau;
  double c0 = 0.0;

  double sigma0() const { return sigma.phase_mod_pi; }
  double tau0() const { return tau.phase_mod_pi; }
};

ScalarConstants sigma_tau_constants(const RadialProfile& u0, double mu,
                                    const PrueferOptions& opt = {});

/// Profile of scale * u^2 with derivatives from the chain rule.
RadialProfile scaled_square(const RadialProfile& u, double scale);

}  // namespace helmbif
