#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "helmbif/helmholtz_ops.hpp"
#include "helmbif/pruefer.hpp"

namespace helmbif {

enum class Family { Semitrivial, Diagonal };

/// Point on the trivial family where the kernel of the linearization is
/// spanned by the radial solution `eigenfunction` (value 1 at the origin) of
///   -psi'' - (2/r) psi' - lambda psi = kernel_coupling u0^2 psi.
struct BifurcationPoint {
  Family family = Family::Semitrivial;
  int k = 0;
  double omega = 0.0;
  double lambda = 1.0;
  double b = 0.0;                // parameter value on the trivial family
  double kernel_coupling = 0.0;  // b_k(omega); equals b for the semitrivial family
  RadialProfile eigenfunction;
  double phase_residual = 0.0;
  std::optional<RadialProfile> base;  // u_b for the diagonal family
};

struct SolveOptions {
  double tolerance = 1e-10;  // on the phase
  double bracket_limit = 1e6;
  int max_iterations = 200;
  PrueferOptions pruefer;
};

/// omega_lambda(b u0^2) as a function of b.
double phase_of_coupling(double b, double lambda, const RadialProfile& u0,
                         const PrueferOptions& opt = {});

/// Unique b with omega_lambda(b u0^2) = omega + k pi, omega in [0, pi).
BifurcationPoint solve_bk(double omega, int k, double lambda, const RadialProfile& u0,
                          const SolveOptions& opt = {});

/// b~ = (3 - b_k)/(1 + b_k); an involution away from -1.
double mobius_diagonal(double bk);

/// Diagonal-family point for (omega, k) or nullopt when b~ <= -1.
std::optional<BifurcationPoint> diagonal_points(double omega, int k, double mu,
                                                const RadialProfile& u0,
                                                const SolveOptions& opt = {});

struct NystromMatch {
  int k = 0;
  double b_k = 0.0;
  double expected = 0.0;        // 1/b_k
  double computed = 0.0;        // closest discrete eigenvalue (real part)
  double computed_imag = 0.0;
  double relative_mismatch = 0.0;
  double separation = 0.0;      // distance to the next discrete eigenvalue
  double eigenvector_distance = 0.0;
  bool resolved = true;
};

struct SpectralReport {
  double omega = 0.0;
  double lambda = 1.0;
  Eigen::Index size = 0;
  int k_max = 0;
  Eigen::VectorXcd eigenvalues;  // sorted by decreasing modulus
  std::vector<NystromMatch> matches;
  /// Eigenvalues beyond the matched range in modulus that match no 1/b_k.
  std::vector<std::complex<double>> unmatched;
  double tolerance = 1e-3;
  bool ok = false;
};

struct NystromOptions {
  /// Matched range |k| <= k_max; negative derives it from the grid resolution.
  int k_max = -1;
  int k_max_cap = 6;
  double tolerance = 1e-3;
  /// Largest local wavenumber times h accepted as resolved.
  double max_local_kh = 1.0;
  SolveOptions solve;
};

/// Dense eigen-decomposition of R^omega_lambda(u0^2 .) on n uniform nodes,
/// matched against 1/b_k for |k| <= k_max.  A k whose b_k the grid does not
/// resolve counts as a failure when k_max is given explicitly.
SpectralReport nystrom_spectrum(double omega, double lambda, const RadialProfile& u0,
                                Eigen::Index n, const NystromOptions& opt = {});

struct WronskianReport {
  Eigen::VectorXd q;           // r^2 (psi v' - v psi')
  Eigen::VectorXd dq_numeric;  // finite-difference derivative of q
  Eigen::VectorXd dq_exact;    // r^2 u0^2 psi^2
  double relative_l2 = 0.0;
};

/// Checks (r^2 (psi v' - v psi'))' = r^2 u0^2 psi^2 for v solving
/// -v'' - (2/r) v' - lambda v = b u0^2 v - u0^2 psi.
WronskianReport wronskian_check(const RadialProfile& psi, const RadialProfile& v,
                                const RadialProfile& u0);

/// Solution v of the generalized kernel equation above with v(0) = 0.
RadialProfile generalized_kernel_solution(const BifurcationPoint& p, const RadialProfile& u0,
                                          const IntegratorOptions& opt = {});

}  // namespace helmbif
