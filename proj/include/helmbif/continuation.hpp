#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "helmbif/bifurcation.hpp"
#include "helmbif/helmholtz_ops.hpp"

namespace helmbif {

enum class Mode { Semitrivial, Diagonal };

const char* to_string(Mode m);

/// Parameters of the fixed-point formulation.
///
/// Semitrivial mode: u = u0 + w, v, with w at phase tau1 (wavenumber mu) and
/// v at phase omega (wavenumber nu).  Diagonal mode: u = P + Q, v = P - Q
/// with P = u_b + w1, Q = w2, u_b = u0 / sqrt(1 + b), both at wavenumber mu.
/// A phase of exactly 0 uses the far-field functionals in place of the
/// resolvent, with sign choice sigma.
struct SystemParams {
  double mu = 1.0;
  double nu = 1.0;
  double omega = 1.5707963267948966;
  std::optional<double> tau1;  // default tau0 + pi/2 mod pi
  Mode mode = Mode::Semitrivial;
  int sigma = 1;        // second component, omega = 0
  int sigma_first = 1;  // first component, tau1 = 0
};

struct SystemState {
  Mode mode = Mode::Semitrivial;
  RadialProfile w;  // first component correction (w, or w1)
  RadialProfile v;  // second component (v, or w2)
  double b = 0.0;
  double residual = 0.0;
};

struct Defect {
  RadialProfile du;
  RadialProfile dv;
  double residual = 0.0;  // sup norm over both components
};

/// Discretized map F(w, v, b) on a uniform grid.  Dense operator matrices are
/// built on first use and shared read-only afterwards.
class FixedPointProblem {
 public:
  FixedPointProblem(RadialProfile u0, SystemParams params);

  const RadialGrid& grid() const { return u0_.grid; }
  const RadialProfile& u0() const { return u0_; }
  const SystemParams& params() const { return params_; }
  Eigen::Index n() const { return u0_.size(); }
  double tau1() const { return comp_[0].phase; }

  /// Unknown vector [w; v; b].
  Eigen::VectorXd pack(const SystemState& s) const;
  /// State with derivative and curvature samples of both components.
  SystemState unpack(const Eigen::VectorXd& x) const;

  /// F(w, v, b) via prefix sums, O(n).
  Eigen::VectorXd defect(const Eigen::VectorXd& x) const;
  /// [D_(w,v) F, d_b F], size 2n x (2n + 1).
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;

  /// Weights of the inner product <x, y> = sum m_i (x_i y_i), m = h (1 + r^2) / r_max
  /// on the profile entries and 1 on b.
  const Eigen::VectorXd& weights() const { return weights_; }
  double dot(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;

 private:
  struct Component {
    double lambda = 1.0;
    double phase = 0.0;
    int sigma = 1;
    std::shared_ptr<const ConvolutionOperator> op;
    Eigen::VectorXd t;       // PsiTilde samples (phase 0)
    Eigen::VectorXd dt;      // PsiTilde derivative samples (phase 0)
    Eigen::RowVectorXd ell;  // alpha + sigma beta (phase 0)
    double cot = 0.0;
  };

  struct Nonlinearity {
    Eigen::VectorXd n1, n2;                  // N_1, N_2
    Eigen::VectorXd d11, d12, d21, d22;      // dN_i / d(w, v)
    Eigen::VectorXd db1, db2;                // dN_i / db
  };

  Component make_component(double lambda, double phase, int sigma,
                           std::shared_ptr<const ConvolutionOperator> shared) const;
  Nonlinearity nonlinearity(const Eigen::VectorXd& w, const Eigen::VectorXd& v, double b,
                            bool derivatives) const;
  Eigen::VectorXd apply_component(const Component& c, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& nl, Eigen::VectorXd* deriv) const;
  const Eigen::MatrixXd& dense(int i) const;

  RadialProfile u0_;
  SystemParams params_;
  Component comp_[2];
  Eigen::VectorXd weights_;
  mutable std::once_flag dense_once_[2];
  mutable Eigen::MatrixXd dense_[2];  // Psi + cot PsiTilde (or Psi for phase 0)
};

Defect fixed_point_defect(const SystemState& s, const FixedPointProblem& problem);

struct NewtonOptions {
  double tolerance = 1e-10;
  int max_iterations = 12;
  /// Reciprocal condition estimate below which the linearization counts as singular.
  double min_rcond = 1e-9;
};

/// Newton's method in (w, v) at fixed b.
SystemState newton_correct(const SystemState& s, const FixedPointProblem& problem,
                           const NewtonOptions& opt = {});

struct SwitchOptions {
  double epsilon = 1e-3;
  double triviality_threshold = 1e-8;
  NewtonOptions newton;
};

/// Bordered Newton solve for a point on the nontrivial branch through
/// `origin`, pinned by <v, psi> = epsilon with ||psi||_{X_1} = 1.
SystemState branch_switch(const BifurcationPoint& origin, const FixedPointProblem& problem,
                          const SwitchOptions& opt = {});

enum class Termination {
  WindowExhausted,
  StepLimit,
  NewtonFailed,
  ReturnedToSemitrivial,
  ReturnedToDiagonal,
};

const char* to_string(Termination t);

struct BranchPoint {
  double arclength = 0.0;
  double b = 0.0;
  double w_norm = 0.0;  // ||w||_{X_1}
  double v_norm = 0.0;  // ||v||_{X_1}
  double v_phase = 0.0; // total far-field phase of v, NaN when trivial
  double residual = 0.0;
  int newton_iterations = 0;
};

struct Branch {
  std::optional<BifurcationPoint> origin;
  /// omega + k pi of the origin, else the phase of the first nontrivial point.
  double phase_label = 0.0;
  std::vector<BranchPoint> points;
  std::vector<SystemState> states;
  Termination termination = Termination::WindowExhausted;
  std::string message;
};

struct ContinuationOptions {
  int max_steps = 1000;
  double step_cap = 0.1;   // on the product X_1 norm of consecutive points
  double min_step = 1e-10;
  double max_step = 0.1;   // on the arclength increment
  double triviality_threshold = 1e-8;
  NewtonOptions newton;
};

/// Pseudo-arclength continuation from `start` for an arclength budget `window`
/// with initial increment `step`.
Branch continue_branch(const SystemState& start, const FixedPointProblem& problem,
                       double window, double step, const ContinuationOptions& opt = {});

/// Smallest singular value by inverse iteration on A^T A.
double smallest_singular_value(const Eigen::MatrixXd& a, int iterations = 60);

}  // namespace helmbif
