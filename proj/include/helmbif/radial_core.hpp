#pragma once

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <vector>

#include "helmbif/errors.hpp"

namespace helmbif {

enum class Grading { Uniform, Geometric };

/// Ordered radial nodes on [0, r_max] with r_0 = 0.
template <typename Scalar>
struct BasicRadialGrid {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector nodes;
  Grading grading = Grading::Uniform;

  static BasicRadialGrid uniform(Scalar r_max, Eigen::Index n) {
    if (n < 2 || !(r_max > Scalar(0)))
      throw Error(ErrorKind::Domain, "uniform grid needs n >= 2 and r_max > 0");
    BasicRadialGrid g;
    g.nodes = Vector::LinSpaced(n, Scalar(0), r_max);
    g.grading = Grading::Uniform;
    return g;
  }

  /// Uniform grid resolving the wavelength 2*pi/sqrt(lambda).
  /// Defaults: 64 nodes per wavelength, r_max = 200/sqrt(lambda).
  static BasicRadialGrid for_lambda(Scalar lambda, Scalar r_max = Scalar(0),
                                    int nodes_per_period = 64) {
    using std::ceil;
    using std::sqrt;
    if (!(lambda > Scalar(0)))
      throw Error(ErrorKind::Domain, "lambda must be positive");
    const Scalar kappa = sqrt(lambda);
    if (!(r_max > Scalar(0))) r_max = Scalar(200) / kappa;
    const Scalar h0 = Scalar(2 * std::numbers::pi) / kappa / Scalar(nodes_per_period);
    const auto n = static_cast<Eigen::Index>(ceil(r_max / h0)) + 1;
    return uniform(r_max, n);
  }

  /// Geometric spacing near the origin, uniform with step h further out.
  static BasicRadialGrid geometric(Scalar r_max, Scalar h, Scalar h_min, Scalar ratio = Scalar(1.2)) {
    if (!(h_min > Scalar(0)) || !(h >= h_min) || !(ratio > Scalar(1)) || !(r_max > h))
      throw Error(ErrorKind::Domain, "invalid geometric grid parameters");
    std::vector<Scalar> r{Scalar(0)};
    Scalar step = h_min;
    while (step < h && r.back() + step < r_max) {
      r.push_back(r.back() + step);
      step *= ratio;
    }
    while (r.back() + h < r_max - Scalar(1e-12) * r_max) r.push_back(r.back() + h);
    r.push_back(r_max);
    BasicRadialGrid g;
    g.nodes = Eigen::Map<Vector>(r.data(), static_cast<Eigen::Index>(r.size()));
    g.grading = Grading::Geometric;
    return g;
  }

  Eigen::Index size() const { return nodes.size(); }
  Scalar r_max() const { return nodes(nodes.size() - 1); }
  bool is_uniform() const { return grading == Grading::Uniform; }
  /// Step of a uniform grid.
  Scalar step() const { return nodes(1) - nodes(0); }
  Scalar max_spacing() const {
    return (nodes.tail(size() - 1) - nodes.head(size() - 1)).maxCoeff();
  }

  bool operator==(const BasicRadialGrid& o) const {
    return grading == o.grading && nodes.size() == o.nodes.size() && nodes == o.nodes;
  }
};

/// Samples of a radial function, its radial derivative and optionally its
/// second derivative.
template <typename Scalar>
struct BasicRadialProfile {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BasicRadialGrid<Scalar> grid;
  Vector values;
  Vector derivs;
  Vector curvature;  // empty when unknown

  BasicRadialProfile() = default;
  BasicRadialProfile(BasicRadialGrid<Scalar> g, Vector v, Vector d, Vector c = Vector())
      : grid(std::move(g)), values(std::move(v)), derivs(std::move(d)), curvature(std::move(c)) {
    if (values.size() != grid.size() || derivs.size() != grid.size() ||
        (curvature.size() != 0 && curvature.size() != grid.size()))
      throw Error(ErrorKind::Domain, "profile sample count does not match grid");
  }

  static BasicRadialProfile zero(const BasicRadialGrid<Scalar>& g) {
    return {g, Vector::Zero(g.size()), Vector::Zero(g.size()), Vector::Zero(g.size())};
  }

  Eigen::Index size() const { return values.size(); }
  bool has_curvature() const { return curvature.size() == values.size(); }
};

using RadialGrid = BasicRadialGrid<double>;
using RadialProfile = BasicRadialProfile<double>;

/// sup_r (1+r^2)^{q/2} |w(r)| on the grid nodes.
struct WeightedNorm {
  double value = 0.0;
  int q = 0;
  double argmax_r = 0.0;
};

/// Piecewise Hermite interpolant of a profile: quintic when curvature is
/// available, cubic otherwise.
class ProfileInterpolant {
 public:
  ProfileInterpolant() = default;
  explicit ProfileInterpolant(RadialProfile p);

  double operator()(double r) const { return eval(r, 0); }
  double derivative(double r) const { return eval(r, 1); }
  /// Value (order 0), first (1) or second (2) derivative.
  double eval(double r, int order) const;

 private:
  Eigen::Index locate(double r) const;

  RadialProfile p_;
  double inv_h_ = 0.0;
};

/// Right-hand side h(r, w) = g(r) w + cubic * w^3 + s(r) of
/// -w'' - (2/r) w' - lambda w = h(r, w).
struct RadialRhs {
  std::function<double(double)> potential;
  double cubic = 0.0;
  std::function<double(double)> source;
};

struct IntegratorOptions {
  int substeps = 32;          // RK4 steps per grid interval
  int min_nodes_per_period = 16;
};

RadialProfile integrate_radial(double lambda, const RadialRhs& rhs, double w0,
                               const RadialGrid& grid, const IntegratorOptions& opt = {});

/// Two coupled radial equations
///   -u_i'' - (2/r) u_i' - lambda_i u_i = h_i(r, u_1, u_2).
struct PairRhs {
  std::function<double(double, double, double)> h1;
  std::function<double(double, double, double)> h2;
};

std::pair<RadialProfile, RadialProfile> integrate_radial_pair(
    double lambda1, double lambda2, const PairRhs& rhs, double u1_0, double u2_0,
    const RadialGrid& grid, const IntegratorOptions& opt = {});

/// Radial solution of -u'' - (2/r) u' - mu u = u^3 with u(0) = a.
RadialProfile solve_scalar(double a, double mu, const RadialGrid& grid,
                           const IntegratorOptions& opt = {});

WeightedNorm weighted_norm(const RadialProfile& w, int q);

RadialProfile resample(const RadialProfile& p, const RadialGrid& target);

/// Profile sampled from a function and its first two derivatives.
RadialProfile sample_profile(const RadialGrid& grid, const std::function<double(double)>& f,
                             const std::function<double(double)>& df,
                             const std::function<double(double)>& d2f);

/// Callable r -> w(r) interpolating a copy of the profile.
std::function<double(double)> as_function(const RadialProfile& p);

/// Callable r -> scale * w(r)^2.
std::function<double(double)> squared_potential(const RadialProfile& p, double scale = 1.0);

/// Mollified bump amp * exp(1 - 1/(1 - t^2)), t = (r - center)/width, |t| < 1.
struct SmoothBump {
  double center = 0.0;
  double width = 1.0;
  double amplitude = 1.0;

  double operator()(double r) const { return eval(r, 0); }
  double eval(double r, int order) const;
  RadialProfile sample(const RadialGrid& grid) const;
};

}  // namespace helmbif
