#include "helmbif/radial_core.hpp"

#include <algorithm>
#include <array>
#include <memory>
#include <sstream>

namespace helmbif {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Diverged: return "diverged";
    case ErrorKind::Resolution: return "resolution";
    case ErrorKind::Range: return "range";
    case ErrorKind::Precision: return "precision";
    case ErrorKind::InconsistentProfile: return "inconsistent-profile";
    case ErrorKind::SingularParameter: return "singular-parameter";
    case ErrorKind::NotInU1: return "not-in-U1";
    case ErrorKind::Surjectivity: return "surjectivity";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::NearSingular: return "near-singular";
    case ErrorKind::StepTooSmall: return "step-too-small";
    case ErrorKind::NotConverged: return "not-converged";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Interpolation

ProfileInterpolant::ProfileInterpolant(RadialProfile p) : p_(std::move(p)) {
  if (p_.size() < 2) throw Error(ErrorKind::Domain, "interpolant needs at least two nodes");
  if (p_.grid.is_uniform()) inv_h_ = 1.0 / p_.grid.step();
}

Eigen::Index ProfileInterpolant::locate(double r) const {
  const auto n = p_.size();
  if (inv_h_ > 0.0) {
    auto i = static_cast<Eigen::Index>(r * inv_h_);
    return std::clamp<Eigen::Index>(i, 0, n - 2);
  }
  const double* b = p_.grid.nodes.data();
  auto it = std::upper_bound(b, b + n, r);
  auto i = static_cast<Eigen::Index>(it - b) - 1;
  return std::clamp<Eigen::Index>(i, 0, n - 2);
}

double ProfileInterpolant::eval(double r, int order) const {
  const auto i = locate(r);
  const double r0 = p_.grid.nodes(i), r1 = p_.grid.nodes(i + 1);
  const double d = r1 - r0;
  const double t = (r - r0) / d;
  const double f0 = p_.values(i), f1 = p_.values(i + 1);
  const double g0 = p_.derivs(i) * d, g1 = p_.derivs(i + 1) * d;
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  if (p_.has_curvature()) {
    const double c0 = p_.curvature(i) * d * d, c1 = p_.curvature(i + 1) * d * d;
    if (order == 0) {
      const double h01 = 10 * t3 - 15 * t4 + 6 * t5;
      const double h10 = t - 6 * t3 + 8 * t4 - 3 * t5;
      const double h11 = -4 * t3 + 7 * t4 - 3 * t5;
      const double h20 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
      const double h21 = 0.5 * (t3 - 2 * t4 + t5);
      return f0 + (f1 - f0) * h01 + g0 * h10 + g1 * h11 + c0 * h20 + c1 * h21;
    }
    if (order == 2) {
      const double h01 = 60 * t - 180 * t2 + 120 * t3;
      const double h10 = -36 * t + 96 * t2 - 60 * t3;
      const double h11 = -24 * t + 84 * t2 - 60 * t3;
      const double h20 = 0.5 * (2 - 18 * t + 36 * t2 - 20 * t3);
      const double h21 = 0.5 * (6 * t - 24 * t2 + 20 * t3);
      return ((f1 - f0) * h01 + g0 * h10 + g1 * h11 + c0 * h20 + c1 * h21) / (d * d);
    }
    const double h01 = 30 * t2 - 60 * t3 + 30 * t4;
    const double h10 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
    const double h11 = -12 * t2 + 28 * t3 - 15 * t4;
    const double h20 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4);
    const double h21 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);
    return ((f1 - f0) * h01 + g0 * h10 + g1 * h11 + c0 * h20 + c1 * h21) / d;
  }
  if (order == 0) {
    const double h01 = 3 * t2 - 2 * t3;
    const double h10 = t - 2 * t2 + t3;
    const double h11 = t3 - t2;
    return f0 + (f1 - f0) * h01 + g0 * h10 + g1 * h11;
  }
  if (order == 2)
    return ((f1 - f0) * (6 - 12 * t) + g0 * (6 * t - 4) + g1 * (6 * t - 2)) / (d * d);
  const double h01 = 6 * t - 6 * t2;
  const double h10 = 1 - 4 * t + 3 * t2;
  const double h11 = 3 * t2 - 2 * t;
  return ((f1 - f0) * h01 + g0 * h10 + g1 * h11) / d;
}

std::function<double(double)> as_function(const RadialProfile& p) {
  auto ip = std::make_shared<ProfileInterpolant>(p);
  return [ip](double r) { return (*ip)(r); };
}

std::function<double(double)> squared_potential(const RadialProfile& p, double scale) {
  auto ip = std::make_shared<ProfileInterpolant>(p);
  return [ip, scale](double r) {
    const double u = (*ip)(r);
    return scale * u * u;
  };
}

// ---------------------------------------------------------------------------
// Integration on y = r w

namespace {

template <std::size_t M>
using Values = std::array<double, M>;

// hfun(r, w) returns h_i(r, w); acceleration of y_i = r w_i is
// y_i'' = -lambda_i y_i - r h_i(r, y/r).
template <std::size_t M, class H>
std::array<RadialProfile, M> integrate_y(const Values<M>& lambda, const H& hfun,
                                         const Values<M>& w0, const RadialGrid& grid,
                                         const IntegratorOptions& opt) {
  const auto n = grid.size();
  if (n < 2) throw Error(ErrorKind::Domain, "grid needs at least two nodes");
  if (opt.substeps < 1) throw Error(ErrorKind::Domain, "substeps must be positive");
  double lam_max = 0.0;
  for (double l : lambda) {
    if (!(l > 0.0)) throw Error(ErrorKind::Domain, "lambda must be positive");
    lam_max = std::max(lam_max, l);
  }
  const double period = 2.0 * std::numbers::pi / std::sqrt(lam_max);
  if (grid.max_spacing() > period / opt.min_nodes_per_period) {
    std::ostringstream os;
    os << "grid spacing " << grid.max_spacing() << " exceeds wavelength/"
       << opt.min_nodes_per_period;
    throw Error(ErrorKind::Resolution, os.str());
  }

  std::array<Eigen::VectorXd, M> val, der, cur;
  for (std::size_t c = 0; c < M; ++c) {
    val[c].resize(n);
    der[c].resize(n);
    cur[c].resize(n);
  }

  using State = std::array<double, 2 * M>;  // (y_1, y_1', y_2, y_2', ...)
  auto deriv = [&](double r, const State& s) {
    Values<M> w;
    for (std::size_t c = 0; c < M; ++c) w[c] = s[2 * c] / r;
    const Values<M> h = hfun(r, w);
    State ds;
    for (std::size_t c = 0; c < M; ++c) {
      ds[2 * c] = s[2 * c + 1];
      ds[2 * c + 1] = -lambda[c] * s[2 * c] - r * h[c];
    }
    return ds;
  };
  auto rk4 = [&](double r, State& s, double dr) {
    const State k1 = deriv(r, s);
    State t;
    for (std::size_t j = 0; j < 2 * M; ++j) t[j] = s[j] + 0.5 * dr * k1[j];
    const State k2 = deriv(r + 0.5 * dr, t);
    for (std::size_t j = 0; j < 2 * M; ++j) t[j] = s[j] + 0.5 * dr * k2[j];
    const State k3 = deriv(r + 0.5 * dr, t);
    for (std::size_t j = 0; j < 2 * M; ++j) t[j] = s[j] + dr * k3[j];
    const State k4 = deriv(r + dr, t);
    for (std::size_t j = 0; j < 2 * M; ++j)
      s[j] += dr / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  };
  auto store = [&](Eigen::Index i, double r, const State& s) {
    Values<M> w;
    for (std::size_t c = 0; c < M; ++c) w[c] = s[2 * c] / r;
    const Values<M> h = hfun(r, w);
    for (std::size_t c = 0; c < M; ++c) {
      const double d = (s[2 * c + 1] - w[c]) / r;
      val[c](i) = w[c];
      der[c](i) = d;
      cur[c](i) = -2.0 / r * d - lambda[c] * w[c] - h[c];
    }
  };
  auto finite = [](const State& s) {
    return std::all_of(s.begin(), s.end(), [](double x) { return std::isfinite(x); });
  };

  // Taylor start: w(r) = w0 + w''(0) r^2 / 2 with w''(0) = -(lambda w0 + h(0, w0)) / 3.
  const Values<M> h0 = hfun(0.0, w0);
  Values<M> w2;
  for (std::size_t c = 0; c < M; ++c) {
    w2[c] = -(lambda[c] * w0[c] + h0[c]) / 3.0;
    val[c](0) = w0[c];
    der[c](0) = 0.0;
    cur[c](0) = w2[c];
  }
  const double r1 = grid.nodes(1);
  const double eps = std::min(r1 / 64.0, 1e-3 / std::sqrt(lam_max));
  State s;
  for (std::size_t c = 0; c < M; ++c) {
    const double w = w0[c] + 0.5 * w2[c] * eps * eps;
    const double dw = w2[c] * eps;
    s[2 * c] = eps * w;
    s[2 * c + 1] = w + eps * dw;
  }
  double r = eps;
  for (Eigen::Index i = 1; i < n; ++i) {
    const double target = grid.nodes(i);
    const double dr = (target - r) / opt.substeps;
    for (int k = 0; k < opt.substeps; ++k) {
      rk4(r, s, dr);
      if (!finite(s)) {
        std::ostringstream os;
        os << "radial integration diverged near r = " << r;
        throw DivergedError(r, os.str());
      }
      r = (k + 1 == opt.substeps) ? target : r + dr;
    }
    store(i, target, s);
    bool ok = true;
    for (std::size_t c = 0; c < M; ++c)
      ok = ok && std::isfinite(val[c](i)) && std::isfinite(der[c](i)) && std::isfinite(cur[c](i));
    if (!ok) {
      std::ostringstream os;
      os << "radial integration diverged near r = " << target;
      throw DivergedError(grid.nodes(i - 1), os.str());
    }
  }

  std::array<RadialProfile, M> out;
  for (std::size_t c = 0; c < M; ++c)
    out[c] = RadialProfile(grid, std::move(val[c]), std::move(der[c]), std::move(cur[c]));
  return out;
}

}  // namespace

RadialProfile integrate_radial(double lambda, const RadialRhs& rhs, double w0,
                               const RadialGrid& grid, const IntegratorOptions& opt) {
  auto h = [&](double r, const Values<1>& w) {
    double v = rhs.cubic * w[0] * w[0] * w[0];
    if (rhs.potential) v += rhs.potential(r) * w[0];
    if (rhs.source) v += rhs.source(r);
    return Values<1>{v};
  };
  return integrate_y<1>({lambda}, h, {w0}, grid, opt)[0];
}

std::pair<RadialProfile, RadialProfile> integrate_radial_pair(
    double lambda1, double lambda2, const PairRhs& rhs, double u1_0, double u2_0,
    const RadialGrid& grid, const IntegratorOptions& opt) {
  auto h = [&](double r, const Values<2>& u) {
    return Values<2>{rhs.h1(r, u[0], u[1]), rhs.h2(r, u[0], u[1])};
  };
  auto out = integrate_y<2>({lambda1, lambda2}, h, {u1_0, u2_0}, grid, opt);
  return {std::move(out[0]), std::move(out[1])};
}

RadialProfile solve_scalar(double a, double mu, const RadialGrid& grid,
                           const IntegratorOptions& opt) {
  RadialRhs rhs;
  rhs.cubic = 1.0;
  return integrate_radial(mu, rhs, a, grid, opt);
}

// ---------------------------------------------------------------------------

WeightedNorm weighted_norm(const RadialProfile& w, int q) {
  if (q < 0) throw Error(ErrorKind::Domain, "weight exponent must be non-negative");
  WeightedNorm out;
  out.q = q;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double r = w.grid.nodes(i);
    const double v = std::pow(1.0 + r * r, 0.5 * q) * std::abs(w.values(i));
    if (v > out.value) {
      out.value = v;
      out.argmax_r = r;
    }
  }
  return out;
}

RadialProfile resample(const RadialProfile& p, const RadialGrid& target) {
  if (target.r_max() > p.grid.r_max() * (1.0 + 1e-14))
    throw Error(ErrorKind::Range, "target grid extends beyond the source grid");
  if (target == p.grid) return p;
  ProfileInterpolant ip(p);
  const auto n = target.size();
  Eigen::VectorXd v(n), d(n), c;
  if (p.has_curvature()) c.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v(i) = ip.eval(target.nodes(i), 0);
    d(i) = ip.eval(target.nodes(i), 1);
    if (p.has_curvature()) c(i) = ip.eval(target.nodes(i), 2);
  }
  return RadialProfile(target, std::move(v), std::move(d), std::move(c));
}

RadialProfile sample_profile(const RadialGrid& grid, const std::function<double(double)>& f,
                             const std::function<double(double)>& df,
                             const std::function<double(double)>& d2f) {
  const auto n = grid.size();
  Eigen::VectorXd v(n), d(n), c;
  if (d2f) c.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = grid.nodes(i);
    v(i) = f(r);
    d(i) = df ? df(r) : 0.0;
    if (d2f) c(i) = d2f(r);
  }
  return RadialProfile(grid, std::move(v), std::move(d), std::move(c));
}

double SmoothBump::eval(double r, int order) const {
  const double t = (r - center) / width;
  if (std::abs(t) >= 1.0) return 0.0;
  const double u = 1.0 / (1.0 - t * t);
  const double phi = amplitude * std::exp(1.0 - u);
  const double du = 2.0 * t * u * u;
  switch (order) {
    case 0: return phi;
    case 1: return -du * phi / width;
    default: {
      const double d2u = 2.0 * u * u + 8.0 * t * t * u * u * u;
      return (du * du - d2u) * phi / (width * width);
    }
  }
}

RadialProfile SmoothBump::sample(const RadialGrid& grid) const {
  return sample_profile(
      grid, [this](double r) { return eval(r, 0); }, [this](double r) { return eval(r, 1); },
      [this](double r) { return eval(r, 2); });
}

}  // namespace helmbif
