#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>

#include "helmbif/cli.hpp"

namespace helmbif::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

class RunDir {
 public:
  RunDir(const std::string& dir, std::string command) : dir_(dir), command_(std::move(command)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::Config, "cannot create output directory '" + dir + "'");
  }

  std::ofstream open(const std::string& name) {
    std::ofstream f(dir_ / name);
    if (!f) throw Error(ErrorKind::Config, "cannot write '" + (dir_ / name).string() + "'");
    f.precision(17);
    files_.push_back(name);
    return f;
  }

  void write_json(const std::string& name, const io::Json& j) { open(name) << j.dump(2) << '\n'; }

  void manifest(const RunConfig& c, int exit_code, const std::string& message) {
    io::Json m;
    m["command"] = command_;
    m["exit_code"] = exit_code;
    m["status"] = exit_code == Ok ? "ok" : "failed";
    m["message"] = message;
    m["config"] = to_json(c);
    m["files"] = files_;
    std::ofstream f(dir_ / "manifest.json");
    f << m.dump(2) << '\n';
  }

 private:
  fs::path dir_;
  std::string command_;
  std::vector<std::string> files_;
};

RadialGrid config_grid(const RunConfig& c) {
  return RadialGrid::uniform(c.grid.r_max, static_cast<Eigen::Index>(c.grid.nodes));
}

SolveOptions solve_options(const RunConfig& c) {
  SolveOptions o;
  o.tolerance = c.tol.phase;
  return o;
}

std::vector<int> k_values(const RunConfig& c) {
  std::vector<int> ks;
  for (int k = c.k_min; k <= c.k_max; ++k) ks.push_back(k);
  return ks;
}

// ---------------------------------------------------------------------------

int cmd_solve_scalar(const RunConfig& c, RunDir& dir, std::ostream& log) {
  const RadialProfile u0 = solve_scalar(c.u0_init, c.mu, config_grid(c));
  const ScalarConstants sc = sigma_tau_constants(u0, c.mu);
  {
    auto f = dir.open("u0.csv");
    io::write_profile_csv(f, u0);
  }
  dir.write_json("u0.json", io::to_json(u0));
  io::Json ff;
  ff["c0"] = sc.c0;
  ff["sigma0"] = sc.sigma0();
  ff["tau0"] = sc.tau0();
  ff["tau1_default"] = std::fmod(sc.tau0() + 0.5 * kPi, kPi);
  ff["sigma"] = io::to_json(sc.sigma);
  ff["tau"] = io::to_json(sc.tau);
  dir.write_json("farfield.json", ff);
  log << "c0 = " << sc.c0 << "  sigma0 = " << sc.sigma0() << "  tau0 = " << sc.tau0() << '\n';
  return Ok;
}

int cmd_phase(const RunConfig& c, RunDir& dir, std::ostream& log) {
  const RadialProfile u0 = solve_scalar(c.u0_init, c.mu, config_grid(c));
  auto csv = dir.open("phase.csv");
  csv << "b,phase_total,phase_mod_pi,winding,amplitude,tail_bound,fit_phase_total\n";
  io::Json all = io::Json::array();
  for (double b : c.couplings) {
    const RadialProfile g = scaled_square(u0, b);
    const FarField ff = asymptotic_phase(pruefer_solve(c.nu, g), g);
    RadialRhs rhs;
    rhs.potential = squared_potential(u0, b);
    const FarField fit = farfield_fit(integrate_radial(c.nu, rhs, 1.0, u0.grid), c.nu);
    csv << io::format_double(b) << ',' << io::format_double(ff.phase_total()) << ','
        << io::format_double(ff.phase_mod_pi) << ',' << ff.winding << ','
        << io::format_double(ff.amplitude) << ',' << io::format_double(ff.tail_residual_bound)
        << ',' << io::format_double(fit.phase_total()) << '\n';
    all.push_back({{"b", b}, {"pruefer", io::to_json(ff)}, {"fit", io::to_json(fit)}});
    log << "b = " << b << "  phase = " << ff.phase_total() << '\n';
  }
  dir.write_json("phase.json", all);
  return Ok;
}

int cmd_ladder(const RunConfig& c, RunDir& dir, std::ostream& log) {
  const RadialProfile u0 = solve_scalar(c.u0_init, c.mu, config_grid(c));
  const SolveOptions so = solve_options(c);
  const std::vector<int> ks = k_values(c);

  // One work item per omega; results are gathered in input order.
  std::vector<std::future<std::vector<BifurcationPoint>>> jobs;
  for (double w : c.omega_sweep)
    jobs.push_back(std::async(std::launch::async, [&, w] {
      std::vector<BifurcationPoint> pts;
      for (int k : ks) pts.push_back(solve_bk(w, k, c.nu, u0, so));
      return pts;
    }));
  std::vector<BifurcationPoint> pts;
  for (auto& j : jobs)
    for (auto& p : j.get()) pts.push_back(std::move(p));
  std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.omega + a.k * kPi < b.omega + b.k * kPi;
  });

  {
    auto f = dir.open("ladder.csv");
    io::write_ladder_csv(f, pts);
  }
  auto diag = dir.open("diagonal.csv");
  diag << "k,omega,b_k,b_tilde\n";
  io::Json j = io::Json::array();
  for (const auto& p : pts) {
    io::Json row = io::to_json(p, false);
    if (p.b != -1.0) {
      const double bt = mobius_diagonal(p.b);
      if (bt > -1.0) {
        diag << p.k << ',' << io::format_double(p.omega) << ',' << io::format_double(p.b) << ','
             << io::format_double(bt) << '\n';
        row["b_tilde"] = bt;
      }
    }
    j.push_back(std::move(row));
  }
  dir.write_json("ladder.json", j);
  log << pts.size() << " ladder points\n";
  return Ok;
}

int cmd_branch(const RunConfig& c, RunDir& dir, std::ostream& log) {
  const RadialProfile u0 = solve_scalar(c.u0_init, c.mu, config_grid(c));
  const SolveOptions so = solve_options(c);
  BifurcationPoint origin;
  if (c.mode == Mode::Diagonal) {
    auto p = diagonal_points(c.omega, c.k, c.mu, u0, so);
    if (!p) {
      std::ostringstream os;
      os << "no diagonal bifurcation point for k = " << c.k << " (b~ <= -1)";
      throw Error(ErrorKind::Domain, os.str());
    }
    origin = std::move(*p);
  } else {
    origin = solve_bk(c.omega, c.k, c.nu, u0, so);
  }
  SystemParams sp;
  sp.mu = c.mu;
  sp.nu = c.mode == Mode::Diagonal ? c.mu : c.nu;
  sp.omega = c.omega;
  sp.tau1 = c.tau1;
  sp.mode = c.mode;
  const FixedPointProblem problem(u0, sp);

  SwitchOptions sw;
  sw.epsilon = c.branch.epsilon;
  sw.newton.tolerance = c.tol.newton;
  const SystemState start = branch_switch(origin, problem, sw);

  ContinuationOptions co;
  co.max_steps = c.branch.max_steps;
  co.newton.tolerance = c.tol.newton;
  Branch br = continue_branch(start, problem, c.branch.window, c.branch.step, co);
  br.phase_label = c.omega + c.k * kPi;
  br.origin = origin;

  {
    auto f = dir.open("branch.csv");
    io::write_branch_csv(f, br);
  }
  dir.write_json("branch.json", io::to_json(br, c.branch.profile_stride));
  {
    auto f = dir.open("diagram.dat");
    io::write_diagram(f, br);
  }
  dir.write_json("origin.json", io::to_json(origin, false));
  log << br.points.size() << " branch points, termination " << to_string(br.termination) << '\n';
  return br.termination == Termination::NewtonFailed ? NumericalFailure : Ok;
}

int cmd_spectrum(const RunConfig& c, RunDir& dir, std::ostream& log) {
  const RadialProfile u0 = solve_scalar(c.u0_init, c.mu, config_grid(c));
  NystromOptions no;
  no.tolerance = c.tol.spectral;
  no.solve = solve_options(c);
  const SpectralReport rep =
      nystrom_spectrum(c.omega, c.nu, u0, static_cast<Eigen::Index>(c.spectrum_nodes), no);
  dir.write_json("spectrum.json", io::to_json(rep));
  auto csv = dir.open("eigenvalues.csv");
  csv << "index,re,im\n";
  for (Eigen::Index i = 0; i < rep.eigenvalues.size(); ++i)
    csv << i << ',' << io::format_double(rep.eigenvalues(i).real()) << ','
        << io::format_double(rep.eigenvalues(i).imag()) << '\n';
  log << "spectral match over |k| <= " << rep.k_max << ": " << (rep.ok ? "ok" : "FAILED") << '\n';
  return rep.ok ? Ok : InvariantFailure;
}

// ---------------------------------------------------------------------------
// Invariant suite

struct Invariant {
  std::string name;
  bool passed = false;
  bool vacuous = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

io::Json to_json(const Invariant& v) {
  return {{"name", v.name},         {"passed", v.passed},       {"vacuous", v.vacuous},
          {"measured", v.measured}, {"tolerance", v.tolerance}, {"detail", v.detail}};
}

Invariant vacuous(std::string name, std::string why) {
  Invariant v;
  v.name = std::move(name);
  v.passed = true;
  v.vacuous = true;
  v.detail = std::move(why);
  return v;
}

// Sixth-order central differences on a uniform grid.
double d1(const Eigen::VectorXd& q, Eigen::Index i, double h) {
  return (45 * (q(i + 1) - q(i - 1)) - 9 * (q(i + 2) - q(i - 2)) + (q(i + 3) - q(i - 3))) /
         (60 * h);
}
double d2(const Eigen::VectorXd& q, Eigen::Index i, double h) {
  return (2 * (q(i - 3) + q(i + 3)) - 27 * (q(i - 2) + q(i + 2)) + 270 * (q(i - 1) + q(i + 1)) -
          490 * q(i)) /
         (180 * h * h);
}

std::vector<Invariant> convolution_checks(double lambda) {
  const RadialGrid g = RadialGrid::uniform(30.0, 3001);
  const std::vector<SmoothBump> bumps{{3.0, 2.0, 1.0}, {6.0, 4.0, -0.7}, {0.0, 2.0, 1.0}};
  double res = 0.0, ratio = 0.0;
  const double h = g.step();
  for (const auto& bump : bumps) {
    const RadialProfile f = bump.sample(g);
    const RadialProfile w = convolve({lambda, KernelKind::Cos}, f);
    for (Eigen::Index i = 3; i < g.size() - 3; ++i) {
      const double r = g.nodes(i);
      const double lap = d2(w.values, i, h) + 2.0 / r * d1(w.values, i, h);
      res = std::max(res, std::abs(-lap - lambda * w.values(i) - f.values(i)));
    }
    const double kappa = std::sqrt(lambda);
    const double amp = std::sqrt(kPi / 2) * fourier_hat(f, kappa).value;
    const double bound = 2.0 / kappa * weighted_norm(f, 3).value;
    for (Eigen::Index i = g.size() / 2; i < g.size(); ++i) {
      const double r = g.nodes(i);
      const double delta = r * r * (w.values(i) - amp * std::cos(kappa * r) / r);
      ratio = std::max(ratio, std::abs(delta) / bound);
    }
  }
  Invariant a{"convolution_residual", res <= 1e-6, false, res, 1e-6, "sup |-Lap w - lambda w - f|"};
  Invariant b{"farfield_constant", ratio <= 1.0, false, ratio, 1.0,
              "max |r^2 delta_f| / (2 ||f||_X3 / sqrt(lambda))"};
  return {a, b};
}

int cmd_verify(const RunConfig& c, RunDir& dir, std::ostream& log) {
  const RadialGrid grid = config_grid(c);
  const RadialProfile u0 = solve_scalar(c.u0_init, c.mu, grid);
  const SolveOptions so = solve_options(c);
  const std::vector<int> ks = k_values(c);
  std::vector<Invariant> out;

  auto guarded = [&](const std::string& name, double tol, auto&& body) {
    try {
      out.push_back(body());
    } catch (const Error& e) {
      out.push_back({name, false, false, std::numeric_limits<double>::quiet_NaN(), tol,
                     std::string(to_string(e.kind())) + ": " + e.what()});
    }
  };

  guarded("free_solution", 1e-8, [&] {
    RadialRhs rhs;
    const RadialProfile w = integrate_radial(c.mu, rhs, 1.0, grid);
    const double kappa = std::sqrt(c.mu);
    double err = 0.0;
    for (Eigen::Index i = 1; i < grid.size(); ++i) {
      const double r = grid.nodes(i);
      err = std::max(err, std::abs(w.values(i) - std::sin(kappa * r) / (kappa * r)));
    }
    return Invariant{"free_solution", err <= 1e-8, false, err, 1e-8, "max |w - sin(kr)/(kr)|"};
  });

  for (auto& v : convolution_checks(c.nu)) out.push_back(v);

  guarded("phase_cross_validation", c.tol.invariant, [&] {
    double worst = 0.0;
    for (double b : c.couplings) {
      const RadialProfile g = scaled_square(u0, b);
      const double pr = asymptotic_phase(pruefer_solve(c.nu, g), g).phase_total();
      RadialRhs rhs;
      rhs.potential = squared_potential(u0, b);
      const double fit = farfield_fit(integrate_radial(c.nu, rhs, 1.0, grid), c.nu).phase_total();
      worst = std::max(worst, std::abs(pr - fit));
    }
    return Invariant{"phase_cross_validation", worst <= c.tol.invariant, false, worst,
                     c.tol.invariant, "max |pruefer - fit| over couplings"};
  });

  guarded("monotonicity", 0.0, [&] {
    std::vector<double> bs = c.couplings;
    std::sort(bs.begin(), bs.end());
    bool ok = true;
    double prev = -INFINITY, min_gap = INFINITY;
    for (double b : bs) {
      const double ph = phase_of_coupling(b, c.nu, u0);
      if (b != 0 && (ph > 0) != (b > 0)) ok = false;
      if (ph <= prev) ok = false;
      if (std::isfinite(prev)) min_gap = std::min(min_gap, ph - prev);
      prev = ph;
    }
    return Invariant{"monotonicity", ok, false, std::isfinite(min_gap) ? min_gap : 0.0, 0.0,
                     "smallest phase increment over sorted couplings"};
  });

  guarded("ladder_anchor", 1e-8, [&] {
    const double b0 = solve_bk(0.0, 0, c.nu, u0, so).b;
    return Invariant{"ladder_anchor", std::abs(b0) <= 1e-8, false, std::abs(b0), 1e-8, "|b_0(0)|"};
  });

  if (ks.empty()) {
    out.push_back(vacuous("kernel_equivalence", "empty k_range"));
    out.push_back(vacuous("nystrom_spectrum", "empty k_range"));
    out.push_back(vacuous("wronskian_identity", "empty k_range"));
  } else {
    guarded("kernel_equivalence", c.tol.invariant, [&] {
      double worst = 0.0;
      for (int k : ks) {
        const BifurcationPoint p = solve_bk(c.omega, k, c.nu, u0, so);
        const FarField ff = farfield_fit(p.eigenfunction, c.nu);
        worst = std::max(worst, std::abs(ff.phase_total() - (c.omega + k * kPi)));
      }
      return Invariant{"kernel_equivalence", worst <= c.tol.invariant, false, worst,
                       c.tol.invariant, "max |fitted phase - (omega + k pi)|"};
    });

    if (std::sin(c.omega) < 1e-3) {
      out.push_back(vacuous("nystrom_spectrum", "omega too close to 0 for the resolvent form"));
    } else {
      guarded("nystrom_spectrum", c.tol.spectral, [&] {
        NystromOptions no;
        no.k_max = std::max(std::abs(c.k_min), std::abs(c.k_max));
        no.tolerance = c.tol.spectral;
        no.solve = so;
        const SpectralReport rep = nystrom_spectrum(
            c.omega, c.nu, u0, static_cast<Eigen::Index>(c.spectrum_nodes), no);
        double worst = 0.0;
        std::ostringstream os;
        for (const auto& m : rep.matches) {
          worst = std::max(worst, m.resolved ? m.relative_mismatch : INFINITY);
          os << "k=" << m.k << (m.resolved ? "" : " unresolved") << " gap=" << m.relative_mismatch
             << "; ";
        }
        os << rep.unmatched.size() << " unmatched";
        dir.write_json("verify_spectrum.json", io::to_json(rep));
        return Invariant{"nystrom_spectrum", rep.ok, false, worst, c.tol.spectral, os.str()};
      });
    }

    guarded("wronskian_identity", 1e-4, [&] {
      const RadialGrid fine = RadialGrid::uniform(c.grid.r_max, 2 * c.grid.nodes - 1);
      const RadialProfile uf = solve_scalar(c.u0_init, c.mu, fine);
      double worst = 0.0;
      for (int k : ks) {
        const BifurcationPoint p = solve_bk(c.omega, k, c.nu, uf, so);
        const RadialProfile v = generalized_kernel_solution(p, uf);
        worst = std::max(worst, wronskian_check(p.eigenfunction, v, uf).relative_l2);
      }
      return Invariant{"wronskian_identity", worst <= 1e-4, false, worst, 1e-4,
                       "relative L2 error of q' on the twice refined grid"};
    });
  }

  bool all = true;
  io::Json arr = io::Json::array();
  for (const auto& v : out) {
    all = all && v.passed;
    arr.push_back(to_json(v));
    log << (v.passed ? "PASS " : "FAIL ") << v.name << "  measured=" << v.measured
        << "  tol=" << v.tolerance << (v.detail.empty() ? "" : "  (" + v.detail + ")") << '\n';
  }
  dir.write_json("verify.json", {{"passed", all}, {"invariants", arr}});
  return all ? Ok : InvariantFailure;
}

}  // namespace

int run_command(const std::string& command, const RunConfig& c, std::ostream& log) {
  using Fn = int (*)(const RunConfig&, RunDir&, std::ostream&);
  static const std::vector<std::pair<std::string, Fn>> table{
      {"solve-scalar", cmd_solve_scalar}, {"phase", cmd_phase},       {"ladder", cmd_ladder},
      {"branch", cmd_branch},             {"spectrum", cmd_spectrum}, {"verify", cmd_verify}};
  auto it = std::find_if(table.begin(), table.end(), [&](auto& e) { return e.first == command; });
  if (it == table.end()) throw Error(ErrorKind::Config, "unknown command '" + command + "'");
  validate(c);
  RunDir dir(c.out, command);
  try {
    const int code = it->second(c, dir, log);
    dir.manifest(c, code, "");
    return code;
  } catch (const Error& e) {
    dir.manifest(c, e.kind() == ErrorKind::Config ? ConfigError : NumericalFailure, e.what());
    throw;
  }
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Bifurcation numerics for the radial cubic Helmholtz system"};
  app.require_subcommand(1, 1);
  Overrides o;
  std::string command;
  const std::pair<const char*, const char*> subcommands[] = {
      {"solve-scalar", "scalar profile u0 and its far-field constants"},
      {"phase", "Pruefer phase against the far-field fit"},
      {"ladder", "bifurcation couplings b_k(omega) and diagonal points"},
      {"branch", "branch switch and continuation from b_k"},
      {"spectrum", "Nystrom eigenvalues against 1/b_k"},
      {"verify", "invariant suite"}};
  for (const auto& [name, about] : subcommands) {
    auto* sub = app.add_subcommand(name, about);
    sub->add_option("--config", o.config, "JSON config file");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--k", o.k, "branch index k");
    sub->add_option("--omega", o.omega, "asymptotic phase omega in [0, pi)");
    sub->add_option("--mode", o.mode, "semitrivial or diagonal");
    sub->add_option("--tol", o.tol, "solver tolerance (phase and Newton)");
    sub->callback([&command, name] { command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return ConfigError;
  }
  try {
    const RunConfig c = resolve_config(o);
    return run_command(command, c, std::cout);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return e.kind() == ErrorKind::Config ? ConfigError : NumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return NumericalFailure;
  }
}

}  // namespace helmbif::cli
