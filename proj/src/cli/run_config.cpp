#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "helmbif/cli.hpp"

namespace helmbif::cli {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(ErrorKind::Config, msg);
}

void check_keys(const io::Json& j, const std::set<std::string>& allowed, const std::string& where) {
  require(j.is_object(), where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    require(allowed.count(it.key()) > 0, "unknown key '" + it.key() + "' in " + where);
}

template <typename T>
void read(const io::Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const io::Json::exception& e) {
    throw Error(ErrorKind::Config, std::string("bad value for '") + key + "': " + e.what());
  }
}

Mode mode_from_string(const std::string& s) {
  if (s == "semitrivial") return Mode::Semitrivial;
  if (s == "diagonal") return Mode::Diagonal;
  throw Error(ErrorKind::Config, "mode must be semitrivial or diagonal, got '" + s + "'");
}

}  // namespace

void validate(const RunConfig& c) {
  constexpr double pi = std::numbers::pi;
  require(std::isfinite(c.mu) && c.mu > 0, "mu must be positive");
  require(std::isfinite(c.nu) && c.nu > 0, "nu must be positive");
  require(std::isfinite(c.u0_init) && c.u0_init != 0, "u0_init must be nonzero");
  require(c.omega >= 0 && c.omega < pi, "omega must lie in [0, pi)");
  if (c.tau1) require(*c.tau1 >= 0 && *c.tau1 < pi, "tau1 must lie in [0, pi)");
  for (double w : c.omega_sweep) require(w >= 0 && w < pi, "omega_sweep entries must lie in [0, pi)");
  for (double b : c.couplings) require(std::isfinite(b), "couplings must be finite");
  require(std::isfinite(c.grid.r_max) && c.grid.r_max > 0, "grid.r_max must be positive");
  require(c.grid.nodes >= 9, "grid.nodes must be at least 9");
  require(c.spectrum_nodes >= 9, "spectrum_nodes must be at least 9");
  require(c.tol.phase > 0 && c.tol.newton > 0 && c.tol.spectral > 0 && c.tol.invariant > 0,
          "tolerances must be positive");
  require(c.branch.epsilon > 0 && c.branch.window > 0 && c.branch.step > 0,
          "branch epsilon, window and step must be positive");
  require(c.branch.max_steps > 0, "branch.max_steps must be positive");
  require(c.branch.profile_stride >= 0, "branch.profile_stride must be nonnegative");
  require(c.mode != Mode::Diagonal || c.mu == c.nu, "diagonal mode needs mu == nu");
  require(!c.out.empty(), "output directory must be set");
}

io::Json to_json(const RunConfig& c) {
  io::Json j;
  j["mu"] = c.mu;
  j["nu"] = c.nu;
  j["u0_init"] = c.u0_init;
  j["omega"] = c.omega;
  j["tau1"] = c.tau1 ? io::Json(*c.tau1) : io::Json(nullptr);
  j["k_range"] = {c.k_min, c.k_max};
  j["k"] = c.k;
  j["mode"] = to_string(c.mode);
  j["grid"] = {{"r_max", c.grid.r_max}, {"nodes", c.grid.nodes}};
  j["tolerances"] = {{"phase", c.tol.phase},
                     {"newton", c.tol.newton},
                     {"spectral", c.tol.spectral},
                     {"invariant", c.tol.invariant}};
  j["branch"] = {{"epsilon", c.branch.epsilon},
                 {"window", c.branch.window},
                 {"step", c.branch.step},
                 {"max_steps", c.branch.max_steps},
                 {"profile_stride", c.branch.profile_stride}};
  j["spectrum_nodes"] = c.spectrum_nodes;
  j["omega_sweep"] = c.omega_sweep;
  j["couplings"] = c.couplings;
  j["out"] = c.out;
  return j;
}

RunConfig config_from_json(const io::Json& j) {
  check_keys(j,
             {"mu", "nu", "u0_init", "omega", "tau1", "k_range", "k", "mode", "grid", "tolerances",
              "branch", "spectrum_nodes", "omega_sweep", "couplings", "out"},
             "config");
  RunConfig c;
  read(j, "mu", c.mu);
  read(j, "nu", c.nu);
  read(j, "u0_init", c.u0_init);
  read(j, "omega", c.omega);
  if (j.contains("tau1") && !j["tau1"].is_null()) {
    double t = 0;
    read(j, "tau1", t);
    c.tau1 = t;
  }
  if (j.contains("k_range")) {
    const auto& kr = j["k_range"];
    require(kr.is_array() && kr.size() == 2, "k_range must be [k_min, k_max]");
    c.k_min = kr[0].get<int>();
    c.k_max = kr[1].get<int>();
  }
  read(j, "k", c.k);
  if (j.contains("mode")) {
    std::string m;
    read(j, "mode", m);
    c.mode = mode_from_string(m);
  }
  if (j.contains("grid")) {
    check_keys(j["grid"], {"r_max", "nodes"}, "grid");
    read(j["grid"], "r_max", c.grid.r_max);
    read(j["grid"], "nodes", c.grid.nodes);
  }
  if (j.contains("tolerances")) {
    const auto& t = j["tolerances"];
    check_keys(t, {"phase", "newton", "spectral", "invariant"}, "tolerances");
    read(t, "phase", c.tol.phase);
    read(t, "newton", c.tol.newton);
    read(t, "spectral", c.tol.spectral);
    read(t, "invariant", c.tol.invariant);
  }
  if (j.contains("branch")) {
    const auto& b = j["branch"];
    check_keys(b, {"epsilon", "window", "step", "max_steps", "profile_stride"}, "branch");
    read(b, "epsilon", c.branch.epsilon);
    read(b, "window", c.branch.window);
    read(b, "step", c.branch.step);
    read(b, "max_steps", c.branch.max_steps);
    read(b, "profile_stride", c.branch.profile_stride);
  }
  read(j, "spectrum_nodes", c.spectrum_nodes);
  read(j, "omega_sweep", c.omega_sweep);
  read(j, "couplings", c.couplings);
  read(j, "out", c.out);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open config file '" + path + "'");
  io::Json j;
  try {
    j = io::Json::parse(in);
  } catch (const io::Json::parse_error& e) {
    throw Error(ErrorKind::Config, "config file '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

RunConfig resolve_config(const Overrides& o) {
  RunConfig c = o.config ? load_config(*o.config) : RunConfig{};
  if (o.out) c.out = *o.out;
  if (o.k) c.k = *o.k;
  if (o.omega) c.omega = *o.omega;
  if (o.mode) c.mode = mode_from_string(*o.mode);
  if (o.tol) {
    c.tol.newton = *o.tol;
    c.tol.phase = *o.tol;
  }
  validate(c);
  return c;
}

}  // namespace helmbif::cli
