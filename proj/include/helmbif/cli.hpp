#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "helmbif/continuation.hpp"
#include "helmbif/io.hpp"

namespace helmbif::cli {

enum ExitCode : int { Ok = 0, ConfigError = 1, NumericalFailure = 2, InvariantFailure = 3 };

struct GridConfig {
  double r_max = 200.0;
  long nodes = 2001;
};

struct Tolerances {
  double phase = 1e-10;      // b_k root solve, on the phase
  double newton = 1e-10;     // fixed-point defect, sup norm
  double spectral = 1e-3;    // Nystrom relative mismatch
  double invariant = 1e-4;   // phase cross-validation and kernel equivalence
};

struct BranchConfig {
  double epsilon = 1e-3;
  double window = 0.2;  // arclength budget
  double step = 0.1;
  int max_steps = 1000;
  int profile_stride = 0;
};

struct RunConfig {
  double mu = 1.0;
  double nu = 1.0;
  double u0_init = 1.0;
  double omega = 1.5707963267948966;
  std::optional<double> tau1;
  int k_min = -1;  // empty range when k_min > k_max
  int k_max = 1;
  int k = 0;       // branch origin
  Mode mode = Mode::Semitrivial;
  GridConfig grid;
  Tolerances tol;
  BranchConfig branch;
  long spectrum_nodes = 1000;
  std::vector<double> omega_sweep{0.0, 0.5235987755982988, 1.0471975511965976,
                                  1.5707963267948966, 2.0943951023931953, 2.6179938779914944};
  std::vector<double> couplings{-10.0, -1.0, 0.0, 1.0, 10.0};
  std::string out = "run";
};

/// Throws Error(Config) on a violated invariant.
void validate(const RunConfig& c);

io::Json to_json(const RunConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig config_from_json(const io::Json& j);
RunConfig load_config(const std::string& path);

struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<int> k;
  std::optional<double> omega;
  std::optional<std::string> mode;
  std::optional<double> tol;  // newton and phase tolerances
};

RunConfig resolve_config(const Overrides& o);

/// Subcommands: solve-scalar, phase, ladder, branch, spectrum, verify.
/// Writes under c.out with a manifest.json and returns the exit code.
int run_command(const std::string& command, const RunConfig& c, std::ostream& log);

/// Parses argv, runs and maps every failure to an exit code.
int main_entry(int argc, char** argv);

}  // namespace helmbif::cli
