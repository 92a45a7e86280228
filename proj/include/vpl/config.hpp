#pragma once

// Run configuration. Text form is INI-like:
//
//   # comment
//   [physics]
//   gamma = -3
//   k = 10
//
// Keys are addressed as section.key (see config_keys()). Every violation is
// collected before ConfigError is thrown.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vpl/diagnostics.hpp"
#include "vpl/dynamics.hpp"
#include "vpl/weights.hpp"

namespace vpl {

enum class RunMode { nonlinear, linearized, operator_test };
std::string to_string(RunMode mode);

enum class InitialFamily { single_mode, two_mode, random_bandlimited };
std::string to_string(InitialFamily family);
InitialFamily parse_initial_family(const std::string& name);

struct InitialCondition {
  InitialFamily family = InitialFamily::single_mode;
  double amplitude = 1e-3;
  /// single_mode uses modes[0]; two_mode uses modes[0] and modes[1] (0 means
  /// spatially uniform); random_bandlimited uses modes[0] as the band limit.
  std::vector<int> modes{1, 2};
  std::uint64_t seed = 1;
};

inline constexpr double kLandauK0 = 10.0;
inline constexpr double kBoltzmannK0 = 17.0;

struct RunConfig {
  // physics
  Model model = Model::landau;
  double gamma = -3.0;
  double s = 0.5;
  double k = 10.0;
  double l = 1.0;
  // grid
  int dim_x = 1;
  int n_x = 16;
  int n_v = 16;
  double velocity_cutoff = 8.0;
  double box_length = kTwoPi;
  // time
  double dt = 1e-2;
  double t_final = 1.0;
  CollisionScheme scheme = CollisionScheme::strang_rk4;
  double picard_tol = 1e-10;
  int picard_max_iters = 50;
  // initial condition
  InitialCondition initial{};
  // run
  bool conservative_correction = true;
  bool linearized_mode = false;
  bool operator_test_mode = false;
  int diagnostics_every = 1;
  bool dissipation = true;
  int checkpoint_every = 0;  ///< steps; 0 disables
  std::uint64_t seed = 1;
  // fit
  double transient_fraction = 0.1;
  std::optional<double> fit_t_start;
  std::optional<double> fit_t_end;
  // output
  std::string output_dir = "vpl_out";

  RunMode mode() const;
  PhaseGrid grid() const;
  WeightSpec weights() const;
  TimeStepConfig step_config() const;
  /// Every violated constraint, empty when the configuration is valid.
  std::vector<std::string> violations() const;
};

/// Keys accepted by parse_config and apply_override, as section.key.
const std::vector<std::string>& config_keys();

/// Parses and validates. Throws ConfigError listing every violation.
RunConfig parse_config(const std::string& text);
/// Applies section.key = value pairs on top of `base`, then validates.
RunConfig apply_overrides(RunConfig base, const std::map<std::string, std::string>& overrides);
/// Canonical text form with every key; parse_config(echo(c)) reproduces c.
std::string echo_config(const RunConfig& config);

}  // namespace vpl
