#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vpl/config.hpp"
#include "vpl/diagnostics.hpp"
#include "vpl/state.hpp"

namespace vpl {

struct InitialState {
  SystemState state;
  double amplitude = 0.0;  ///< after any positivity halvings
  int halvings = 0;
  std::vector<std::string> warnings;
};

/// Builds f0 for the named family, removes the global mass of each species,
/// the total momentum and the total energy (kinetic energy set to minus the
/// field energy), and halves the amplitude until mu + f0 > 0 on the grid.
/// Throws ConstructionError if 10 halvings are not enough.
///
///   single_mode         f_pm = +-eps cos(m x1) mu
///   two_mode            f_pm = eps (+-cos(m1 x1) + cos(m2 x1) (v1^2 - v2^2) / 2) mu
///   random_bandlimited  f_pm = eps p_pm(x, v) mu, p_pm a seeded random
///                       combination of spatial modes |m_i| <= band and
///                       velocity polynomials of degree <= 2, scaled to sup 1
InitialState make_initial_condition(const InitialCondition& descriptor, const PhaseGrid& grid);

/// Seeded smooth velocity field: a random quadratic polynomial times a
/// Gaussian with random centre (|c| <= 1) and width in [0.9, 1.3].
VelocityField random_velocity_field(const VelocityGrid& grid, std::uint64_t seed);

/// Seeded random species pair with spatial modes |m_i| <= 2 and velocity
/// profiles from random_velocity_field.
SpeciesPair random_species(const PhaseGrid& grid, std::uint64_t seed);

struct ExperimentOutcome {
  int exit_status = 0;  ///< 0 when every built-in check passed
  std::filesystem::path summary_path;
  std::filesystem::path csv_path;
  std::vector<std::string> failed_checks;
};

/// Runs the configured mode and writes into config.output_dir:
///   config.ini        echoed configuration
///   diagnostics.csv   time series (nonlinear and linearized modes)
///   summary.json      fits, drifts, checks
///   checkpoint_<step>.vpl  every checkpoint_every steps and at the end
/// Library errors are caught, recorded in summary.json and give exit status 2.
ExperimentOutcome run_experiment(const RunConfig& config);

/// Continues a nonlinear run from a checkpoint up to config.t_final.
ExperimentOutcome resume_experiment(const RunConfig& config, const std::filesystem::path& checkpoint);

/// Summary JSON schema version.
inline constexpr int kSummarySchemaVersion = 1;

}  // namespace vpl
