#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vpl/dynamics.hpp"
#include "vpl/state.hpp"
#include "vpl/weights.hpp"

namespace vpl {

/// One row of the time-series output.
struct DiagnosticsRecord {
  double time = 0.0;
  std::uint64_t step = 0;
  double dt = 0.0;
  double mass_plus = 0.0;
  double mass_minus = 0.0;
  Vec3 momentum{};
  double kinetic_energy = 0.0;
  double field_energy = 0.0;
  double energy = 0.0;  ///< kinetic + field
  double energy_k = 0.0;
  double dissipation_k = 0.0;
  double norm_P = 0.0;
  double norm_I_minus_P = 0.0;
  double min_density_plus = 0.0;
  double min_density_minus = 0.0;
  double grad_phi_H3 = 0.0;
  double balance_plus = 0.0;
  double balance_minus = 0.0;
  int picard_iterations = 0;
  double picard_max_ratio = 0.0;
  double eps_op = 0.0;
};

/// CSV schema version and column names, in output order.
inline constexpr int kCsvSchemaVersion = 1;
const std::vector<std::string>& csv_columns();
void write_csv_header(std::ostream& out);
/// Values are printed with 17 significant digits, so rows round-trip exactly.
void write_csv_row(std::ostream& out, const DiagnosticsRecord& record);

/// Reads named columns from a CSV written by write_csv_header/row (or any CSV
/// with a header line). Throws FormatError on a missing column or bad number.
std::vector<std::vector<double>> read_csv_columns(std::istream& in, const std::vector<std::string>& names);

struct RecordOptions {
  WeightSpec weights = WeightSpec::landau(-3.0, 10.0);
  WeightLadder ladder{};
  bool dissipation = true;  ///< D_k is the most expensive entry
};

/// Fills every state-derived entry. Balance residuals and step metadata are
/// left for the caller.
DiagnosticsRecord measure(const SystemState& state, const RecordOptions& options);

// --- moment balance ----------------------------------------------------------

struct BalanceResidual {
  double plus = 0.0;
  double minus = 0.0;
};

/// || (a(next) - a(prev)) / dt + div_x (j(prev) + j(next)) / 2 ||_{L^2_x} per
/// species, with a = int f dv and j = int v f dv. The time difference is
/// centred, so a smooth run leaves an O(dt^2) residual.
BalanceResidual moment_balance_residual(const SystemState& prev, const SystemState& next, double dt);

// --- projections ---------------------------------------------------------------

/// Relative L^2 defects of the projection identities on one field, and the
/// ratio (||Pf||^2_k + ||(I-P)f||^2_k) / ||f||^2_k of the L^2_k equivalence.
struct ProjectionAlgebra {
  double p_idempotence = 0.0;       ///< ||P P f - P f|| / ||f||
  double pi_idempotence = 0.0;      ///< ||Pi Pi f - Pi f|| / ||f||
  double pi_kills_complement = 0.0; ///< ||Pi (I - P) f|| / ||f||
  double equivalence_ratio = 0.0;
};

ProjectionAlgebra projection_algebra(const PhaseGrid& grid, const SpeciesPair& f, double k);

// --- positivity ----------------------------------------------------------------

struct PositivityReport {
  double min_plus = 0.0;
  double min_minus = 0.0;
  std::size_t location_plus = 0;  ///< flat phase index of the minimum
  std::size_t location_minus = 0;
  bool negative() const { return min_plus < 0.0 || min_minus < 0.0; }
};

/// Minimum of mu + f_pm over the grid, per species.
PositivityReport positivity_monitor(const SystemState& state);

// --- decay fits ------------------------------------------------------------------

enum class FitMode { exponential, polynomial };
std::string to_string(FitMode mode);
FitMode parse_fit_mode(const std::string& name);

/// Without explicit bounds the window starts after `transient_fraction` of
/// the sampled time span and ends at the last sample.
struct FitWindow {
  std::optional<double> t_start;
  std::optional<double> t_end;
  double transient_fraction = 0.1;
};

struct DecayFit {
  FitMode mode = FitMode::exponential;
  /// Exponential: lambda in E ~ exp(-lambda t). Polynomial: slope in
  /// E ~ (1 + t)^slope.
  double rate = 0.0;
  double intercept = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::size_t samples = 0;
  double r_squared = 0.0;
};

inline constexpr std::size_t kMinFitSamples = 20;

/// Least squares of log E against t (exponential) or log(1 + t)
/// (polynomial). Throws FitError on fewer than kMinFitSamples samples in the
/// window or a non-positive sample.
DecayFit fit_decay(const std::vector<double>& times, const std::vector<double>& values, FitMode mode,
                   const FitWindow& window = {});

/// Whether values[i] is non-increasing (up to relative slack) for t >= t_start.
bool monotone_decreasing(const std::vector<double>& times, const std::vector<double>& values, double t_start,
                         double relative_slack = 0.0);

// --- linearized experiment -------------------------------------------------------

struct LinearizedExperimentConfig {
  double gamma = -3.0;
  double dt = 0.05;
  double t_final = 20.0;
  CollisionScheme scheme = CollisionScheme::picard_implicit;
  int record_every = 1;
  FitWindow window{};
};

struct LinearizedSeries {
  std::vector<double> time;
  std::vector<double> norm_P;          ///< ||P f||_{L^2_{x,v}}
  std::vector<double> norm_I_minus_P;  ///< ||(I - P) f||_{L^2_{x,v}}
  /// ||f||^2_{L^2_{x,v}} + ||grad phi||^2, the energy of the linearized system.
  std::vector<double> energy;
};

struct LinearizedExperimentResult {
  LinearizedSeries series;
  DecayFit exponential;
  DecayFit polynomial;
  bool fitted = false;  ///< false when the series is identically zero
};

/// Removes Pi f0, then evolves the linearized system and fits the energy
/// series in both modes.
LinearizedExperimentResult linearized_decay_experiment(const LinearizedExperimentConfig& config,
                                                       const PhaseGrid& grid, const SpeciesPair& initial);

}  // namespace vpl
