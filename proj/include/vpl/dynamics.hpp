#pragma once

// Time integration of the perturbation system
//
//   d_t f_pm + v . grad_x f_pm -/+ grad_x phi . grad_v f_pm +/- grad_x phi . v mu
//     = Q(f+ + f-, mu) + Q(2 mu + f+ + f-, f_pm)
//
// by Strang splitting: transport(dt/2), field(dt/2), collision(dt),
// field(dt/2), transport(dt/2).

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vpl/landau.hpp"
#include "vpl/state.hpp"

namespace vpl {

enum class CollisionScheme { strang_rk4, picard_implicit };

std::string to_string(CollisionScheme scheme);
CollisionScheme parse_collision_scheme(const std::string& name);

struct TimeStepConfig {
  double dt = 1e-2;
  CollisionScheme scheme = CollisionScheme::strang_rk4;
  double picard_tol = 1e-10;
  int picard_max_iters = 50;
  bool conservative_correction = true;
  /// Drop the quadratic terms (linearized system).
  bool linearized = false;
  bool collisions = true;
  bool field = true;
  /// Shrink dt to the field-step stability bound, re-estimated every 10 steps.
  bool adaptive_dt = false;
  /// Inner linear solver of the implicit collision update.
  double gmres_rel_tol = 1e-13;
  int gmres_max_iters = 400;
  /// Where to write the last finite state if the run blows up.
  std::optional<std::filesystem::path> dump_path;

  void validate() const;
};

struct PicardReport {
  int iterations = 0;
  /// L^2 norm of successive iterate differences.
  std::vector<double> differences;
  /// differences[m + 1] / differences[m]
  std::vector<double> contraction_ratios;
  int max_linear_iterations = 0;
  double max_ratio() const;
};

struct StepReport {
  double dt = 0.0;
  std::optional<PicardReport> picard;
  /// min over the grid of mu + f_pm after the step.
  double min_density = 0.0;
};

using StepObserver = std::function<void(const SystemState&, const StepReport&)>;

/// Exact free streaming: spatial Fourier modes pick up exp(-i xi . v dt).
/// Spatial Nyquist modes are removed.
SystemState transport_step(const SystemState& state, double dt);

/// RK4 with phi frozen. `phi` may be any external potential.
SpeciesPair field_step(const PhaseGrid& grid, const SpeciesPair& f, const SpatialField& phi, double dt,
                       bool linearized = false);
SystemState field_step(const SystemState& state, double dt, bool linearized = false);

/// Pure collision update over dt with either scheme of `config`.
SystemState collision_step(const SystemState& state, double dt, const TimeStepConfig& config,
                           const LandauOperator& op, PicardReport* report = nullptr);

/// Largest dt for which the field-step RK4 is comfortably stable:
/// 0.5 / (max |grad phi| * max velocity wavenumber).
double field_stable_dt(const SystemState& state);

/// Advective CFL number dt * max|v| * max spatial wavenumber.
double transport_cfl(const PhaseGrid& grid, double dt);

/// Owns the workspaces of a run. `op` may be null when collisions are off.
class Integrator {
 public:
  Integrator(const PhaseGrid& grid, std::shared_ptr<const LandauOperator> op, TimeStepConfig config);
  ~Integrator();

  const TimeStepConfig& config() const { return config_; }

  /// One Strang step of size dt (state clock advanced by dt).
  StepReport step(SystemState& state, double dt);
  /// Steps until state.time() reaches t_final; the last step is shortened if
  /// needed. Throws NumericalBlowupError on non-finite values.
  void advance(SystemState& state, double t_final, const StepObserver& observer = {});

  /// Warnings raised so far (CFL advisories, mean-charge warnings).
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  void warn(const std::string& message);

  PhaseGrid grid_;
  std::shared_ptr<const LandauOperator> op_;
  TimeStepConfig config_;
  std::vector<std::string> warnings_;
};

SystemState advance(SystemState state, double t_final, const TimeStepConfig& config,
                    std::shared_ptr<const LandauOperator> op, const StepObserver& observer = {});

/// min over the grid of mu + f_pm.
double min_total_density(const SystemState& state);

}  // namespace vpl
