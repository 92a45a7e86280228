#pragma once

// Polynomial velocity weights w(a, b) = <v>^{k - p a - q b + r} indexed by the
// spatial (a = |alpha|) and velocity (b = |beta|) derivative orders, the
// space-velocity exponential weight, and the weighted energy and dissipation
// norms built from them.
//
//   Landau:    q = 4 - gamma,             p = 3,             r = 2q + 6
//   Boltzmann: q = 6s - 3(gamma - 1),     p = q + gamma - 1, r = 2q + 6

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vpl/grid.hpp"
#include "vpl/state.hpp"

namespace vpl {

enum class Model { landau, boltzmann };

std::string to_string(Model model);
Model parse_model(const std::string& name);

struct WeightSpec {
  Model model = Model::landau;
  double gamma = 0.0;
  double s = 0.5;  ///< angular singularity order, Boltzmann only
  double k = 10.0;
  double q = 0.0;
  double p = 0.0;
  double r = 0.0;

  /// r = 2q + r_offset; r_offset = 6 is the consistent choice.
  static WeightSpec landau(double gamma, double k, double r_offset = 6.0);
  static WeightSpec boltzmann(double gamma, double s, double k, double r_offset = 6.0);
  /// Exponent kappa of the product inequalities: 2 (Landau) or 4s (Boltzmann).
  double kappa() const { return model == Model::landau ? 2.0 : 4.0 * s; }
  /// Weight gain per derivative order: 3 (Landau) or 6s (Boltzmann).
  double order_gain() const { return model == Model::landau ? 3.0 : 6.0 * s; }
};

/// k - p a - q b + r. Throws OutOfRangeError unless a, b >= 0 and a + b <= 2.
double weight_exponent(const WeightSpec& spec, int a, int b);
double weight_value(const WeightSpec& spec, const Vec3& v, int a, int b);
VelocityField weight_field(const WeightSpec& spec, const VelocityGrid& grid, int a, int b);

/// A with grad_v(w^2) = A v / <v>^2 w^2, i.e. twice the weight exponent.
double exp_weight_constant(const WeightSpec& spec, int a, int b);
/// exp(sign * A phi(x) / <v>^2) on the phase grid.
PhaseField exp_weight_field(const WeightSpec& spec, const PhaseGrid& grid, int a, int b, const SpatialField& phi,
                            double sign);

// --- inequality suite --------------------------------------------------------

struct InequalityResult {
  std::string name;
  std::size_t checks = 0;
  std::size_t failures = 0;
  /// min over checks of log(rhs) - log(lhs); negative means violated.
  double worst_log_margin = 0.0;
  bool passed() const { return failures == 0; }
};

struct InequalityReport {
  WeightSpec spec;
  std::vector<InequalityResult> results;
  bool all_passed() const;
  const InequalityResult& find(const std::string& name) const;
};

/// Names of the checked inequalities.
inline constexpr const char* kVelocityOrderGain = "velocity_order_gain";
inline constexpr const char* kSpatialOrderGain = "spatial_order_gain";
inline constexpr const char* kOrderExchange = "order_exchange";
inline constexpr const char* kWeightFloor = "weight_floor_k_plus_6";
inline constexpr const char* kInterpolation = "interpolation";
inline constexpr const char* kFirstShellProduct = "first_shell_product";
inline constexpr const char* kSecondShellProduct = "second_shell_product";
inline constexpr const char* kSecondShellMixedProduct = "second_shell_mixed_product";
inline constexpr const char* kSecondShellMax = "second_shell_max";
inline constexpr const char* kSecondShellInterpolation = "second_shell_interpolation";

/// Checks, pointwise at each sample, every inequality that applies to the model:
///  velocity_order_gain      w(a, b) <v>^g <= w(a, b1),  b1 < b
///  spatial_order_gain       w(a, b) <v>^g <= w(a1, b),  a1 < a
///  order_exchange           w(a, b) <= <v>^{gamma-1} w(a+1, b-1),  b >= 1
///  weight_floor_k_plus_6    <v>^{k+6} <= w(a, b)
///  interpolation            w(a, b) <= w(a-1, b)^s w(a-1, b+1)^{1-s} <v>^gamma  (Boltzmann, a >= 1)
///  first_shell_product      max_{a+b=1} w^2 <v>^kappa <= w(0,0) w(1,0)
///  second_shell_product     max_{a+b=2} w^2 <v>^kappa <= w(1,0) w(2,0)
///  second_shell_mixed_product max_{a+b=2, b>=1} w^2 <v>^kappa <= w(0,1) w(1,1)
///  second_shell_max         max_{a+b=2} w^2 <= w(2,0)^2
///  second_shell_interpolation w(2,0)^2 <v>^kappa <= w(1,0)^{4/5} w(2,0)^{6/5}
/// with g = 3 (Landau) or 6s (Boltzmann). Comparisons are made in log space
/// with relative slack 1e-12.
InequalityReport weight_inequality_suite(const WeightSpec& spec, const std::vector<Vec3>& samples);

/// Uniform samples in [-L, L]^3 from a seeded generator.
std::vector<Vec3> sample_velocities(std::size_t count, double cutoff, std::uint64_t seed);

// --- ladder ----------------------------------------------------------------

/// C_{a,b} = R^{2a + b}.
struct WeightLadder {
  double ratio = 100.0;
  double operator()(int a, int b) const;
  /// Both ordering relations hold with factor >= ratio.
  bool ordered() const;
};

// --- norms -------------------------------------------------------------------

/// Per-shell contributions, shell[a][b] for a + b <= 2.
struct NormBreakdown {
  double total = 0.0;
  std::array<std::array<double, 3>, 3> shell{};
};

/// sum_{|alpha|+|beta|<=2} C_{a,b} || exp(+-A phi/<v>^2) w(a,b) d^alpha_beta f_pm ||^2
/// over both species, plus/minus sign matching the species.
NormBreakdown norm_X_k(const PhaseGrid& grid, const SpeciesPair& f, const SpatialField& phi, const WeightSpec& spec,
                       const WeightLadder& ladder);
NormBreakdown norm_X_k(const SystemState& state, const WeightSpec& spec, const WeightLadder& ladder);

/// Anisotropic dissipation norm of one velocity slice with multiplier m:
/// || f m <v>^{gamma/2} || + || grad~(m f) <v>^{gamma/2} ||, where
/// grad~ = P_v grad + <v> (I - P_v) grad.
double landau_D_norm(const VelocityGrid& grid, std::span<const double> f, std::span<const double> m, double gamma);

/// sum_{|alpha|+|beta|<=2} || w(a,b) d^alpha_beta f_pm ||^2_{L^2_x L^2_D}.
/// For Boltzmann weights throws UnsupportedError unless `surrogate` is set,
/// in which case the H^s_v norm of <v>^{gamma/2} w d f (Fourier multiplier
/// <eta>^s) is returned. The surrogate has no dynamical meaning.
NormBreakdown norm_Y_k(const PhaseGrid& grid, const SpeciesPair& f, const WeightSpec& spec, bool surrogate = false);
NormBreakdown norm_Y_k(const SystemState& state, const WeightSpec& spec, bool surrogate = false);

/// sum over both species of || <v>^k f_pm ||^2_{L^2_{x,v}}.
double norm_L2_k_squared(const PhaseGrid& grid, const SpeciesPair& f, double k);

/// sum_{|alpha|<=3} || d^alpha grad phi ||^2.
double grad_phi_H3(const SpatialGrid& grid, const SpatialField& phi);

double functional_E_k(const SystemState& state, const WeightSpec& spec, const WeightLadder& ladder);
double functional_D_k(const SystemState& state, const WeightSpec& spec, bool surrogate = false);

/// Multi-indices of order `order` in `dims` variables (each listed once).
std::vector<std::array<int, 3>> multi_indices(int dims, int order);

}  // namespace vpl
