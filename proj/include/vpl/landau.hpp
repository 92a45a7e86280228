#pragma once

// Landau collision operator on the truncated velocity box.
//
// Q(g, f) = d_i [ (phi^{ij} * g) d_j f - f (phi^{ij} * d_j g) ]
//
// with phi^{ij}(u) = |u|^{gamma+2} (delta_ij - u_i u_j / |u|^2) and * the
// velocity convolution. Both convolutions are evaluated as exact discrete sums
// through zero-padded FFTs on the doubled box, so the fast path reproduces
// the O(N^2) quadrature in q_landau_direct to round-off. Velocity derivatives
// are spectral on the n_v grid.
//
// For gamma < 0 the kernel at |u| < h/2 is replaced by its analytic average
// over the ball of radius h/2, which is 2 rho^{gamma+2} / (gamma + 5) delta_ij.

#include <array>
#include <filesystem>
#include <memory>
#include <mutex>
#include <vector>

#include "vpl/grid.hpp"
#include "vpl/state.hpp"

namespace vpl {

/// Index of (i, j) in packed symmetric storage (00, 01, 02, 11, 12, 22).
constexpr int sym_index(int i, int j) {
  if (i > j) std::swap(i, j);
  return i == 0 ? j : (i == 1 ? 2 + j : 5);
}

using SymMatrix3 = std::array<double, 6>;

/// phi^{ij}(u), regularized at |u| < ball_radius when gamma < 0.
SymMatrix3 landau_kernel(const Vec3& u, double gamma, double ball_radius);
/// d_j phi^{ij}(u) = -2 |u|^gamma u_i (zero at u = 0).
Vec3 landau_kernel_divergence(const Vec3& u, double gamma);

void check_gamma(double gamma);

/// Convolution coefficients of a fixed first argument g:
/// a^{ij} = phi^{ij} * g, b^i = sum_j phi^{ij} * d_j g, so that
/// Q(g, f) = d_i (a^{ij} d_j f - b^i f).
struct CollisionCoefficients {
  std::array<VelocityField, 6> a;
  std::array<VelocityField, 3> b;

  CollisionCoefficients& axpy(double s, const CollisionCoefficients& o);
  CollisionCoefficients& operator*=(double s);
};

/// Immutable spectral tables of the truncated kernel on the doubled box,
/// plus the Maxwellian coefficients a[mu], b[mu]. Shareable across threads.
class LandauKernelTables {
 public:
  LandauKernelTables(double gamma, const VelocityGrid& grid);

  double gamma() const { return gamma_; }
  const VelocityGrid& grid() const { return grid_; }
  int padded_n() const { return 2 * grid_.n(); }
  /// Padded half-spectrum of h^3 phi^{ij}, prescaled by 1 / (2n)^3.
  std::span<const Complex> spectrum(int sym) const { return spectra_[sym]; }
  /// phi^{ij} at lattice offset d (each component in [-n, n-1]).
  SymMatrix3 sample(const std::array<int, 3>& offset) const;

  const VelocityField& maxwellian() const { return mu_; }
  const std::array<VelocityField, 3>& maxwellian_gradient() const { return grad_mu_; }
  const CollisionCoefficients& maxwellian_coefficients() const { return mu_coefficients_; }

  void save(const std::filesystem::path& path) const;
  /// Loads tables cached by save(); throws FormatError if the file was
  /// written for a different (gamma, n_v, L).
  static std::shared_ptr<const LandauKernelTables> load(const std::filesystem::path& path, double gamma,
                                                        const VelocityGrid& grid);

 private:
  struct Uninitialized {};
  LandauKernelTables(Uninitialized, double gamma, const VelocityGrid& grid);
  void finish();

  double gamma_;
  VelocityGrid grid_;
  std::array<std::vector<Complex>, 6> spectra_;
  VelocityField mu_;
  std::array<VelocityField, 3> grad_mu_;
  CollisionCoefficients mu_coefficients_;
};

std::shared_ptr<const LandauKernelTables> build_kernel_tables(double gamma, const VelocityGrid& grid);

/// Evaluates the operator with per-worker scratch space. Safe to call
/// concurrently with distinct worker ids.
class LandauOperator {
 public:
  explicit LandauOperator(std::shared_ptr<const LandauKernelTables> tables);
  ~LandauOperator();

  const LandauKernelTables& tables() const { return *tables_; }
  const VelocityGrid& grid() const { return tables_->grid(); }

  CollisionCoefficients coefficients(std::span<const double> g, int worker = 0) const;
  /// flux_i = a^{ij} d_j f - b^i f, accumulated into `flux`.
  void add_flux(const CollisionCoefficients& c, std::span<const double> f,
                std::array<std::span<double>, 3> flux, int worker = 0) const;
  /// Flux of the first argument mu, using the analytic Maxwellian samples.
  void add_flux_of_maxwellian(const CollisionCoefficients& c, std::array<std::span<double>, 3> flux,
                              int worker = 0) const;
  void divergence(std::array<std::span<const double>, 3> flux, std::span<double> out, int worker = 0) const;
  /// out = Q(c, f) for precomputed coefficients of the first argument.
  void apply(const CollisionCoefficients& c, std::span<const double> f, std::span<double> out,
             int worker = 0) const;

  VelocityField q(const VelocityField& g, const VelocityField& f, int worker = 0) const;

 private:
  struct Workspace;
  Workspace& workspace(int worker) const;

  std::shared_ptr<const LandauKernelTables> tables_;
  mutable std::mutex workspace_mutex_;
  mutable std::vector<std::unique_ptr<Workspace>> workspaces_;
};

VelocityField q_landau_fft(const VelocityField& g, const VelocityField& f, const LandauKernelTables& tables);

/// O(N^2) quadrature oracle for Q(g, f) in its original double-integral form.
/// Throws CostGuardError for n_v > 24.
VelocityField q_landau_direct(const VelocityGrid& grid, const VelocityField& g, const VelocityField& f,
                              double gamma);
inline constexpr int kDirectOracleMaxPoints = 24;

/// Removes the {1, v, |v|^2} moments of collision output. The correction
/// lives in span{1, v, |v|^2} mu, so the tail of the output is untouched.
class MomentCorrector {
 public:
  explicit MomentCorrector(const VelocityGrid& grid);
  /// Single field: the {1, v1, v2, v3, |v|^2} moments are driven to `target`.
  void correct(std::span<double> q, const std::array<double, 5>& target = {}) const;
  std::array<double, 5> moments(std::span<const double> q) const;
  /// Species pair: each species' mass plus total momentum and total energy
  /// are driven to `target` = {mass+, mass-, p1, p2, p3, energy}.
  void correct_pair(std::span<double> q_plus, std::span<double> q_minus,
                    const std::array<double, 6>& target = {}) const;
  /// {mass+, mass-, p1, p2, p3, energy} of a pair of slices.
  std::array<double, 6> pair_moments(std::span<const double> q_plus, std::span<const double> q_minus) const;

 private:
  VelocityGrid grid_;
  std::vector<double> mu_;
  std::array<std::vector<double>, 5> basis_;  // 1, v1, v2, v3, |v|^2
  std::array<double, 25> single_inverse_{};
  std::array<double, 36> pair_inverse_{};
};

struct CollisionOptions {
  bool linearized = false;
  bool conservative_correction = true;
};

/// Collision right-hand side of the perturbation system at every spatial node:
/// nonlinear: Q(f+ + f-, mu) + Q(2 mu + f+ + f-, f_pm)
/// linearized: Q(f+ + f-, mu) + 2 Q(mu, f_pm)
SpeciesPair apply_collision_field(const PhaseGrid& grid, const SpeciesPair& f, const LandauOperator& op,
                                  const CollisionOptions& options = {});
SpeciesPair apply_collision_field(const SystemState& state, const LandauOperator& op,
                                  const CollisionOptions& options = {});

/// ||Q(mu, mu)|| / ||mu|| on the tables' grid.
double equilibrium_residual(const LandauKernelTables& tables);

}  // namespace vpl
