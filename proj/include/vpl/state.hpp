#pragma once

#include <array>
#include <cstdint>

#include "vpl/grid.hpp"

namespace vpl {

enum class Species { plus, minus };

/// The two species perturbations f+ and f-, F = mu + f.
struct SpeciesPair {
  PhaseField plus;
  PhaseField minus;

  PhaseField& operator[](Species s) { return s == Species::plus ? plus : minus; }
  const PhaseField& operator[](Species s) const { return s == Species::plus ? plus : minus; }
  SpeciesPair& axpy(double a, const SpeciesPair& o) {
    plus.axpy(a, o.plus);
    minus.axpy(a, o.minus);
    return *this;
  }
  bool operator==(const SpeciesPair&) const = default;
};

SpeciesPair make_species(const PhaseGrid& grid);

/// Both species plus the self-consistent potential. phi is recomputed from
/// the densities on every mutation of f, so a state handed out by the public
/// interface is always consistent.
class SystemState {
 public:
  explicit SystemState(const PhaseGrid& grid);
  SystemState(const PhaseGrid& grid, SpeciesPair f, double time = 0.0, std::uint64_t step = 0);

  const PhaseGrid& grid() const { return grid_; }
  const SpeciesPair& species() const { return f_; }
  const PhaseField& f_plus() const { return f_.plus; }
  const PhaseField& f_minus() const { return f_.minus; }
  const PhaseField& f(Species s) const { return f_[s]; }
  const SpatialField& phi() const { return phi_; }
  double time() const { return time_; }
  std::uint64_t step() const { return step_; }
  /// Whether the last potential solve had to discard a nonzero mean charge.
  bool charge_mean_warning() const { return charge_mean_warning_; }

  void set_species(SpeciesPair f);
  void set_clock(double time, std::uint64_t step) {
    time_ = time;
    step_ = step;
  }

 private:
  void refresh_potential();

  PhaseGrid grid_;
  SpeciesPair f_;
  SpatialField phi_;
  double time_ = 0.0;
  std::uint64_t step_ = 0;
  bool charge_mean_warning_ = false;
};

/// mu(v) = (2 pi)^{-3/2} exp(-|v|^2 / 2) on the velocity nodes.
VelocityField maxwellian(const VelocityGrid& grid);
double maxwellian_value(const Vec3& v);

/// Macroscopic coefficients of the kernel projection, one spatial field each:
/// a_pm = int f_pm dv, b_j = 1/2 int v_j (f+ + f-) dv,
/// c = int (|v|^2 - 3)/12 (f+ + f-) dv.
struct MacroMoments {
  SpatialField a_plus;
  SpatialField a_minus;
  std::array<SpatialField, 3> b;
  SpatialField c;
};

MacroMoments extract_moments(const PhaseGrid& grid, const SpeciesPair& f);
MacroMoments extract_moments(const SystemState& state);

/// (a_pm + v.b + (|v|^2 - 3) c) mu for given moments.
SpeciesPair reconstruct(const PhaseGrid& grid, const MacroMoments& m);

/// Pointwise-in-x projection onto ker L.
SpeciesPair project_P(const PhaseGrid& grid, const SpeciesPair& f);
SpeciesPair project_P(const SystemState& state);

/// Projection with coefficients averaged over the torus (normalized by its
/// volume) and integrated over velocity.
SpeciesPair project_Pi(const PhaseGrid& grid, const SpeciesPair& f);
SpeciesPair project_Pi(const SystemState& state);

struct ConservedQuantity {
  double value = 0.0;
  double drift = 0.0;      ///< value - reference value
  double scale = 0.0;      ///< magnitude used for relative drift
  double relative_drift() const { return scale > 0.0 ? std::abs(drift) / scale : std::abs(drift); }
};

/// Global invariants: per-species mass, total momentum, kinetic + field energy.
struct ConservationReport {
  ConservedQuantity mass_plus;
  ConservedQuantity mass_minus;
  std::array<ConservedQuantity, 3> momentum;
  ConservedQuantity energy;
  double kinetic_energy = 0.0;
  double field_energy = 0.0;
  bool charge_mean_warning = false;

  double max_relative_drift() const;
};

/// Each quantity's scale is the matching absolute moment of the reference,
/// int int (1 | |v| | |v|^2)(|f+| + |f-|), plus the field energy for the
/// energy entry.
ConservationReport check_conservation(const SystemState& state, const SystemState& reference);

struct GlobalInvariants {
  double mass_plus = 0.0;
  double mass_minus = 0.0;
  Vec3 momentum{};
  double kinetic = 0.0;
  double field = 0.0;
  double energy() const { return kinetic + field; }
};

GlobalInvariants global_invariants(const SystemState& state);

}  // namespace vpl
