#include "vpl/state.hpp"

#include <cmath>
#include <numbers>

#include "vpl/parallel.hpp"
#include "vpl/poisson.hpp"

namespace vpl {

SpeciesPair make_species(const PhaseGrid& grid) { return {make_field(grid), make_field(grid)}; }

SystemState::SystemState(const PhaseGrid& grid) : SystemState(grid, make_species(grid)) {}

SystemState::SystemState(const PhaseGrid& grid, SpeciesPair f, double time, std::uint64_t step)
    : grid_(grid), f_(std::move(f)), time_(time), step_(step) {
  if (f_.plus.size() != grid_.size() || f_.minus.size() != grid_.size())
    throw GridMismatchError("species fields do not match the phase grid");
  refresh_potential();
}

void SystemState::set_species(SpeciesPair f) {
  if (f.plus.size() != grid_.size() || f.minus.size() != grid_.size())
    throw GridMismatchError("species fields do not match the phase grid");
  f_ = std::move(f);
  refresh_potential();
}

void SystemState::refresh_potential() {
  auto sol = solve_potential(grid_.x, charge_density(grid_, f_.plus, f_.minus));
  phi_ = std::move(sol.phi);
  charge_mean_warning_ = sol.mean_warning;
}

double maxwellian_value(const Vec3& v) {
  const double r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
  return std::exp(-0.5 * r2) / std::pow(2.0 * std::numbers::pi, 1.5);
}

VelocityField maxwellian(const VelocityGrid& grid) { return sample(grid, maxwellian_value); }

namespace {

// int psi(v) g(v) dv on one slice
double moment(const VelocityGrid& vg, std::span<const double> slice, std::span<const double> weight_fn) {
  std::vector<double> prod(slice.size());
  for (std::size_t i = 0; i < slice.size(); ++i) prod[i] = slice[i] * weight_fn[i];
  return pairwise_sum(prod) * vg.weight();
}

struct MomentBasis {
  std::vector<double> one, v1, v2, v3, energy;  // energy = (|v|^2 - 3) / 12
  explicit MomentBasis(const VelocityGrid& vg) {
    const std::size_t n = vg.size();
    one.assign(n, 1.0);
    v1.resize(n);
    v2.resize(n);
    v3.resize(n);
    energy.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = vg.velocity(i);
      v1[i] = v[0];
      v2[i] = v[1];
      v3[i] = v[2];
      energy[i] = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] - 3.0) / 12.0;
    }
  }
  std::span<const double> velocity(int c) const { return c == 0 ? v1 : (c == 1 ? v2 : v3); }
};

}  // namespace

MacroMoments extract_moments(const PhaseGrid& grid, const SpeciesPair& f) {
  const MomentBasis basis(grid.v);
  MacroMoments m{make_field(grid.x), make_field(grid.x), {make_field(grid.x), make_field(grid.x), make_field(grid.x)},
                 make_field(grid.x)};
  std::vector<double> sum(grid.v.size());
  for (std::size_t ix = 0; ix < grid.x.size(); ++ix) {
    const auto fp = velocity_slice(grid, f.plus, ix);
    const auto fm = velocity_slice(grid, f.minus, ix);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = fp[i] + fm[i];
    m.a_plus[ix] = moment(grid.v, fp, basis.one);
    m.a_minus[ix] = moment(grid.v, fm, basis.one);
    for (int c = 0; c < 3; ++c) m.b[c][ix] = 0.5 * moment(grid.v, sum, basis.velocity(c));
    m.c[ix] = moment(grid.v, sum, basis.energy);
  }
  return m;
}

MacroMoments extract_moments(const SystemState& state) { return extract_moments(state.grid(), state.species()); }

SpeciesPair reconstruct(const PhaseGrid& grid, const MacroMoments& m) {
  SpeciesPair out = make_species(grid);
  const VelocityField mu = maxwellian(grid.v);
  const std::size_t nv = grid.v.size();
  for (std::size_t ix = 0; ix < grid.x.size(); ++ix) {
    for (std::size_t iv = 0; iv < nv; ++iv) {
      const auto v = grid.v.velocity(iv);
      const double shared = v[0] * m.b[0][ix] + v[1] * m.b[1][ix] + v[2] * m.b[2][ix] +
                            (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] - 3.0) * m.c[ix];
      out.plus[ix * nv + iv] = (m.a_plus[ix] + shared) * mu[iv];
      out.minus[ix * nv + iv] = (m.a_minus[ix] + shared) * mu[iv];
    }
  }
  return out;
}

SpeciesPair project_P(const PhaseGrid& grid, const SpeciesPair& f) { return reconstruct(grid, extract_moments(grid, f)); }

SpeciesPair project_P(const SystemState& state) { return project_P(state.grid(), state.species()); }

SpeciesPair project_Pi(const PhaseGrid& grid, const SpeciesPair& f) {
  MacroMoments local = extract_moments(grid, f);
  const double vol = grid.x.volume();
  auto average = [&](const SpatialField& s) { return integrate(grid.x, s) / vol; };
  MacroMoments global{make_field(grid.x, average(local.a_plus)),
                      make_field(grid.x, average(local.a_minus)),
                      {make_field(grid.x, average(local.b[0])), make_field(grid.x, average(local.b[1])),
                       make_field(grid.x, average(local.b[2]))},
                      make_field(grid.x, average(local.c))};
  return reconstruct(grid, global);
}

SpeciesPair project_Pi(const SystemState& state) { return project_Pi(state.grid(), state.species()); }

GlobalInvariants global_invariants(const SystemState& state) {
  const auto& grid = state.grid();
  const MomentBasis basis(grid.v);
  std::vector<double> speed2(grid.v.size());
  for (std::size_t i = 0; i < speed2.size(); ++i) speed2[i] = 12.0 * basis.energy[i] + 3.0;
  GlobalInvariants g;
  SpatialField mp = make_field(grid.x), mm = make_field(grid.x), ke = make_field(grid.x);
  std::array<SpatialField, 3> mom{make_field(grid.x), make_field(grid.x), make_field(grid.x)};
  std::vector<double> sum(grid.v.size());
  for (std::size_t ix = 0; ix < grid.x.size(); ++ix) {
    const auto fp = velocity_slice(grid, state.f_plus(), ix);
    const auto fm = velocity_slice(grid, state.f_minus(), ix);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = fp[i] + fm[i];
    mp[ix] = moment(grid.v, fp, basis.one);
    mm[ix] = moment(grid.v, fm, basis.one);
    for (int c = 0; c < 3; ++c) mom[c][ix] = moment(grid.v, sum, basis.velocity(c));
    ke[ix] = moment(grid.v, sum, speed2);
  }
  g.mass_plus = integrate(grid.x, mp);
  g.mass_minus = integrate(grid.x, mm);
  for (int c = 0; c < 3; ++c) g.momentum[c] = integrate(grid.x, mom[c]);
  g.kinetic = integrate(grid.x, ke);
  g.field = field_energy(grid.x, state.phi());
  return g;
}

namespace {

struct AbsoluteScales {
  double mass_plus = 0.0, mass_minus = 0.0, momentum = 0.0, energy = 0.0;
};

AbsoluteScales absolute_scales(const SystemState& s) {
  const auto& grid = s.grid();
  const std::size_t nv = grid.v.size();
  std::vector<double> ap(grid.size()), am(grid.size()), speed(grid.size()), speed2(grid.size());
  for (std::size_t ix = 0; ix < grid.x.size(); ++ix) {
    for (std::size_t iv = 0; iv < nv; ++iv) {
      const auto v = grid.v.velocity(iv);
      const double r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
      const std::size_t k = ix * nv + iv;
      const double p = std::abs(s.f_plus()[k]), m = std::abs(s.f_minus()[k]);
      ap[k] = p;
      am[k] = m;
      speed[k] = std::sqrt(r2) * (p + m);
      speed2[k] = r2 * (p + m);
    }
  }
  const double w = grid.x.cell_volume() * grid.v.weight();
  return {pairwise_sum(ap) * w, pairwise_sum(am) * w, pairwise_sum(speed) * w,
          pairwise_sum(speed2) * w + field_energy(grid.x, s.phi())};
}

}  // namespace

double ConservationReport::max_relative_drift() const {
  double worst = std::max(mass_plus.relative_drift(), mass_minus.relative_drift());
  for (const auto& p : momentum) worst = std::max(worst, p.relative_drift());
  return std::max(worst, energy.relative_drift());
}

ConservationReport check_conservation(const SystemState& state, const SystemState& reference) {
  if (!(state.grid() == reference.grid())) throw GridMismatchError("states live on different grids");
  const GlobalInvariants now = global_invariants(state);
  const GlobalInvariants ref = global_invariants(reference);
  const AbsoluteScales scale = absolute_scales(reference);
  ConservationReport r;
  r.mass_plus = {now.mass_plus, now.mass_plus - ref.mass_plus, scale.mass_plus};
  r.mass_minus = {now.mass_minus, now.mass_minus - ref.mass_minus, scale.mass_minus};
  for (int c = 0; c < 3; ++c) r.momentum[c] = {now.momentum[c], now.momentum[c] - ref.momentum[c], scale.momentum};
  r.energy = {now.energy(), now.energy() - ref.energy(), scale.energy};
  r.kinetic_energy = now.kinetic;
  r.field_energy = now.field;
  r.charge_mean_warning = state.charge_mean_warning();
  return r;
}

}  // namespace vpl
