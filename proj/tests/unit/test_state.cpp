#include <gtest/gtest.h>

#include <cmath>

#include "vpl/experiment.hpp"
#include "vpl/poisson.hpp"
#include "vpl/state.hpp"

using namespace vpl;

namespace {

PhaseGrid small_grid(int dim = 1) { return {SpatialGrid(dim, 8), VelocityGrid(16, 8.0)}; }

// At h = 1 the uniform rule misses the Gaussian moments by ~1e-7, which caps
// how exactly P can reproduce itself. h = 1/2 takes that below round-off.
PhaseGrid fine_grid() { return {SpatialGrid(1, 8), VelocityGrid(32, 8.0)}; }

double max_abs(const SpatialField& f) {
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

double rel_diff(const PhaseGrid& g, const SpeciesPair& a, const SpeciesPair& b, double scale) {
  return (l2_norm(g, a.plus - b.plus) + l2_norm(g, a.minus - b.minus)) / scale;
}

double norm(const PhaseGrid& g, const SpeciesPair& f) { return l2_norm(g, f.plus) + l2_norm(g, f.minus); }

SpeciesPair velocity_profile(const PhaseGrid& g, double (*fn)(const Vec3&)) {
  const PhaseField f = sample(g, [&](const std::array<double, 3>&, const Vec3& v) { return fn(v) * maxwellian_value(v); });
  return {f, f};
}

}  // namespace

TEST(Maxwellian, ValueAtOriginAndOddMoments) {
  EXPECT_NEAR(maxwellian_value({0, 0, 0}), 0.0634936359342410, 1e-15);
  const VelocityGrid g(16, 8.0);
  const VelocityField mu = maxwellian(g);
  for (int c = 0; c < 3; ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += g.velocity(i)[c] * mu[i] * g.weight();
    EXPECT_LT(std::abs(s), 1e-16);
  }
}

TEST(Moments, MaxwellianReference) {
  const PhaseGrid g = small_grid();
  const MacroMoments m = extract_moments(g, velocity_profile(g, [](const Vec3&) { return 1.0; }));
  const double tol = truncation_tolerance(g.v);
  EXPECT_NEAR(m.a_plus[0], 1.0, tol);
  EXPECT_NEAR(m.a_minus[3], 1.0, tol);
  for (int c = 0; c < 3; ++c) EXPECT_LT(max_abs(m.b[c]), tol);
  EXPECT_LT(max_abs(m.c), tol);
}

TEST(Moments, EnergyProfileGivesUnitC) {
  const PhaseGrid g = small_grid();
  const MacroMoments m =
      extract_moments(g, velocity_profile(g, [](const Vec3& v) { return v[0] * v[0] + v[1] * v[1] + v[2] * v[2] - 3.0; }));
  EXPECT_NEAR(m.c[2], 1.0, truncation_tolerance(g.v));
  EXPECT_LT(max_abs(m.a_plus), truncation_tolerance(g.v));
}

TEST(Moments, VelocityProfileGivesUnitB1) {
  const PhaseGrid g = small_grid();
  const MacroMoments m = extract_moments(g, velocity_profile(g, [](const Vec3& v) { return v[0]; }));
  EXPECT_NEAR(m.b[0][1], 1.0, truncation_tolerance(g.v));
  EXPECT_LT(max_abs(m.b[1]), truncation_tolerance(g.v));
  EXPECT_LT(max_abs(m.c), truncation_tolerance(g.v));
}

TEST(ProjectionP, KernelFormIsFixed) {
  const PhaseGrid g = fine_grid();
  MacroMoments m{sample(g.x, [](const std::array<double, 3>& x) { return std::cos(x[0]); }),
                 sample(g.x, [](const std::array<double, 3>& x) { return 0.5 * std::sin(2 * x[0]); }),
                 {make_field(g.x, 0.2), sample(g.x, [](const std::array<double, 3>& x) { return std::sin(x[0]); }),
                  make_field(g.x, 0.0)},
                 sample(g.x, [](const std::array<double, 3>& x) { return 0.1 + std::cos(3 * x[0]); })};
  const SpeciesPair pf = reconstruct(g, m);
  EXPECT_LT(rel_diff(g, project_P(g, pf), pf, norm(g, pf)), 1e-11);
}

TEST(ProjectionP, OffDiagonalProfileIsOrthogonal) {
  const PhaseGrid g = small_grid();
  const SpeciesPair f = velocity_profile(g, [](const Vec3& v) { return v[0] * v[1]; });
  EXPECT_LT(norm(g, project_P(g, f)), truncation_tolerance(g.v));
}

TEST(ProjectionP, Idempotent) {
  const PhaseGrid g = fine_grid();
  const SpeciesPair f = random_species(g, 11);
  const SpeciesPair p = project_P(g, f);
  EXPECT_LT(rel_diff(g, project_P(g, p), p, norm(g, f)), 1e-11);
}

TEST(ProjectionPi, SpatiallyConstantDataMatchesP) {
  const PhaseGrid g = small_grid();
  const SpeciesPair f = velocity_profile(g, [](const Vec3& v) { return 1.0 + v[1] + v[0] * v[0]; });
  EXPECT_LT(rel_diff(g, project_Pi(g, f), project_P(g, f), norm(g, f)), 1e-12);
}

TEST(ProjectionPi, KillsComplementOfP) {
  const PhaseGrid g = fine_grid();
  SpeciesPair f = random_species(g, 4);
  f.axpy(-1.0, project_P(g, f));
  EXPECT_LT(norm(g, project_Pi(g, f)), 1e-11 * norm(g, random_species(g, 4)));
}

TEST(ProjectionPi, ZeroToZero) {
  const PhaseGrid g = small_grid();
  const SpeciesPair z = make_species(g);
  EXPECT_EQ(project_Pi(g, z), z);
}

TEST(SystemState, PotentialIsConsistent) {
  const PhaseGrid g = small_grid();
  const SpeciesPair f = random_species(g, 2);
  const SystemState s(g, f);
  double mean = 0.0;
  for (double v : s.phi()) mean += v;
  EXPECT_LT(std::abs(mean) / g.x.size(), 1e-14);
  const SpatialField rho = charge_density(g, f.plus, f.minus);
  EXPECT_LT(poisson_residual(g.x, s.phi(), rho), 1e-11 * l2_norm(g.x, rho));
}

TEST(Conservation, IdenticalStatesHaveZeroDrift) {
  const PhaseGrid g = small_grid();
  const SystemState s(g, random_species(g, 8));
  const ConservationReport r = check_conservation(s, s);
  EXPECT_EQ(r.max_relative_drift(), 0.0);
}

TEST(Conservation, ConstructedInitialDataHasZeroInvariants) {
  const PhaseGrid g = small_grid();
  InitialCondition ic;
  ic.family = InitialFamily::random_bandlimited;
  ic.modes = {2};
  const InitialState init = make_initial_condition(ic, g);
  const GlobalInvariants inv = global_invariants(init.state);
  EXPECT_LT(std::abs(inv.mass_plus), 1e-11 * ic.amplitude);
  EXPECT_LT(std::abs(inv.mass_minus), 1e-11 * ic.amplitude);
  for (double p : inv.momentum) EXPECT_LT(std::abs(p), 1e-11 * ic.amplitude);
  EXPECT_LT(std::abs(inv.energy()), 1e-11 * ic.amplitude);
}
