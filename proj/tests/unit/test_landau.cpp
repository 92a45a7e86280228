#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include <Eigen/Dense>

#include "vpl/experiment.hpp"
#include "vpl/landau.hpp"

using namespace vpl;

namespace {

double kernel(const Vec3& u, double gamma, int i, int j) { return landau_kernel(u, gamma, 0.0)[sym_index(i, j)]; }

double rel_l2(const VelocityGrid& g, const VelocityField& a, const VelocityField& b) {
  return l2_norm(g, a - b) / l2_norm(g, b);
}

double total_mass(const VelocityGrid& g, const VelocityField& f) { return integrate(g, f); }

}  // namespace

TEST(Kernel, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(kernel({1, 0, 0}, 0.0, 0, 0), 0.0);
  EXPECT_DOUBLE_EQ(kernel({1, 0, 0}, 0.0, 1, 1), 1.0);
  EXPECT_DOUBLE_EQ(kernel({2, 0, 0}, -3.0, 0, 0), 0.0);
  EXPECT_DOUBLE_EQ(kernel({2, 0, 0}, -3.0, 1, 1), 0.5);
}

TEST(Kernel, DivergenceIdentity) {
  const Vec3 d = landau_kernel_divergence({1, 1, 0}, 0.0);
  EXPECT_DOUBLE_EQ(d[0], -2.0);
  // Central differences of the kernel itself, independent of the closed form.
  for (double gamma : {-3.0, -1.0, 0.0, 1.0}) {
    const Vec3 u{0.7, -0.4, 1.1};
    const double h = 1e-5;
    for (int i = 0; i < 3; ++i) {
      double s = 0.0;
      for (int j = 0; j < 3; ++j) {
        Vec3 up = u, um = u;
        up[j] += h;
        um[j] -= h;
        s += (kernel(up, gamma, i, j) - kernel(um, gamma, i, j)) / (2 * h);
      }
      EXPECT_NEAR(s, landau_kernel_divergence(u, gamma)[i], 1e-7);
    }
  }
}

TEST(Kernel, ProjectionPropertyAndSemidefinite) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 w{u(rng), u(rng), u(rng)};
    for (double gamma : {-3.0, 0.0, 1.0}) {
      Eigen::Matrix3d m;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = kernel(w, gamma, i, j);
      const Eigen::Vector3d uv(w[0], w[1], w[2]);
      EXPECT_LT((m * uv).norm(), 1e-12 * m.norm() * uv.norm());
      EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(m).eigenvalues().minCoeff(), -1e-12 * m.norm());
    }
  }
}

TEST(Kernel, BallAverageBelowHalfSpacing) {
  const SymMatrix3 k = landau_kernel({0.0, 0.0, 0.0}, -3.0, 0.25);
  EXPECT_DOUBLE_EQ(k[sym_index(0, 0)], 2.0 * std::pow(0.25, -1.0) / 2.0);
  EXPECT_DOUBLE_EQ(k[sym_index(0, 1)], 0.0);
  EXPECT_THROW(check_gamma(-3.5), ParameterError);
  EXPECT_THROW(check_gamma(1.5), ParameterError);
}

TEST(Operator, MaxwellianResidualShrinksUnderRefinement) {
  for (double gamma : {-3.0, 0.0}) {
    const double coarse = equilibrium_residual(*build_kernel_tables(gamma, VelocityGrid(8, 8.0)));
    const double fine = equilibrium_residual(*build_kernel_tables(gamma, VelocityGrid(16, 8.0)));
    EXPECT_LT(fine, coarse) << "gamma " << gamma;
  }
}

TEST(Operator, ShiftedMaxwellianIsAnnihilated) {
  const VelocityGrid g(16, 8.0);
  const auto tables = build_kernel_tables(-1.0, g);
  const VelocityField shifted = sample(g, [](const Vec3& v) { return maxwellian_value({v[0] - 0.3, v[1] + 0.2, v[2]}); });
  const VelocityField q = q_landau_fft(shifted, shifted, *tables);
  EXPECT_LT(l2_norm(g, q) / l2_norm(g, shifted), 5.0 * equilibrium_residual(*tables) + 1e-8);
}

TEST(Operator, FastMatchesDirectQuadrature) {
  const VelocityGrid g(8, 6.0);
  for (double gamma : {-3.0, -1.0, 0.0, 1.0}) {
    const auto tables = build_kernel_tables(gamma, g);
    const VelocityField a = random_velocity_field(g, 21), b = random_velocity_field(g, 22);
    EXPECT_LT(rel_l2(g, q_landau_fft(a, b, *tables), q_landau_direct(g, a, b, gamma)), 1e-10) << "gamma " << gamma;
  }
}

TEST(Operator, DirectOracleGuards) {
  const VelocityGrid big(32, 8.0);
  const VelocityField f = make_field(big);
  EXPECT_THROW(q_landau_direct(big, f, f, 0.0), CostGuardError);
  const VelocityGrid g(8, 6.0);
  const VelocityField zero = make_field(g), h = random_velocity_field(g, 3);
  const VelocityField q = q_landau_direct(g, zero, h, -3.0);
  for (double v : q) EXPECT_EQ(v, 0.0);
}

TEST(Operator, MassIsConservedByDivergenceForm) {
  const VelocityGrid g(16, 8.0);
  const auto tables = build_kernel_tables(-3.0, g);
  const VelocityField a = random_velocity_field(g, 5), b = random_velocity_field(g, 6);
  const VelocityField q = q_landau_fft(a, b, *tables);
  EXPECT_LT(std::abs(total_mass(g, q)), 1e-12 * l2_norm(g, a) * l2_norm(g, b));
}

TEST(MomentCorrector, RemovesCollisionInvariants) {
  const VelocityGrid g(16, 8.0);
  const auto tables = build_kernel_tables(0.0, g);
  const MomentCorrector corrector(g);
  VelocityField q = q_landau_fft(random_velocity_field(g, 1), random_velocity_field(g, 2), *tables);
  const double scale = l2_norm(g, q);
  corrector.correct(q.span());
  for (double m : corrector.moments(q.span())) EXPECT_LT(std::abs(m), 1e-12 * scale);

  VelocityField p = random_velocity_field(g, 3), m = random_velocity_field(g, 4);
  const std::array<double, 6> target{0.1, -0.2, 0.0, 0.3, 0.0, 0.05};
  corrector.correct_pair(p.span(), m.span(), target);
  const auto got = corrector.pair_moments(p.span(), m.span());
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(got[i], target[i], 1e-13);
}

TEST(CollisionField, ZeroAndMaxwellianFamily) {
  const PhaseGrid g{SpatialGrid(1, 4), VelocityGrid(16, 8.0)};
  const auto tables = build_kernel_tables(-3.0, g.v);
  const LandauOperator op(tables);
  const SpeciesPair zero = make_species(g);
  const SpeciesPair q0 = apply_collision_field(g, zero, op);
  for (double v : q0.plus) EXPECT_EQ(v, 0.0);

  const double eps = 1e-2;
  const VelocityField mu = maxwellian(g.v);
  SpeciesPair f = make_species(g);
  for (std::size_t p = 0; p < g.size(); ++p) f.plus[p] = f.minus[p] = eps * mu[p % g.v.size()];
  const SpeciesPair q = apply_collision_field(g, f, op, {false, false});
  const double bound = 10.0 * equilibrium_residual(*tables) * l2_norm(g, f.plus);
  EXPECT_LT(l2_norm(g, q.plus), bound);
}

TEST(CollisionField, LocalMassVanishes) {
  const PhaseGrid g{SpatialGrid(1, 4), VelocityGrid(16, 8.0)};
  const LandauOperator op(build_kernel_tables(0.0, g.v));
  SpeciesPair f = random_species(g, 9);
  for (auto* s : {&f.plus, &f.minus}) *s *= 1e-2;
  for (bool corrected : {false, true}) {
    const SpeciesPair q = apply_collision_field(g, f, op, {false, corrected});
    const SpatialField mass = integrate_velocity(g, q.plus);
    const double scale = l2_norm(g, f.plus);
    for (double m : mass) EXPECT_LT(std::abs(m), 1e-12 * scale);
  }
}

TEST(Tables, SaveLoadRoundTrip) {
  const VelocityGrid g(8, 6.0);
  const auto tables = build_kernel_tables(-1.0, g);
  const auto path = std::filesystem::temp_directory_path() / "vpl_tables_test.bin";
  tables->save(path);
  const auto loaded = LandauKernelTables::load(path, -1.0, g);
  for (int s = 0; s < 6; ++s) {
    const auto a = tables->spectrum(s), b = loaded->spectrum(s);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i], b[i]);
  }
  EXPECT_THROW(LandauKernelTables::load(path, 0.0, g), FormatError);
  std::filesystem::remove(path);
}
