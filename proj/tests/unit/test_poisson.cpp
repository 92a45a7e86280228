#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "vpl/poisson.hpp"
#include "vpl/state.hpp"

using namespace vpl;

namespace {

double max_abs_diff(const SpatialField& a, const SpatialField& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST(Poisson, CosineIsEigenfunction) {
  const SpatialGrid g(1, 16);
  const SpatialField rho = sample(g, [](const std::array<double, 3>& x) { return std::cos(x[0]); });
  const PotentialSolution s = solve_potential(g, rho);
  EXPECT_LT(max_abs_diff(s.phi, rho), 1e-13);
  EXPECT_FALSE(s.mean_warning);
}

TEST(Poisson, TwoDimensionalModes) {
  const SpatialGrid g(2, 16);
  const SpatialField rho =
      sample(g, [](const std::array<double, 3>& x) { return std::cos(2 * x[0]) + std::sin(x[1]); });
  const SpatialField ref =
      sample(g, [](const std::array<double, 3>& x) { return std::cos(2 * x[0]) / 4 + std::sin(x[1]); });
  EXPECT_LT(max_abs_diff(solve_potential(g, rho).phi, ref), 1e-13);
}

TEST(Poisson, ZeroDensity) {
  const SpatialGrid g(3, 4);
  const PotentialSolution s = solve_potential(g, make_field(g));
  for (double v : s.phi) EXPECT_EQ(v, 0.0);
}

TEST(Poisson, NonzeroMeanIsRemovedAndFlagged) {
  const SpatialGrid g(1, 8);
  const SpatialField rho = sample(g, [](const std::array<double, 3>& x) { return 0.5 + std::cos(x[0]); });
  const PotentialSolution s = solve_potential(g, rho);
  EXPECT_TRUE(s.mean_warning);
  EXPECT_NEAR(s.removed_mean, 0.5, 1e-14);
}

TEST(Poisson, ResidualOnRandomDensity) {
  for (int dim = 1; dim <= 3; ++dim) {
    const SpatialGrid g(dim, 8, 3.0);
    std::mt19937 rng(dim);
    std::normal_distribution<double> n;
    SpatialField rho = make_field(g);
    double mean = 0.0;
    for (double& v : rho) mean += (v = n(rng));
    mean /= rho.size();
    for (double& v : rho) v -= mean;
    const PotentialSolution s = solve_potential(g, rho);
    EXPECT_LT(poisson_residual(g, s.phi, rho), 1e-12 * l2_norm(g, rho));
    double phi_mean = 0.0;
    for (double v : s.phi) phi_mean += v;
    EXPECT_LT(std::abs(phi_mean), 1e-12 * l2_norm(g, s.phi));
  }
}

TEST(Poisson, ElectricFieldIsMinusGradient) {
  const SpatialGrid g(1, 16);
  const SpatialField rho = sample(g, [](const std::array<double, 3>& x) { return std::sin(3 * x[0]); });
  const PotentialSolution s = solve_potential(g, rho);
  const SpatialField ref = sample(g, [](const std::array<double, 3>& x) { return -std::cos(3 * x[0]) / 3; });
  EXPECT_LT(max_abs_diff(s.electric_field.at(0), ref), 1e-13);
}

TEST(FieldEnergy, ClosedForms) {
  for (int dim = 1; dim <= 2; ++dim) {
    const SpatialGrid g(dim, 16);
    const SpatialField phi = sample(g, [](const std::array<double, 3>& x) { return std::cos(x[0]); });
    // int sin^2(x1) over the torus is half its volume
    EXPECT_NEAR(field_energy(g, phi), 0.5 * g.volume(), 1e-12);
    SpatialField twice = phi;
    twice *= 2.0;
    EXPECT_EQ(field_energy(g, twice), 4.0 * field_energy(g, phi));
    EXPECT_EQ(field_energy(g, make_field(g)), 0.0);
  }
}

TEST(ChargeDensity, EqualMassesGiveZeroMean) {
  const PhaseGrid g{SpatialGrid(1, 8), VelocityGrid(8, 6.0)};
  const PhaseField f = sample(g, [](const std::array<double, 3>& x, const Vec3& v) {
    return std::cos(x[0]) * maxwellian_value(v);
  });
  PhaseField minus = f;
  minus *= -1.0;
  const SpatialField rho = charge_density(g, f, minus);
  EXPECT_LT(std::abs(integrate(g.x, rho)), 1e-12);
}
