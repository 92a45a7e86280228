#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "vpl/grid.hpp"
#include "vpl/oracle.hpp"
#include "vpl/state.hpp"

using namespace vpl;

namespace {

SpatialField random_bandlimited(const SpatialGrid& grid, int band, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::array<double, 4>> modes;
  for (int m = 1; m <= band; ++m)
    for (int c = 0; c < grid.dim(); ++c) modes.push_back({double(m), double(c), u(rng), u(rng)});
  return sample(grid, [&](const std::array<double, 3>& x) {
    double s = 0.3;
    for (const auto& m : modes) s += m[2] * std::cos(m[0] * x[int(m[1])]) + m[3] * std::sin(m[0] * x[int(m[1])]);
    return s;
  });
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST(SpatialGrid, RejectsBadSizes) {
  EXPECT_THROW(SpatialGrid(1, 6), ParameterError);
  EXPECT_THROW(SpatialGrid(1, 2), ParameterError);
  EXPECT_THROW(SpatialGrid(4, 8), ParameterError);
  EXPECT_NO_THROW(SpatialGrid(2, 8));
}

TEST(SpatialGrid, WavenumbersAreSignedIntegers) {
  const SpatialGrid g(1, 8);
  std::vector<double> k;
  for (int i = 0; i < 8; ++i) k.push_back(g.wavenumber(i));
  EXPECT_EQ(k, (std::vector<double>{0, 1, 2, 3, 4, -3, -2, -1}));
}

TEST(VelocityGrid, CellCentredAndSymmetric) {
  const VelocityGrid g(8, 4.0);
  EXPECT_DOUBLE_EQ(g.node(0), -3.5);
  EXPECT_DOUBLE_EQ(g.node(7), 3.5);
  EXPECT_DOUBLE_EQ(g.weight(), 1.0);
  EXPECT_THROW(VelocityGrid(12), ParameterError);
}

TEST(VelocityGrid, MaxwellianMassWithinTruncationTolerance) {
  for (int n : {16, 32}) {
    const VelocityGrid g(n, 8.0);
    EXPECT_NEAR(integrate(g, maxwellian(g)), 1.0, truncation_tolerance(g));
  }
}

TEST(Transform, ConstantHasOnlyDcMode) {
  const SpatialGrid g(2, 8);
  const Spectrum s = forward_transform(g, make_field(g, 1.0));
  for (std::size_t i = 1; i < s.coefficients.size(); ++i) EXPECT_LT(std::abs(s.coefficients[i]), 1e-14);
  EXPECT_GT(std::abs(s.coefficients[0]), 1.0);
}

TEST(Transform, CosineHasConjugatePair) {
  const SpatialGrid g(1, 16);
  const Spectrum s = forward_transform(g, sample(g, [](const std::array<double, 3>& x) { return std::cos(x[0]); }));
  const Complex plus = s.at({1}), minus = s.at({-1});
  EXPECT_NEAR(std::abs(plus), std::abs(minus), 1e-14);
  EXPECT_NEAR(std::abs(plus - std::conj(minus)), 0.0, 1e-14);
  for (int m = 2; m <= 8; ++m) EXPECT_LT(std::abs(s.at({m})), 1e-14);
}

TEST(Transform, RoundTripAndHermitian) {
  const SpatialGrid g(2, 16);
  std::mt19937 rng(3);
  std::normal_distribution<double> n;
  SpatialField f = make_field(g);
  for (double& v : f) v = n(rng);
  const Spectrum s = forward_transform(g, f);
  const SpatialField back = inverse_transform(g, s);
  double scale = 0.0;
  for (double v : f) scale = std::max(scale, std::abs(v));
  EXPECT_LT(max_abs_diff(back.span(), f.span()) / scale, 1e-13);
  for (int a = -7; a <= 7; ++a)
    for (int b = -7; b <= 7; ++b) EXPECT_LT(std::abs(s.at({a, b}) - std::conj(s.at({-a, -b}))), 1e-12);
}

TEST(Transform, ParsevalMatchesQuadratureNorm) {
  const SpatialGrid g(1, 32, 3.0);
  const SpatialField f = random_bandlimited(g, 5, 9);
  const Spectrum s = forward_transform(g, f);
  double sum = 0.0;
  for (const auto& c : s.coefficients) sum += std::norm(c);
  EXPECT_NEAR(std::sqrt(sum), l2_norm(g, f), 1e-12 * l2_norm(g, f));
}

TEST(SpectralDerivative, CosineToMinusSine) {
  const SpatialGrid g(1, 16);
  const SpatialField f = sample(g, [](const std::array<double, 3>& x) { return std::cos(x[0]); });
  const SpatialField d = spectral_derivative(g, f, Axis::x1, 1);
  const SpatialField ref = sample(g, [](const std::array<double, 3>& x) { return -std::sin(x[0]); });
  EXPECT_LT(max_abs_diff(d.span(), ref.span()), 1e-12);
}

TEST(SpectralDerivative, MaxwellianGradient) {
  const VelocityGrid g(32, 8.0);
  const VelocityField mu = maxwellian(g);
  const VelocityField d = spectral_derivative(g, mu, Axis::v1, 1);
  const VelocityField ref = sample(g, [](const Vec3& v) { return -v[0] * maxwellian_value(v); });
  EXPECT_LT(max_abs_diff(d.span(), ref.span()), truncation_tolerance(g));
}

TEST(SpectralDerivative, SecondOrderIsFirstTwice) {
  const SpatialGrid g(2, 16);
  const SpatialField f = random_bandlimited(g, 4, 5);
  const SpatialField d2 = spectral_derivative(g, f, Axis::x2, 2);
  const SpatialField d11 = spectral_derivative(g, spectral_derivative(g, f, Axis::x2, 1), Axis::x2, 1);
  EXPECT_LT(max_abs_diff(d2.span(), d11.span()), 1e-12 * 16);
}

TEST(SpectralDerivative, RejectsOrderThree) {
  const SpatialGrid g(1, 8);
  EXPECT_THROW(spectral_derivative(g, make_field(g), Axis::x1, 3), UnsupportedOrderError);
}

TEST(Quadrature, GaussianMomentsMatchRecursion) {
  const GaussianMomentTable table;
  const VelocityGrid g(32, 8.0);
  const VelocityField mu = maxwellian(g);
  for (int n = 1; n <= 2; ++n) {
    VelocityField w = mu;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec3 v = g.velocity(i);
      w[i] *= std::pow(v[0] * v[0] + v[1] * v[1] + v[2] * v[2], n);
    }
    EXPECT_NEAR(integrate(g, w), table[n], truncation_tolerance(g));
  }
  EXPECT_EQ(table[2], 15.0);
}

TEST(Quadrature, VelocityOnlyIntegralIsSpatialField) {
  const PhaseGrid g{SpatialGrid(1, 8), VelocityGrid(16, 8.0)};
  const PhaseField f = sample(g, [](const std::array<double, 3>& x, const Vec3& v) {
    return (1.0 + 0.5 * std::cos(x[0])) * maxwellian_value(v);
  });
  const SpatialField rho = integrate_velocity(g, f);
  for (std::size_t i = 0; i < g.x.size(); ++i)
    EXPECT_NEAR(rho[i], 1.0 + 0.5 * std::cos(g.x.position(i)[0]), 1e-6);
  EXPECT_NEAR(integrate(g, f), kTwoPi, 1e-5);
}
