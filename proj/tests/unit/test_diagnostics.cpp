#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "vpl/diagnostics.hpp"
#include "vpl/experiment.hpp"

using namespace vpl;

namespace {

struct Series {
  std::vector<double> t, y;
};

template <class Fn>
Series synthetic(double t0, double t1, int n, Fn fn) {
  Series s;
  for (int i = 0; i < n; ++i) {
    const double t = t0 + (t1 - t0) * i / (n - 1);
    s.t.push_back(t);
    s.y.push_back(fn(t));
  }
  return s;
}

SpeciesPair streaming(const PhaseGrid& g, double t) {
  const PhaseField f = sample(g, [&](const std::array<double, 3>& x, const Vec3& v) {
    return 1e-3 * std::cos(x[0] - v[0] * t) * maxwellian_value(v);
  });
  PhaseField m = f;
  m *= -1.0;
  return {f, m};
}

}  // namespace

TEST(Csv, HeaderAndRowsRoundTrip) {
  DiagnosticsRecord r;
  r.time = 0.1;
  r.step = 3;
  r.energy_k = 1.0 / 3.0;
  r.momentum = {1e-17, -2.5, 0.0};
  r.picard_iterations = 4;
  std::ostringstream out;
  write_csv_header(out);
  write_csv_row(out, r);
  r.time = 0.2;
  write_csv_row(out, r);
  std::istringstream in(out.str());
  const auto cols = read_csv_columns(in, {"time", "E_k", "picard_iterations"});
  ASSERT_EQ(cols[0].size(), 2u);
  EXPECT_EQ(cols[0][1], 0.2);
  EXPECT_EQ(cols[1][0], 1.0 / 3.0);
  EXPECT_EQ(cols[2][0], 4.0);
  EXPECT_EQ(csv_columns().front(), "time");

  std::istringstream again(out.str());
  EXPECT_THROW(read_csv_columns(again, {"no_such_column"}), FormatError);
}

TEST(Fit, ExactExponential) {
  const Series s = synthetic(0.0, 5.0, 101, [](double t) { return std::exp(-2.0 * t); });
  const DecayFit f = fit_decay(s.t, s.y, FitMode::exponential);
  EXPECT_NEAR(f.rate, 2.0, 1e-6);
  EXPECT_GT(f.r_squared, 1.0 - 1e-12);
  EXPECT_NEAR(f.t_start, 0.5, 1e-12);
}

TEST(Fit, ExactPowerLaw) {
  const Series s = synthetic(0.0, 20.0, 201, [](double t) { return std::pow(1.0 + t, -3.0); });
  const DecayFit f = fit_decay(s.t, s.y, FitMode::polynomial);
  EXPECT_NEAR(f.rate, -3.0, 1e-6);
  EXPECT_GT(f.r_squared, 1.0 - 1e-12);
}

TEST(Fit, OscillatingEnvelope) {
  const Series s = synthetic(0.0, 20.0, 401, [](double t) { return std::exp(-t) * (2.0 + std::cos(t)); });
  const DecayFit f = fit_decay(s.t, s.y, FitMode::exponential, {2.0, 20.0});
  EXPECT_GE(f.rate, 0.9);
  EXPECT_LE(f.rate, 1.1);
  EXPECT_GE(f.r_squared, 0.99);
}

TEST(Fit, Errors) {
  const Series few = synthetic(0.0, 1.0, 10, [](double t) { return std::exp(-t); });
  EXPECT_THROW(fit_decay(few.t, few.y, FitMode::exponential), FitError);
  Series bad = synthetic(0.0, 1.0, 50, [](double t) { return std::exp(-t); });
  bad.y[30] = 0.0;
  EXPECT_THROW(fit_decay(bad.t, bad.y, FitMode::exponential), FitError);
  EXPECT_EQ(parse_fit_mode("polynomial"), FitMode::polynomial);
  EXPECT_THROW(parse_fit_mode("linear"), ParameterError);
}

TEST(Fit, Monotonicity) {
  const Series s = synthetic(0.0, 10.0, 101, [](double t) { return std::exp(-t) * (1.0 + 0.5 * std::sin(3 * t)); });
  EXPECT_FALSE(monotone_decreasing(s.t, s.y, 0.0));
  const Series d = synthetic(0.0, 10.0, 101, [](double t) { return 1.0 / (1.0 + t); });
  EXPECT_TRUE(monotone_decreasing(d.t, d.y, 0.0));
}

TEST(Positivity, ZeroAndNegative) {
  const PhaseGrid g{SpatialGrid(1, 4), VelocityGrid(8, 6.0)};
  const PositivityReport r = positivity_monitor(SystemState(g));
  const VelocityField mu = maxwellian(g.v);
  double lo = mu[0];
  for (double v : mu) lo = std::min(lo, v);
  EXPECT_EQ(r.min_plus, lo);
  EXPECT_FALSE(r.negative());
  const Vec3 corner = g.v.velocity(r.location_plus % g.v.size());
  EXPECT_DOUBLE_EQ(std::abs(corner[0]), 5.25);
  EXPECT_DOUBLE_EQ(std::abs(corner[2]), 5.25);

  const PhaseField minus_two = sample(g, [](const std::array<double, 3>&, const Vec3& v) { return -2.0 * maxwellian_value(v); });
  EXPECT_TRUE(positivity_monitor(SystemState(g, {minus_two, minus_two})).negative());
}

TEST(MomentBalance, ZeroForStationaryState) {
  const PhaseGrid g{SpatialGrid(1, 8), VelocityGrid(8, 6.0)};
  const BalanceResidual r = moment_balance_residual(SystemState(g), SystemState(g), 0.1);
  EXPECT_EQ(r.plus, 0.0);
  EXPECT_EQ(r.minus, 0.0);
}

TEST(MomentBalance, SecondOrderForFreeStreaming) {
  const PhaseGrid g{SpatialGrid(1, 16), VelocityGrid(16, 8.0)};
  // Start away from t = 0, where the density's odd time derivatives vanish.
  const SystemState s0(g, streaming(g, 0.5));
  auto residual = [&](double dt) { return moment_balance_residual(s0, SystemState(g, streaming(g, 0.5 + dt)), dt).plus; };
  const double r1 = residual(0.1), r2 = residual(0.05);
  EXPECT_NEAR(std::log2(r1 / r2), 2.0, 0.1);
}

TEST(ProjectionAlgebra, RandomFieldsOnFineGrid) {
  const PhaseGrid g{SpatialGrid(1, 8), VelocityGrid(32, 8.0)};
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const ProjectionAlgebra pa = projection_algebra(g, random_species(g, seed), 10.0);
    EXPECT_LT(pa.p_idempotence, 1e-11);
    EXPECT_LT(pa.pi_idempotence, 1e-11);
    EXPECT_LT(pa.pi_kills_complement, 1e-11);
    EXPECT_GE(pa.equivalence_ratio, 0.5);
  }
}

TEST(Measure, RecordIsConsistent) {
  const PhaseGrid g{SpatialGrid(1, 4), VelocityGrid(8, 6.0)};
  const SystemState s(g, streaming(g, 0.0));
  RecordOptions opt;
  const DiagnosticsRecord r = measure(s, opt);
  EXPECT_NEAR(r.energy, r.kinetic_energy + r.field_energy, 1e-15);
  EXPECT_GT(r.field_energy, 0.0);
  EXPECT_GT(r.energy_k, 0.0);
  EXPECT_GT(r.dissipation_k, 0.0);
  EXPECT_NEAR(r.norm_P * r.norm_P + r.norm_I_minus_P * r.norm_I_minus_P, 0.0, 1.0);
}

TEST(LinearizedExperiment, ZeroDataStaysZero) {
  const PhaseGrid g{SpatialGrid(1, 4), VelocityGrid(8, 6.0)};
  LinearizedExperimentConfig c;
  c.t_final = 0.5;
  c.dt = 0.05;
  const LinearizedExperimentResult r = linearized_decay_experiment(c, g, make_species(g));
  EXPECT_FALSE(r.fitted);
  for (double e : r.series.energy) EXPECT_EQ(e, 0.0);
}

TEST(LinearizedExperiment, MaxwellMoleculeAnisotropyDecaysExponentially) {
  const PhaseGrid g{SpatialGrid(1, 4), VelocityGrid(16, 8.0)};
  const PhaseField f = sample(g, [](const std::array<double, 3>&, const Vec3& v) {
    return 1e-3 * 0.5 * (v[0] * v[0] - v[1] * v[1]) * maxwellian_value(v);
  });
  LinearizedExperimentConfig c;
  c.gamma = 0.0;
  c.dt = 0.01;
  c.t_final = 0.5;
  const LinearizedExperimentResult r = linearized_decay_experiment(c, g, {f, f});
  ASSERT_TRUE(r.fitted);
  EXPECT_GT(r.exponential.rate, 0.0);
  EXPECT_GE(r.exponential.r_squared, 0.99);
  EXPECT_LT(r.series.energy.back(), r.series.energy.front());
}
