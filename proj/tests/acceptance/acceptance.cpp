// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "vpl/checkpoint.hpp"
#include "vpl/config.hpp"
#include "vpl/diagnostics.hpp"
#include "vpl/dynamics.hpp"
#include "vpl/experiment.hpp"
#include "vpl/landau.hpp"
#include "vpl/parallel.hpp"
#include "vpl/poisson.hpp"
#include "vpl/weights.hpp"

using namespace vpl;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

constexpr std::array<double, 4> kGammas{-3.0, -1.0, 0.0, 1.0};

double relative_l2(const VelocityGrid& g, const VelocityField& a, const VelocityField& b) {
  return l2_norm(g, a - b) / l2_norm(g, b);
}

// 1. FFT convolution path against the O(N^2) quadrature.
Outcome fft_vs_direct() {
  const VelocityGrid g(16, 8.0);
  double worst = 0.0;
  for (double gamma : kGammas) {
    const auto tables = build_kernel_tables(gamma, g);
    for (int i = 0; i < 20; ++i) {
      const VelocityField a = random_velocity_field(g, 100 + 2 * i);
      const VelocityField b = random_velocity_field(g, 101 + 2 * i);
      worst = std::max(worst, relative_l2(g, q_landau_fft(a, b, *tables), q_landau_direct(g, a, b, gamma)));
    }
  }
  return {worst <= 1e-8, fmt("max relative L2 error %.3e over 80 pairs (bound 1e-8)", worst)};
}

// 2. Q(mu, mu) shrinks under velocity refinement.
Outcome equilibrium_annihilation() {
  bool ok = true;
  std::string detail;
  for (double gamma : kGammas) {
    const double coarse = equilibrium_residual(*build_kernel_tables(gamma, VelocityGrid(16, 8.0)));
    const double fine = equilibrium_residual(*build_kernel_tables(gamma, VelocityGrid(32, 8.0)));
    const double factor = coarse / fine;
    ok = ok && factor >= 10.0;
    detail += fmt("gamma=%g: %.2e -> %.2e (x%.1f)  ", gamma, coarse, fine, factor);
  }
  return {ok, detail + "(need x10)"};
}

// 3. Mass of Q(g, f); assembled right-hand side with the moment correction.
Outcome collision_invariants() {
  const VelocityGrid g(16, 8.0);
  const MomentCorrector corrector(g);
  double worst_mass = 0.0;
  for (double gamma : kGammas) {
    const LandauOperator op(build_kernel_tables(gamma, g));
    for (int i = 0; i < 10; ++i) {
      const VelocityField a = random_velocity_field(g, 300 + 2 * i);
      const VelocityField b = random_velocity_field(g, 301 + 2 * i);
      const VelocityField q = op.q(a, b);
      worst_mass = std::max(worst_mass, std::abs(corrector.moments(q.span())[0]) / (l2_norm(g, a) * l2_norm(g, b)));
    }
  }

  const PhaseGrid grid{SpatialGrid(1, 8), g};
  double worst_moment = 0.0;
  for (double gamma : kGammas) {
    const LandauOperator op(build_kernel_tables(gamma, g));
    for (std::uint64_t seed : {1u, 2u}) {
      SpeciesPair f = random_species(grid, seed);
      f.plus *= 1e-2;
      f.minus *= 1e-2;
      const SpeciesPair rhs = apply_collision_field(grid, f, op, {false, true});
      for (std::size_t ix = 0; ix < grid.x.size(); ++ix) {
        const auto qp = velocity_slice(grid, rhs.plus, ix);
        const auto qm = velocity_slice(grid, rhs.minus, ix);
        const auto m = corrector.pair_moments(qp, qm);
        double scale = 0.0;
        for (std::size_t i = 0; i < qp.size(); ++i) scale += (qp[i] * qp[i] + qm[i] * qm[i]) * g.weight();
        scale = std::sqrt(scale);
        for (double v : m) worst_moment = std::max(worst_moment, std::abs(v) / scale);
      }
    }
  }
  return {worst_mass <= 1e-12 && worst_moment <= 1e-12,
          fmt("|int Q|/(|g||f|) max %.2e; corrected RHS moments / |RHS| max %.2e (bound 1e-12)", worst_mass,
              worst_moment)};
}

// 4. Spectral Poisson solve.
Outcome poisson_exactness() {
  double worst_residual = 0.0;
  for (int dim = 1; dim <= 3; ++dim) {
    const SpatialGrid g(dim, dim == 3 ? 16 : 32, 5.0);
    std::mt19937_64 rng(dim);
    std::normal_distribution<double> n;
    SpatialField rho = make_field(g);
    double mean = 0.0;
    for (double& v : rho) mean += (v = n(rng));
    mean /= static_cast<double>(rho.size());
    for (double& v : rho) v -= mean;
    const PotentialSolution s = solve_potential(g, rho);
    worst_residual = std::max(worst_residual, poisson_residual(g, s.phi, rho) / l2_norm(g, rho));
  }
  double worst_eigen = 0.0;
  for (int dim = 1; dim <= 3; ++dim) {
    const SpatialGrid g(dim, 16);
    for (int m = 1; m <= 3; ++m) {
      const SpatialField rho = sample(g, [&](const std::array<double, 3>& x) {
        return std::cos(m * x[0]) + (dim > 1 ? std::sin(m * x[dim - 1]) : 0.0);
      });
      const SpatialField ref = sample(g, [&](const std::array<double, 3>& x) {
        return (std::cos(m * x[0]) + (dim > 1 ? std::sin(m * x[dim - 1]) : 0.0)) / (m * m);
      });
      const SpatialField phi = solve_potential(g, rho).phi;
      for (std::size_t i = 0; i < phi.size(); ++i) worst_eigen = std::max(worst_eigen, std::abs(phi[i] - ref[i]));
    }
  }
  return {worst_residual <= 1e-12 && worst_eigen <= 1e-13,
          fmt("residual/|rho| max %.2e (bound 1e-12); eigenfunction error %.2e (bound 1e-13)", worst_residual,
              worst_eigen)};
}

RunConfig base_run(const std::string& dir) {
  RunConfig c;
  c.output_dir = (std::filesystem::temp_directory_path() / ("vpl_acceptance_" + dir)).string();
  std::filesystem::remove_all(c.output_dir);
  return c;
}

// 5. Conservation of the nonlinear run.
Outcome global_conservation() {
  RunConfig c = base_run("conservation");
  c.gamma = -3.0;
  c.dim_x = 1;
  c.n_x = 16;
  c.n_v = 16;
  c.t_final = 1.0;
  c.dt = 1e-2;
  c.initial.amplitude = 1e-4;
  c.conservative_correction = true;
  c.dissipation = false;
  const InitialState init = make_initial_condition(c.initial, c.grid());
  const auto op = std::make_shared<LandauOperator>(build_kernel_tables(c.gamma, c.grid().v));
  const SystemState out = advance(init.state, c.t_final, c.step_config(), op);
  const ConservationReport r = check_conservation(out, init.state);
  const double mom = std::max({r.momentum[0].relative_drift(), r.momentum[1].relative_drift(),
                               r.momentum[2].relative_drift()});
  return {r.max_relative_drift() <= 1e-8,
          fmt("relative drift: mass+ %.2e, mass- %.2e, momentum %.2e, energy %.2e (bound 1e-8)",
              r.mass_plus.relative_drift(), r.mass_minus.relative_drift(), mom, r.energy.relative_drift())};
}

struct Series {
  std::vector<double> t, e_k, l2;
};

// 6. Maxwell molecules: exponential decay of E_k.
Outcome hard_potential_decay() {
  // gamma = 0 on L = 8 is unstable at this dt; L = 6 is the desk resolution.
  RunConfig c = base_run("hard");
  c.gamma = 0.0;
  c.n_x = 8;
  c.n_v = 16;
  c.velocity_cutoff = 6.0;
  c.dt = 0.05;
  c.t_final = 10.0;
  c.scheme = CollisionScheme::picard_implicit;
  c.initial.family = InitialFamily::two_mode;
  c.initial.modes = {1, 0};
  c.initial.amplitude = 1e-3;
  const PhaseGrid grid = c.grid();
  const WeightSpec spec = c.weights();
  const InitialState init = make_initial_condition(c.initial, grid);
  SystemState s = init.state;
  Series series;
  auto record = [&](const SystemState& st) {
    series.t.push_back(st.time());
    series.e_k.push_back(functional_E_k(st, spec, WeightLadder{}));
    series.l2.push_back(l2_norm(grid, st.f_plus()) + l2_norm(grid, st.f_minus()));
  };
  record(s);
  Integrator integrator(grid, std::make_shared<LandauOperator>(build_kernel_tables(c.gamma, grid.v)), c.step_config());
  integrator.advance(s, c.t_final, [&](const SystemState& st, const StepReport&) { record(st); });

  const FitWindow window{1.0, 10.0};
  const DecayFit fit = fit_decay(series.t, series.e_k, FitMode::exponential, window);
  const bool monotone = monotone_decreasing(series.t, series.e_k, 1.0);
  const DecayFit l2 = fit_decay(series.t, series.l2, FitMode::exponential, window);
  return {monotone && fit.rate > 0.0 && fit.r_squared >= 0.99,
          fmt("E_k monotone on [1,10]: %s; exponential fit rate %.3f, R^2 %.4f (need > 0, >= 0.99); "
              "for reference the L2 norm fits rate %.3f, R^2 %.4f",
              monotone ? "yes" : "no", fit.rate, fit.r_squared, l2.rate, l2.r_squared)};
}

// 7. Coulomb linearized decay is sub-exponential.
Outcome soft_potential_decay() {
  const PhaseGrid grid{SpatialGrid(1, 8), VelocityGrid(16, 8.0)};
  InitialCondition ic;
  ic.amplitude = 1e-3;
  const InitialState init = make_initial_condition(ic, grid);
  LinearizedExperimentConfig c;
  c.gamma = -3.0;
  c.dt = 0.05;
  c.t_final = 20.0;
  c.window = FitWindow{5.0, 20.0};
  const LinearizedExperimentResult r = linearized_decay_experiment(c, grid, init.state.species());
  const auto& e = r.series.energy;
  const bool decays = e.back() < e.front();
  return {decays && r.fitted && r.polynomial.r_squared > r.exponential.r_squared && r.polynomial.rate < 0.0,
          fmt("energy %.3e -> %.3e; on [5,20] polynomial R^2 %.4f slope %.3f vs exponential R^2 %.4f",
              e.front(), e.back(), r.polynomial.r_squared, r.polynomial.rate, r.exponential.r_squared)};
}

// 8. Pointwise weight inequalities.
Outcome weight_inequalities() {
  const auto samples = sample_velocities(1000, 20.0, 8);
  std::size_t specs = 0, failed = 0;
  std::string failures;
  auto run = [&](const WeightSpec& spec, const std::string& label) {
    ++specs;
    const InequalityReport r = weight_inequality_suite(spec, samples);
    if (!r.all_passed()) {
      ++failed;
      failures += " " + label;
    }
  };
  for (double gamma : kGammas)
    for (double k : {10.0, 14.0, 20.0}) run(WeightSpec::landau(gamma, k), fmt("landau(%g,%g)", gamma, k));
  for (double gamma : {-2.0, -1.0, 0.0, 1.0})
    for (double k : {17.0, 20.0, 26.0}) run(WeightSpec::boltzmann(gamma, 0.75, k), fmt("boltzmann(%g,%g)", gamma, k));

  const InequalityReport corrupted = weight_inequality_suite(WeightSpec::landau(-3.0, 10.0, 0.0), samples);
  const InequalityResult& floor = corrupted.find(kWeightFloor);
  const bool counterexample = !floor.passed();
  return {failed == 0 && counterexample,
          fmt("%zu/%zu weight specs pass every inequality%s; r = 2q fails the k+6 floor at %zu/%zu samples", specs - failed,
              specs, failures.empty() ? "" : (" (failed:" + failures + ")").c_str(), floor.failures, floor.checks)};
}

// 9. Projection identities and the lower norm equivalence.
Outcome projection_identities() {
  // h = 1 (n_v = 16, L = 8) resolves Gaussian moments only to ~1e-7.
  const PhaseGrid grid{SpatialGrid(1, 8), VelocityGrid(32, 8.0)};
  double worst = 0.0, lowest_ratio = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const ProjectionAlgebra pa = projection_algebra(grid, random_species(grid, seed), 10.0);
    worst = std::max({worst, pa.p_idempotence, pa.pi_idempotence, pa.pi_kills_complement});
    lowest_ratio = std::min(lowest_ratio, pa.equivalence_ratio);
  }
  return {worst <= 1e-11 && lowest_ratio >= 0.5,
          fmt("max identity defect %.2e (bound 1e-11); min equivalence ratio %.3f over 100 fields (need >= 1/2)", worst,
              lowest_ratio)};
}

// 10. Implicit collision iteration.
Outcome picard_contraction() {
  const PhaseGrid grid{SpatialGrid(1, 8), VelocityGrid(16, 8.0)};
  InitialCondition ic;
  ic.family = InitialFamily::random_bandlimited;
  ic.amplitude = 1e-3;
  ic.modes = {2};
  SystemState s = make_initial_condition(ic, grid).state;
  TimeStepConfig c;
  c.dt = 1e-2;
  c.scheme = CollisionScheme::picard_implicit;
  Integrator integrator(grid, std::make_shared<LandauOperator>(build_kernel_tables(-3.0, grid.v)), c);
  int iterations = 0;
  double ratio = 0.0;
  for (int i = 0; i < 20; ++i) {
    const StepReport r = integrator.step(s, c.dt);
    if (!r.picard) return {false, "no Picard report"};
    iterations = std::max(iterations, r.picard->iterations);
    ratio = std::max(ratio, r.picard->max_ratio());
  }
  return {iterations <= 10 && ratio < 1.0,
          fmt("over 20 steps: max %d iterations (bound 10), max contraction ratio %.3e (need < 1)", iterations, ratio)};
}

std::string bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 11. Thread-count independence and checkpoint round trip.
Outcome determinism() {
  auto run = [](int threads) {
    RunConfig c = base_run("threads_" + std::to_string(threads));
    c.n_x = 8;
    c.n_v = 8;
    c.velocity_cutoff = 6.0;
    c.t_final = 0.2;
    c.dt = 0.02;
    c.initial.family = InitialFamily::random_bandlimited;
    c.initial.modes = {2};
    c.initial.seed = 11;
    c.checkpoint_every = 5;
    const int saved = thread_count();
    set_thread_count(threads);
    run_experiment(c);
    set_thread_count(saved);
    return std::filesystem::path(c.output_dir);
  };
  const auto one = run(1), four = run(4);
  bool identical = true;
  for (const char* name : {"diagnostics.csv", "checkpoint_00000005.vpl", "checkpoint_00000010.vpl"}) {
    const std::string a = bytes(one / name);
    identical = identical && !a.empty() && a == bytes(four / name);
  }
  // The summary differs only in wall time and the recorded thread count.
  auto summary = [](const std::filesystem::path& dir) {
    auto j = nlohmann::json::parse(bytes(dir / "summary.json"));
    j.erase("wall_seconds");
    j.erase("threads");
    return j.dump();
  };
  identical = identical && summary(one) == summary(four);

  const SystemState s = load_checkpoint(one / "checkpoint_00000010.vpl");
  std::stringstream buf;
  save_checkpoint(s, buf);
  const SystemState back = load_checkpoint(buf);
  const bool round_trip = back.species() == s.species() && back.phi().values() == s.phi().values() &&
                          back.time() == s.time() && back.step() == s.step() &&
                          buf.str() == bytes(one / "checkpoint_00000010.vpl");
  if (std::getenv("VPL_KEEP") == nullptr) {
    std::filesystem::remove_all(one);
    std::filesystem::remove_all(four);
  }
  return {identical && round_trip, fmt("outputs with 1 and 4 threads identical: %s; checkpoint round trip bit-exact: %s",
                                       identical ? "yes" : "no", round_trip ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"collision operator FFT vs direct", fft_vs_direct},
      {"equilibrium annihilation under refinement", equilibrium_annihilation},
      {"collision invariants", collision_invariants},
      {"Poisson exactness", poisson_exactness},
      {"global conservation", global_conservation},
      {"gamma = 0 exponential decay of E_k", hard_potential_decay},
      {"gamma = -3 sub-exponential linearized decay", soft_potential_decay},
      {"weight inequalities", weight_inequalities},
      {"projection algebra", projection_identities},
      {"Picard contraction", picard_contraction},
      {"determinism and checkpointing", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.passed) ++failures;
    std::printf("criterion %2d %s: %s [%.1f s] %s\n", id, o.passed ? "PASS" : "FAIL", criteria[i].first.c_str(),
                seconds, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
