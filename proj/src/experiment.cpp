#include "vpl/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>

#include <json.hpp>

#include "vpl/checkpoint.hpp"
#include "vpl/landau.hpp"
#include "vpl/parallel.hpp"
#include "vpl/poisson.hpp"

namespace vpl {

namespace {

using nlohmann::json;

constexpr int kMaxHalvings = 10;

// Velocity polynomial of degree <= 2: c0 + c.v + sum_{i<=j} d_ij v_i v_j.
struct Quadratic {
  double c0 = 0.0;
  Vec3 c1{};
  std::array<double, 6> c2{};
  double operator()(const Vec3& v) const {
    double s = c0;
    for (int i = 0; i < 3; ++i) s += c1[i] * v[i];
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) s += c2[sym_index(i, j)] * v[i] * v[j];
    return s;
  }
};

Quadratic random_quadratic(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Quadratic q;
  q.c0 = u(rng);
  for (auto& c : q.c1) c = u(rng);
  for (auto& c : q.c2) c = 0.5 * u(rng);
  return q;
}

std::vector<std::array<int, 3>> spatial_modes(int dim, int band) {
  std::vector<std::array<int, 3>> out;
  const int lo = dim >= 1 ? -band : 0;
  for (int a = lo; a <= band; ++a)
    for (int b = dim >= 2 ? -band : 0; b <= (dim >= 2 ? band : 0); ++b)
      for (int c = dim >= 3 ? -band : 0; c <= (dim >= 3 ? band : 0); ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        out.push_back({a, b, c});
      }
  return out;
}

// Random combination of spatial Fourier modes times velocity quadratics, sup 1.
PhaseField random_profile(const PhaseGrid& grid, int band, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double kx = kTwoPi / grid.x.length();
  struct Term {
    std::array<int, 3> m;
    double phase;
    Quadratic q;
  };
  std::vector<Term> terms;
  for (const auto& m : spatial_modes(grid.x.dim(), band)) terms.push_back({m, std::numbers::pi * u(rng), random_quadratic(rng)});
  PhaseField p = sample(grid, [&](const std::array<double, 3>& x, const Vec3& v) {
    double s = 0.0;
    for (const auto& t : terms) {
      double arg = t.phase;
      for (int c = 0; c < grid.x.dim(); ++c) arg += kx * t.m[c] * x[c];
      s += std::cos(arg) * t.q(v);
    }
    return s;
  });
  double sup = 0.0;
  for (double v : p) sup = std::max(sup, std::abs(v));
  if (sup > 0.0) p *= 1.0 / sup;
  return p;
}

SpeciesPair raw_initial(const InitialCondition& d, const PhaseGrid& grid, double eps) {
  const double kx = kTwoPi / grid.x.length();
  switch (d.family) {
    case InitialFamily::single_mode: {
      const int m = d.modes.at(0);
      auto make = [&](double sign) {
        return sample(grid, [&](const std::array<double, 3>& x, const Vec3& v) {
          return sign * eps * std::cos(kx * m * x[0]) * maxwellian_value(v);
        });
      };
      return {make(1.0), make(-1.0)};
    }
    case InitialFamily::two_mode: {
      const int m1 = d.modes.at(0), m2 = d.modes.at(1);
      auto make = [&](double sign) {
        return sample(grid, [&](const std::array<double, 3>& x, const Vec3& v) {
          const double aniso = 0.5 * (v[0] * v[0] - v[1] * v[1]);
          return eps * (sign * std::cos(kx * m1 * x[0]) + std::cos(kx * m2 * x[0]) * aniso) * maxwellian_value(v);
        });
      };
      return {make(1.0), make(-1.0)};
    }
    case InitialFamily::random_bandlimited: {
      std::mt19937_64 rng(d.seed);
      const int band = d.modes.at(0);
      SpeciesPair out{random_profile(grid, band, rng), random_profile(grid, band, rng)};
      const VelocityField mu = maxwellian(grid.v);
      const std::size_t nv = grid.v.size();
      for (std::size_t p = 0; p < grid.size(); ++p) {
        out.plus[p] *= eps * mu[p % nv];
        out.minus[p] *= eps * mu[p % nv];
      }
      return out;
    }
  }
  throw ParameterError("unknown initial family");
}

// Adds x-independent span{1, v, |v|^2} mu corrections so that the global
// masses, total momentum and total energy match the equilibrium.
void remove_global_moments(const PhaseGrid& grid, SpeciesPair& f) {
  const MomentCorrector corrector(grid.v);
  const std::size_t nx = grid.x.size();
  std::array<std::vector<double>, 6> per_node;
  for (auto& v : per_node) v.resize(nx);
  for (std::size_t ix = 0; ix < nx; ++ix) {
    const auto m = corrector.pair_moments(velocity_slice(grid, f.plus, ix), velocity_slice(grid, f.minus, ix));
    for (int c = 0; c < 6; ++c) per_node[c][ix] = m[c];
  }
  const double volume = grid.x.volume();
  const SystemState current(grid, f);
  const double field = field_energy(grid.x, current.phi());
  std::array<double, 6> target{};
  for (int c = 0; c < 6; ++c) {
    const double total = pairwise_sum(per_node[c]) * grid.x.cell_volume();
    const double wanted = c == 5 ? -field : 0.0;
    target[c] = (wanted - total) / volume;
  }
  std::vector<double> qp(grid.v.size(), 0.0), qm(grid.v.size(), 0.0);
  corrector.correct_pair(qp, qm, target);
  for (std::size_t ix = 0; ix < nx; ++ix) {
    auto sp = velocity_slice(grid, f.plus, ix);
    auto sm = velocity_slice(grid, f.minus, ix);
    for (std::size_t iv = 0; iv < qp.size(); ++iv) {
      sp[iv] += qp[iv];
      sm[iv] += qm[iv];
    }
  }
}

bool positive(const PhaseGrid& grid, const SpeciesPair& f) {
  const VelocityField mu = maxwellian(grid.v);
  const std::size_t nv = grid.v.size();
  for (std::size_t p = 0; p < grid.size(); ++p)
    if (!(mu[p % nv] + f.plus[p] > 0.0) || !(mu[p % nv] + f.minus[p] > 0.0)) return false;
  return true;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

InitialState make_initial_condition(const InitialCondition& descriptor, const PhaseGrid& grid) {
  double eps = descriptor.amplitude;
  std::vector<std::string> warnings;
  for (int halvings = 0; halvings <= kMaxHalvings; ++halvings) {
    SpeciesPair f = raw_initial(descriptor, grid, eps);
    if (eps != 0.0) remove_global_moments(grid, f);
    if (positive(grid, f)) {
      InitialState out{SystemState(grid, std::move(f)), eps, halvings, std::move(warnings)};
      return out;
    }
    if (halvings == kMaxHalvings) break;
    warnings.push_back("mu + f0 not positive at amplitude " + fmt(eps) + "; halving");
    eps *= 0.5;
  }
  throw ConstructionError("initial amplitude could not be made positive within " + std::to_string(kMaxHalvings) +
                          " halvings");
}

VelocityField random_velocity_field(const VelocityGrid& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> width(0.9, 1.3);
  const Quadratic q = random_quadratic(rng);
  Vec3 c{};
  do {
    for (auto& x : c) x = u(rng);
  } while (c[0] * c[0] + c[1] * c[1] + c[2] * c[2] > 1.0);
  const double s = width(rng);
  return sample(grid, [&](const Vec3& v) {
    double r2 = 0.0;
    for (int i = 0; i < 3; ++i) r2 += (v[i] - c[i]) * (v[i] - c[i]);
    return q(v) * std::exp(-0.5 * r2 / (s * s)) * std::pow(kTwoPi * s * s, -1.5);
  });
}

SpeciesPair random_species(const PhaseGrid& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SpeciesPair out = make_species(grid);
  const VelocityField mu = maxwellian(grid.v);
  for (Species sp : {Species::plus, Species::minus}) {
    PhaseField profile = random_profile(grid, 2, rng);
    // A spatially uniform part so that Pi f is not trivially zero.
    const VelocityField uniform = random_velocity_field(grid.v, rng());
    const std::size_t nv = grid.v.size();
    for (std::size_t p = 0; p < grid.size(); ++p) out[sp][p] = profile[p] * mu[p % nv] + 0.5 * uniform[p % nv];
  }
  return out;
}

namespace {

json fit_to_json(const DecayFit& f) {
  return {{"mode", to_string(f.mode)}, {"rate", f.rate},       {"intercept", f.intercept},
          {"t_start", f.t_start},      {"t_end", f.t_end},     {"samples", f.samples},
          {"r_squared", f.r_squared}};
}

struct Checks {
  json list = json::array();
  std::vector<std::string> failed;
  void add(const std::string& name, bool passed, const std::string& detail) {
    list.push_back({{"name", name}, {"passed", passed}, {"detail", detail}});
    if (!passed) failed.push_back(name);
  }
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, std::uint64_t step) {
  char name[48];
  std::snprintf(name, sizeof name, "checkpoint_%08llu.vpl", static_cast<unsigned long long>(step));
  return dir / name;
}

json conservation_json(const ConservationReport& r) {
  return {{"mass_plus", r.mass_plus.relative_drift()},
          {"mass_minus", r.mass_minus.relative_drift()},
          {"momentum", {r.momentum[0].relative_drift(), r.momentum[1].relative_drift(), r.momentum[2].relative_drift()}},
          {"energy", r.energy.relative_drift()},
          {"max", r.max_relative_drift()}};
}

FitWindow fit_window(const RunConfig& c) { return FitWindow{c.fit_t_start, c.fit_t_end, c.transient_fraction}; }

constexpr double kConservationTolerance = 1e-8;
// Spectral ringing makes mu + f slightly negative where mu is tiny. A run is
// flagged when the undershoot exceeds this fraction of sup |f_pm|.
constexpr double kPositivityTolerance = 1e-2;

void nonlinear_run(const RunConfig& config, SystemState state, const SystemState& reference, json& summary,
                   Checks& checks, const std::filesystem::path& dir, bool append) {
  const PhaseGrid grid = state.grid();
  const auto tables = build_kernel_tables(config.gamma, grid.v);
  const auto op = std::make_shared<LandauOperator>(tables);
  const double eps_op = equilibrium_residual(*tables);
  TimeStepConfig step = config.step_config();
  step.dump_path = dir / "blowup.vpl";
  Integrator integrator(grid, op, step);

  RecordOptions rec;
  rec.weights = config.weights();
  rec.dissipation = config.dissipation;

  const auto csv_path = dir / "diagnostics.csv";
  std::ofstream csv(csv_path, append ? std::ios::binary | std::ios::app : std::ios::binary);
  if (!csv) throw FormatError("cannot write " + csv_path.string());
  if (!append) write_csv_header(csv);

  std::vector<double> times, energies;
  double lowest = std::numeric_limits<double>::infinity();
  double undershoot = 0.0;
  auto emit = [&](const SystemState& st, const SystemState* prev, const StepReport* report) {
    DiagnosticsRecord r = measure(st, rec);
    r.eps_op = eps_op;
    if (report) {
      r.dt = report->dt;
      if (report->picard) {
        r.picard_iterations = report->picard->iterations;
        r.picard_max_ratio = report->picard->max_ratio();
      }
    }
    if (prev && report) {
      const BalanceResidual b = moment_balance_residual(*prev, st, report->dt);
      r.balance_plus = b.plus;
      r.balance_minus = b.minus;
    }
    const double low = std::min(r.min_density_plus, r.min_density_minus);
    lowest = std::min(lowest, low);
    double sup = 0.0;
    for (const PhaseField* f : {&st.f_plus(), &st.f_minus()})
      for (double v : *f) sup = std::max(sup, std::abs(v));
    if (low < 0.0) undershoot = std::max(undershoot, sup > 0.0 ? -low / sup : std::numeric_limits<double>::infinity());
    write_csv_row(csv, r);
    times.push_back(r.time);
    energies.push_back(r.energy_k);
  };
  if (!append) emit(state, nullptr, nullptr);

  SystemState prev = state;
  std::uint64_t count = 0;
  const auto t0 = std::chrono::steady_clock::now();
  integrator.advance(state, config.t_final, [&](const SystemState& st, const StepReport& report) {
    ++count;
    const bool last = st.time() >= config.t_final;
    if (count % static_cast<std::uint64_t>(config.diagnostics_every) == 0 || last) emit(st, &prev, &report);
    if (config.checkpoint_every > 0 && (st.step() % static_cast<std::uint64_t>(config.checkpoint_every) == 0 || last))
      save_checkpoint(st, checkpoint_path(dir, st.step()));
    prev = st;
  });
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  csv.flush();

  const ConservationReport cons = check_conservation(state, reference);
  summary["conservation"] = conservation_json(cons);
  summary["eps_op"] = eps_op;
  summary["final_time"] = state.time();
  summary["steps"] = state.step();
  summary["wall_seconds"] = seconds;
  summary["warnings"] = integrator.warnings();
  summary["csv"] = csv_path.filename().string();

  checks.add("finite", true, "no non-finite values");
  summary["min_density"] = lowest;
  summary["max_relative_undershoot"] = undershoot;
  checks.add("positivity", undershoot <= kPositivityTolerance,
             "max of -min(mu + f_pm) / sup|f_pm| " + fmt(undershoot) + " <= " + fmt(kPositivityTolerance));
  if (config.conservative_correction)
    checks.add("conservation", cons.max_relative_drift() <= kConservationTolerance,
               "max relative drift " + fmt(cons.max_relative_drift()) + " <= 1e-8");

  if (!append) {
    try {
      const DecayFit exp_fit = fit_decay(times, energies, FitMode::exponential, fit_window(config));
      const DecayFit poly_fit = fit_decay(times, energies, FitMode::polynomial, fit_window(config));
      summary["fits"] = {{"series", "E_k"}, {"exponential", fit_to_json(exp_fit)}, {"polynomial", fit_to_json(poly_fit)}};
      if (config.gamma >= 0.0)
        checks.add("decay", exp_fit.rate > 0.0, "exponential rate " + fmt(exp_fit.rate) + " > 0");
      else
        checks.add("decay", poly_fit.rate < 0.0, "polynomial slope " + fmt(poly_fit.rate) + " < 0");
    } catch (const FitError& e) {
      summary["fits"] = {{"series", "E_k"}, {"error", e.what()}};
    }
  }
}

void linearized_run(const RunConfig& config, const SystemState& initial, json& summary, Checks& checks,
                    const std::filesystem::path& dir) {
  const PhaseGrid grid = initial.grid();
  LinearizedExperimentConfig lc;
  lc.gamma = config.gamma;
  lc.dt = config.dt;
  lc.t_final = config.t_final;
  lc.scheme = config.scheme;
  lc.record_every = config.diagnostics_every;
  lc.window = fit_window(config);
  const auto t0 = std::chrono::steady_clock::now();
  const LinearizedExperimentResult r = linearized_decay_experiment(lc, grid, initial.species());
  summary["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const auto csv_path = dir / "diagnostics.csv";
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw FormatError("cannot write " + csv_path.string());
  csv << "time,norm_P,norm_I_minus_P,energy\n";
  for (std::size_t i = 0; i < r.series.time.size(); ++i) {
    char line[160];
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", r.series.time[i], r.series.norm_P[i],
                  r.series.norm_I_minus_P[i], r.series.energy[i]);
    csv << line;
  }
  summary["csv"] = csv_path.filename().string();
  const auto& e = r.series.energy;
  if (!r.fitted) {
    summary["fits"] = {{"series", "energy"}, {"note", "identically zero series"}};
    checks.add("decay", true, "zero initial data stays zero");
    return;
  }
  summary["fits"] = {{"series", "energy"},
                     {"exponential", fit_to_json(r.exponential)},
                     {"polynomial", fit_to_json(r.polynomial)}};
  checks.add("decay", e.back() < e.front(), "energy " + fmt(e.front()) + " -> " + fmt(e.back()));
}

void operator_test(const RunConfig& config, json& summary, Checks& checks) {
  const VelocityGrid vg(config.n_v, config.velocity_cutoff);
  const auto tables = build_kernel_tables(config.gamma, vg);
  json op;
  op["eps_op"] = equilibrium_residual(*tables);
  if (config.n_v <= kDirectOracleMaxPoints) {
    double worst = 0.0;
    constexpr int kPairs = 4;
    for (int i = 0; i < kPairs; ++i) {
      const VelocityField g = random_velocity_field(vg, config.seed * 1000 + 2 * i);
      const VelocityField f = random_velocity_field(vg, config.seed * 1000 + 2 * i + 1);
      const VelocityField fast = q_landau_fft(g, f, *tables);
      const VelocityField direct = q_landau_direct(vg, g, f, config.gamma);
      const double err = l2_norm(vg, fast - direct) / l2_norm(vg, direct);
      worst = std::max(worst, err);
    }
    op["pairs"] = kPairs;
    op["fft_vs_direct_relative_error"] = worst;
    checks.add("fft_vs_direct", worst <= 1e-8, "max relative error " + fmt(worst) + " <= 1e-8");
  } else {
    op["fft_vs_direct_relative_error"] = nullptr;
    op["note"] = "direct oracle skipped above n_v = " + std::to_string(kDirectOracleMaxPoints);
  }
  summary["operator"] = op;

  const WeightSpec spec = config.weights();
  const InequalityReport report = weight_inequality_suite(spec, sample_velocities(1000, 3.0 * config.velocity_cutoff, config.seed));
  json suite = json::array();
  std::size_t passed = 0;
  for (const auto& r : report.results) {
    suite.push_back({{"name", r.name}, {"checks", r.checks}, {"failures", r.failures}, {"worst_log_margin", r.worst_log_margin}});
    if (r.passed()) ++passed;
  }
  summary["weight_suite"] = {{"inequalities", suite}, {"passed", passed}, {"total", report.results.size()}};
  checks.add("weight_suite", report.all_passed(), std::to_string(passed) + "/" + std::to_string(report.results.size()) + " inequalities");

  const PhaseGrid grid{SpatialGrid(config.dim_x, config.n_x, config.box_length), vg};
  const SpeciesPair f = random_species(grid, config.seed);
  const ProjectionAlgebra pa = projection_algebra(grid, f, config.k);
  summary["projections"] = {{"P_idempotence", pa.p_idempotence},
                            {"Pi_idempotence", pa.pi_idempotence},
                            {"Pi_I_minus_P", pa.pi_kills_complement},
                            {"equivalence_ratio", pa.equivalence_ratio}};
  const double worst = std::max({pa.p_idempotence, pa.pi_idempotence, pa.pi_kills_complement});
  checks.add("projections", worst <= 1e-11 && pa.equivalence_ratio >= 0.5,
             "max defect " + fmt(worst) + ", equivalence ratio " + fmt(pa.equivalence_ratio));
}

ExperimentOutcome finish(const std::filesystem::path& dir, json summary, Checks& checks) {
  summary["checks"] = checks.list;
  summary["passed"] = checks.failed.empty() && !summary.contains("error");
  ExperimentOutcome out;
  out.summary_path = dir / "summary.json";
  out.csv_path = dir / "diagnostics.csv";
  out.failed_checks = checks.failed;
  out.exit_status = summary.contains("error") ? 2 : (checks.failed.empty() ? 0 : 1);
  write_text(out.summary_path, summary.dump(2) + "\n");
  return out;
}

json summary_header(const RunConfig& config) {
  return {{"schema_version", kSummarySchemaVersion},
          {"csv_schema_version", kCsvSchemaVersion},
          {"mode", to_string(config.mode())},
          {"model", to_string(config.model)},
          {"gamma", config.gamma},
          {"k", config.k},
          {"threads", thread_count()}};
}

}  // namespace

ExperimentOutcome run_experiment(const RunConfig& config) {
  const std::filesystem::path dir = config.output_dir;
  std::filesystem::create_directories(dir);
  write_text(dir / "config.ini", echo_config(config));
  json summary = summary_header(config);
  Checks checks;
  try {
    if (config.mode() == RunMode::operator_test) {
      operator_test(config, summary, checks);
    } else {
      InitialState init = make_initial_condition(config.initial, config.grid());
      summary["initial"] = {{"family", to_string(config.initial.family)},
                            {"amplitude", init.amplitude},
                            {"halvings", init.halvings},
                            {"warnings", init.warnings}};
      if (config.mode() == RunMode::linearized) {
        linearized_run(config, init.state, summary, checks, dir);
      } else {
        if (config.checkpoint_every > 0) save_checkpoint(init.state, checkpoint_path(dir, 0));
        const SystemState reference = init.state;
        nonlinear_run(config, std::move(init.state), reference, summary, checks, dir, false);
      }
    }
  } catch (const Error& e) {
    summary["error"] = {{"type", "library"}, {"message", e.what()}};
  } catch (const std::exception& e) {
    summary["error"] = {{"type", "runtime"}, {"message", e.what()}};
  }
  return finish(dir, std::move(summary), checks);
}

ExperimentOutcome resume_experiment(const RunConfig& config, const std::filesystem::path& checkpoint) {
  const std::filesystem::path dir = config.output_dir;
  std::filesystem::create_directories(dir);
  json summary = summary_header(config);
  summary["resumed_from"] = checkpoint.string();
  Checks checks;
  try {
    if (config.mode() != RunMode::nonlinear) throw UnsupportedError("only nonlinear runs can be resumed");
    SystemState state = load_checkpoint(checkpoint);
    if (!(state.grid() == config.grid())) throw GridMismatchError("checkpoint grid differs from the configuration");
    const SystemState reference = state;
    const bool append = std::filesystem::exists(dir / "diagnostics.csv");
    nonlinear_run(config, std::move(state), reference, summary, checks, dir, append);
  } catch (const Error& e) {
    summary["error"] = {{"type", "library"}, {"message", e.what()}};
  } catch (const std::exception& e) {
    summary["error"] = {{"type", "runtime"}, {"message", e.what()}};
  }
  return finish(dir, std::move(summary), checks);
}

}  // namespace vpl
