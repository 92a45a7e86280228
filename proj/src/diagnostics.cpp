#include "vpl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "vpl/parallel.hpp"
#include "vpl/poisson.hpp"

namespace vpl {

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> columns = {
      "time",           "step",           "dt",
      "mass_plus",      "mass_minus",     "momentum_1",
      "momentum_2",     "momentum_3",     "kinetic_energy",
      "field_energy",   "energy",         "E_k",
      "D_k",            "norm_P",         "norm_I_minus_P",
      "min_density_plus", "min_density_minus", "grad_phi_H3",
      "balance_plus",   "balance_minus",  "picard_iterations",
      "picard_max_ratio", "eps_op"};
  return columns;
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  return out;
}

double species_l2(const PhaseGrid& grid, const SpeciesPair& f) {
  const double p = l2_norm(grid, f.plus);
  const double m = l2_norm(grid, f.minus);
  return std::sqrt(p * p + m * m);
}

}  // namespace

void write_csv_header(std::ostream& out) {
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
}

void write_csv_row(std::ostream& out, const DiagnosticsRecord& r) {
  const double values[] = {r.time,
                           static_cast<double>(r.step),
                           r.dt,
                           r.mass_plus,
                           r.mass_minus,
                           r.momentum[0],
                           r.momentum[1],
                           r.momentum[2],
                           r.kinetic_energy,
                           r.field_energy,
                           r.energy,
                           r.energy_k,
                           r.dissipation_k,
                           r.norm_P,
                           r.norm_I_minus_P,
                           r.min_density_plus,
                           r.min_density_minus,
                           r.grad_phi_H3,
                           r.balance_plus,
                           r.balance_minus,
                           static_cast<double>(r.picard_iterations),
                           r.picard_max_ratio,
                           r.eps_op};
  static_assert(sizeof values / sizeof values[0] == 23);
  for (std::size_t i = 0; i < std::size(values); ++i) {
    if (i) out << ',';
    if (i == 1 || i == 20)
      out << static_cast<long long>(values[i]);
    else
      out << format_double(values[i]);
  }
  out << '\n';
}

std::vector<std::vector<double>> read_csv_columns(std::istream& in, const std::vector<std::string>& names) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty CSV input");
  const auto header = split_csv_line(line);
  std::vector<std::size_t> index;
  for (const auto& name : names) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw FormatError("CSV has no column '" + name + "'");
    index.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  std::vector<std::vector<double>> columns(names.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    for (std::size_t c = 0; c < index.size(); ++c) {
      if (index[c] >= cells.size()) throw FormatError("CSV row " + std::to_string(row) + " is too short");
      const std::string& cell = cells[index[c]];
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size())
        throw FormatError("CSV row " + std::to_string(row) + ": bad number '" + cell + "'");
      columns[c].push_back(v);
    }
  }
  return columns;
}

DiagnosticsRecord measure(const SystemState& state, const RecordOptions& options) {
  const PhaseGrid& grid = state.grid();
  DiagnosticsRecord r;
  r.time = state.time();
  r.step = state.step();
  const GlobalInvariants inv = global_invariants(state);
  r.mass_plus = inv.mass_plus;
  r.mass_minus = inv.mass_minus;
  r.momentum = inv.momentum;
  r.kinetic_energy = inv.kinetic;
  r.field_energy = inv.field;
  r.energy = inv.energy();
  r.energy_k = functional_E_k(state, options.weights, options.ladder);
  if (options.dissipation) r.dissipation_k = functional_D_k(state, options.weights, options.weights.model != Model::landau);
  const SpeciesPair pf = project_P(state);
  SpeciesPair rest = state.species();
  rest.axpy(-1.0, pf);
  r.norm_P = species_l2(grid, pf);
  r.norm_I_minus_P = species_l2(grid, rest);
  const PositivityReport pos = positivity_monitor(state);
  r.min_density_plus = pos.min_plus;
  r.min_density_minus = pos.min_minus;
  r.grad_phi_H3 = grad_phi_H3(grid.x, state.phi());
  return r;
}

BalanceResidual moment_balance_residual(const SystemState& prev, const SystemState& next, double dt) {
  const PhaseGrid& grid = prev.grid();
  if (!(grid == next.grid())) throw GridMismatchError("balance residual needs states on the same grid");
  if (!(dt > 0.0)) throw ParameterError("balance residual needs dt > 0");
  const std::size_t nv = grid.v.size();
  const std::size_t nx = grid.x.size();
  BalanceResidual out;
  for (Species sp : {Species::plus, Species::minus}) {
    const SpatialField a0 = integrate_velocity(grid, prev.f(sp));
    const SpatialField a1 = integrate_velocity(grid, next.f(sp));
    SpatialField residual = make_field(grid.x);
    for (std::size_t i = 0; i < nx; ++i) residual[i] = (a1[i] - a0[i]) / dt;
    for (int c = 0; c < grid.x.dim(); ++c) {
      SpatialField j = make_field(grid.x);
      std::vector<double> terms(nv);
      for (std::size_t ix = 0; ix < nx; ++ix) {
        const auto s0 = velocity_slice(grid, prev.f(sp), ix);
        const auto s1 = velocity_slice(grid, next.f(sp), ix);
        for (std::size_t iv = 0; iv < nv; ++iv) terms[iv] = 0.5 * grid.v.velocity(iv)[c] * (s0[iv] + s1[iv]);
        j[ix] = pairwise_sum(terms) * grid.v.weight();
      }
      residual += spectral_derivative(grid.x, j, spatial_axis(c), 1);
    }
    (sp == Species::plus ? out.plus : out.minus) = l2_norm(grid.x, residual);
  }
  return out;
}

ProjectionAlgebra projection_algebra(const PhaseGrid& grid, const SpeciesPair& f, double k) {
  const double norm = species_l2(grid, f);
  ProjectionAlgebra out;
  if (norm == 0.0) {
    out.equivalence_ratio = 1.0;
    return out;
  }
  auto distance = [&](SpeciesPair a, const SpeciesPair& b) {
    a.axpy(-1.0, b);
    return species_l2(grid, a) / norm;
  };
  const SpeciesPair pf = project_P(grid, f);
  out.p_idempotence = distance(project_P(grid, pf), pf);
  const SpeciesPair pif = project_Pi(grid, f);
  out.pi_idempotence = distance(project_Pi(grid, pif), pif);
  SpeciesPair rest = f;
  rest.axpy(-1.0, pf);
  out.pi_kills_complement = species_l2(grid, project_Pi(grid, rest)) / norm;
  out.equivalence_ratio =
      (norm_L2_k_squared(grid, pf, k) + norm_L2_k_squared(grid, rest, k)) / norm_L2_k_squared(grid, f, k);
  return out;
}

PositivityReport positivity_monitor(const SystemState& state) {
  const PhaseGrid& grid = state.grid();
  const VelocityField mu = maxwellian(grid.v);
  const std::size_t nv = grid.v.size();
  PositivityReport r;
  r.min_plus = r.min_minus = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const double m = mu[p % nv];
    const double vp = m + state.f_plus()[p];
    const double vm = m + state.f_minus()[p];
    if (vp < r.min_plus) {
      r.min_plus = vp;
      r.location_plus = p;
    }
    if (vm < r.min_minus) {
      r.min_minus = vm;
      r.location_minus = p;
    }
  }
  return r;
}

std::string to_string(FitMode mode) { return mode == FitMode::exponential ? "exponential" : "polynomial"; }

FitMode parse_fit_mode(const std::string& name) {
  if (name == "exponential") return FitMode::exponential;
  if (name == "polynomial") return FitMode::polynomial;
  throw ParameterError("unknown fit mode '" + name + "' (expected exponential or polynomial)");
}

DecayFit fit_decay(const std::vector<double>& times, const std::vector<double>& values, FitMode mode,
                   const FitWindow& window) {
  if (times.size() != values.size()) throw FitError("time and value series differ in length");
  if (times.empty()) throw FitError("empty series");
  const double first = times.front();
  const double last = times.back();
  if (!(window.transient_fraction >= 0.0 && window.transient_fraction < 1.0))
    throw FitError("transient fraction must lie in [0, 1)");
  DecayFit fit;
  fit.mode = mode;
  fit.t_start = window.t_start.value_or(first + window.transient_fraction * (last - first));
  fit.t_end = window.t_end.value_or(last);

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (t < fit.t_start || t > fit.t_end) continue;
    if (!(values[i] > 0.0) || !std::isfinite(values[i]))
      throw FitError("non-positive sample " + format_double(values[i]) + " at t = " + format_double(t));
    xs.push_back(mode == FitMode::exponential ? t : std::log1p(t));
    ys.push_back(std::log(values[i]));
  }
  fit.samples = xs.size();
  if (fit.samples < kMinFitSamples)
    throw FitError("fit window holds " + std::to_string(fit.samples) + " samples, need at least " +
                   std::to_string(kMinFitSamples));

  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw FitError("fit window has no spread in time");
  const double slope = sxy / sxx;
  fit.intercept = my - slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (fit.intercept + slope * xs[i]);
    sse += e * e;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  fit.rate = mode == FitMode::exponential ? -slope : slope;
  return fit;
}

bool monotone_decreasing(const std::vector<double>& times, const std::vector<double>& values, double t_start,
                         double relative_slack) {
  bool have = false;
  double previous = 0.0;
  for (std::size_t i = 0; i < times.size() && i < values.size(); ++i) {
    if (times[i] < t_start) continue;
    if (have && values[i] > previous * (1.0 + relative_slack)) return false;
    previous = values[i];
    have = true;
  }
  return true;
}

LinearizedExperimentResult linearized_decay_experiment(const LinearizedExperimentConfig& config,
                                                       const PhaseGrid& grid, const SpeciesPair& initial) {
  if (config.record_every < 1) throw ParameterError("record_every must be at least 1");
  SpeciesPair f0 = initial;
  f0.axpy(-1.0, project_Pi(grid, initial));
  SystemState state(grid, std::move(f0));

  TimeStepConfig step;
  step.dt = config.dt;
  step.scheme = config.scheme;
  step.linearized = true;
  step.conservative_correction = true;
  step.validate();
  auto op = std::make_shared<LandauOperator>(build_kernel_tables(config.gamma, grid.v));

  LinearizedExperimentResult result;
  LinearizedSeries& s = result.series;
  auto record = [&](const SystemState& st) {
    const SpeciesPair pf = project_P(st);
    SpeciesPair rest = st.species();
    rest.axpy(-1.0, pf);
    const double total = species_l2(grid, st.species());
    s.time.push_back(st.time());
    s.norm_P.push_back(species_l2(grid, pf));
    s.norm_I_minus_P.push_back(species_l2(grid, rest));
    s.energy.push_back(total * total + field_energy(grid.x, st.phi()));
  };
  record(state);
  std::uint64_t count = 0;
  Integrator integrator(grid, op, step);
  integrator.advance(state, config.t_final, [&](const SystemState& st, const StepReport&) {
    if (++count % static_cast<std::uint64_t>(config.record_every) == 0 || st.time() >= config.t_final) record(st);
  });

  const bool zero = std::all_of(s.energy.begin(), s.energy.end(), [](double e) { return e == 0.0; });
  if (!zero) {
    result.exponential = fit_decay(s.time, s.energy, FitMode::exponential, config.window);
    result.polynomial = fit_decay(s.time, s.energy, FitMode::polynomial, config.window);
    result.fitted = true;
  }
  return result;
}

}  // namespace vpl
