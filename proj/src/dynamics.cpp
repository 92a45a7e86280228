#include "vpl/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vpl/checkpoint.hpp"
#include "vpl/parallel.hpp"
#include "vpl/poisson.hpp"

namespace vpl {

std::string to_string(CollisionScheme scheme) {
  return scheme == CollisionScheme::strang_rk4 ? "strang_rk4" : "picard_implicit";
}

CollisionScheme parse_collision_scheme(const std::string& name) {
  if (name == "strang_rk4") return CollisionScheme::strang_rk4;
  if (name == "picard_implicit") return CollisionScheme::picard_implicit;
  throw ParameterError("unknown collision scheme '" + name + "'");
}

void TimeStepConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("dt must be positive");
  if (!(picard_tol > 0.0)) throw ParameterError("picard_tol must be positive");
  if (picard_max_iters < 1) throw ParameterError("picard_max_iters must be at least 1");
  if (!(gmres_rel_tol > 0.0) || gmres_max_iters < 1) throw ParameterError("invalid linear solver settings");
}

double PicardReport::max_ratio() const {
  double r = 0.0;
  for (double c : contraction_ratios) r = std::max(r, c);
  return r;
}

// --- transport -------------------------------------------------------------

namespace {

// Signed spatial modes of a half-spectrum index (last axis is the halved one).
std::array<int, 3> half_spectrum_modes(std::size_t flat, int dim, int n) {
  std::array<int, 3> m{0, 0, 0};
  const int half = n / 2 + 1;
  m[dim - 1] = static_cast<int>(flat % half);
  flat /= half;
  for (int c = dim - 2; c >= 0; --c) {
    m[c] = signed_mode(static_cast<int>(flat % n), n);
    flat /= n;
  }
  return m;
}

SpeciesPair transport(const PhaseGrid& grid, const SpeciesPair& f, double dt) {
  const int dim = grid.x.dim();
  const int n = grid.x.n();
  const std::size_t nv = grid.v.size();
  RealFft fft(grid.x.shape(), static_cast<int>(nv));
  const double norm = 1.0 / static_cast<double>(fft.points());
  const double k0 = kTwoPi / grid.x.length();
  std::vector<Vec3> velocity(nv);
  for (std::size_t iv = 0; iv < nv; ++iv) velocity[iv] = grid.v.velocity(iv);

  SpeciesPair out = make_species(grid);
  for (Species s : {Species::plus, Species::minus}) {
    std::copy(f[s].begin(), f[s].end(), fft.real().begin());
    fft.forward();
    auto spec = fft.spectrum();
    for (std::size_t mode = 0; mode < fft.modes(); ++mode) {
      const auto m = half_spectrum_modes(mode, dim, n);
      bool nyquist = false;
      for (int c = 0; c < dim; ++c) nyquist = nyquist || std::abs(m[c]) == n / 2;
      Complex* row = &spec[mode * nv];
      if (nyquist) {
        std::fill(row, row + nv, Complex(0.0, 0.0));
        continue;
      }
      for (std::size_t iv = 0; iv < nv; ++iv) {
        double phase = 0.0;
        for (int c = 0; c < dim; ++c) phase += k0 * m[c] * velocity[iv][c];
        row[iv] *= std::polar(norm, -phase * dt);
      }
    }
    fft.backward();
    std::copy(fft.real().begin(), fft.real().end(), out[s].begin());
  }
  return out;
}

}  // namespace

SystemState transport_step(const SystemState& state, double dt) {
  SystemState next = state;
  next.set_species(transport(state.grid(), state.species(), dt));
  return next;
}

// --- field -----------------------------------------------------------------

namespace {

struct FieldWorkspace {
  explicit FieldWorkspace(const VelocityGrid& grid) : spectral(grid), deriv(grid.size()) {
    for (auto& v : stage) v.resize(grid.size());
    tmp.resize(grid.size());
  }
  VelocitySpectral spectral;
  std::vector<double> deriv;
  std::array<std::vector<double>, 4> stage;
  std::vector<double> tmp;
};

}  // namespace

SpeciesPair field_step(const PhaseGrid& grid, const SpeciesPair& f, const SpatialField& phi, double dt,
                       bool linearized) {
  if (phi.size() != grid.x.size()) throw GridMismatchError("potential does not match the spatial grid");
  const int dim = grid.x.dim();
  const std::size_t nv = grid.v.size();
  const auto grad_phi = spatial_gradient(grid.x, phi);
  const VelocityField mu = maxwellian(grid.v);
  std::vector<Vec3> velocity(nv);
  for (std::size_t iv = 0; iv < nv; ++iv) velocity[iv] = grid.v.velocity(iv);
  PerWorker<FieldWorkspace> pool([&] { return std::make_unique<FieldWorkspace>(grid.v); });
  const MomentCorrector corrector(grid.v);

  SpeciesPair out = f;
  parallel_for(grid.x.size(), [&](std::size_t ix, int worker) {
    Vec3 e{0.0, 0.0, 0.0};
    for (int c = 0; c < dim; ++c) e[c] = grad_phi[c][ix];
    if (e[0] == 0.0 && e[1] == 0.0 && e[2] == 0.0) return;
    FieldWorkspace& ws = pool.get(worker);
    for (Species s : {Species::plus, Species::minus}) {
      const double sign = s == Species::plus ? 1.0 : -1.0;
      // d_t f = sign * (grad phi . grad_v f - grad phi . v mu)
      auto rhs = [&](std::span<const double> g, std::span<double> r) {
        for (std::size_t iv = 0; iv < nv; ++iv) {
          const auto& v = velocity[iv];
          r[iv] = -sign * (e[0] * v[0] + e[1] * v[1] + e[2] * v[2]) * mu[iv];
        }
        if (linearized) return;
        const auto mg = corrector.moments(g);
        for (int c = 0; c < dim; ++c) {
          ws.spectral.derivative(g, c, 1, ws.deriv);
          // Give d_c g the moments that integration by parts prescribes, so
          // the kinetic/field energy exchange is exact in quadrature.
          std::array<double, 5> target{0.0, 0.0, 0.0, 0.0, -2.0 * mg[1 + c]};
          target[1 + c] = -mg[0];
          corrector.correct(ws.deriv, target);
          for (std::size_t iv = 0; iv < nv; ++iv) r[iv] += sign * e[c] * ws.deriv[iv];
        }
      };
      auto y = velocity_slice(grid, out[s], ix);
      const std::vector<double> y0(y.begin(), y.end());
      rhs(y0, ws.stage[0]);
      for (std::size_t iv = 0; iv < nv; ++iv) ws.tmp[iv] = y0[iv] + 0.5 * dt * ws.stage[0][iv];
      rhs(ws.tmp, ws.stage[1]);
      for (std::size_t iv = 0; iv < nv; ++iv) ws.tmp[iv] = y0[iv] + 0.5 * dt * ws.stage[1][iv];
      rhs(ws.tmp, ws.stage[2]);
      for (std::size_t iv = 0; iv < nv; ++iv) ws.tmp[iv] = y0[iv] + dt * ws.stage[2][iv];
      rhs(ws.tmp, ws.stage[3]);
      for (std::size_t iv = 0; iv < nv; ++iv)
        y[iv] = y0[iv] + dt / 6.0 *
                             (ws.stage[0][iv] + 2.0 * ws.stage[1][iv] + 2.0 * ws.stage[2][iv] + ws.stage[3][iv]);
    }
  });
  return out;
}

SystemState field_step(const SystemState& state, double dt, bool linearized) {
  SystemState next = state;
  next.set_species(field_step(state.grid(), state.species(), state.phi(), dt, linearized));
  return next;
}

double field_stable_dt(const SystemState& state) {
  const auto grad = spatial_gradient(state.grid().x, state.phi());
  double emax = 0.0;
  for (std::size_t ix = 0; ix < state.grid().x.size(); ++ix) {
    double e2 = 0.0;
    for (const auto& g : grad) e2 += g[ix] * g[ix];
    emax = std::max(emax, std::sqrt(e2));
  }
  const double kmax = state.grid().v.max_wavenumber();
  return emax > 0.0 ? 0.5 / (emax * kmax) : std::numeric_limits<double>::infinity();
}

double transport_cfl(const PhaseGrid& grid, double dt) {
  return dt * grid.v.max_speed() * grid.x.max_wavenumber();
}

// --- collisions ----------------------------------------------------------

namespace {

double phase_l2_distance(const PhaseGrid& grid, const SpeciesPair& a, const SpeciesPair& b) {
  std::vector<double> sq(2 * grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const double dp = a.plus[p] - b.plus[p];
    const double dm = a.minus[p] - b.minus[p];
    sq[2 * p] = dp * dp;
    sq[2 * p + 1] = dm * dm;
  }
  return std::sqrt(pairwise_sum(sq) * grid.x.cell_volume() * grid.v.weight());
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

using LinearMap = std::function<void(std::span<const double>, std::span<double>)>;

// Restarted GMRES with right preconditioning. Returns the iteration count.
int gmres(const LinearMap& apply, const LinearMap& precondition, std::span<const double> b, std::span<double> x,
          double rel_tol, double abs_tol, int max_iters, int restart, double& residual) {
  const std::size_t n = b.size();
  const double bnorm = std::sqrt(dot(b, b));
  const double target = std::max(rel_tol * std::max(bnorm, 1e-300), abs_tol);
  std::vector<double> r(n), w(n), z(n);
  std::vector<std::vector<double>> v(restart + 1, std::vector<double>(n));
  std::vector<double> h((restart + 1) * restart), cs(restart), sn(restart), g(restart + 1), y(restart);
  auto H = [&](int i, int j) -> double& { return h[i * restart + j]; };

  auto residual_vector = [&] {
    apply(x, w);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
    return std::sqrt(dot(r, r));
  };
  residual = residual_vector();
  int total = 0;
  while (residual > target && total < max_iters) {
    const double beta = residual;
    for (std::size_t i = 0; i < n; ++i) v[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    int k = 0;
    for (; k < restart && total < max_iters; ++k, ++total) {
      precondition(v[k], z);
      apply(z, w);
      for (int i = 0; i <= k; ++i) {
        H(i, k) = dot(w, v[i]);
        for (std::size_t p = 0; p < n; ++p) w[p] -= H(i, k) * v[i][p];
      }
      H(k + 1, k) = std::sqrt(dot(w, w));
      if (H(k + 1, k) > 0.0)
        for (std::size_t p = 0; p < n; ++p) v[k + 1][p] = w[p] / H(k + 1, k);
      for (int i = 0; i < k; ++i) {
        const double t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
        H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
        H(i, k) = t;
      }
      const double denom = std::hypot(H(k, k), H(k + 1, k));
      cs[k] = H(k, k) / denom;
      sn[k] = H(k + 1, k) / denom;
      H(k, k) = denom;
      H(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      if (std::abs(g[k + 1]) <= target) {
        ++k;
        ++total;
        break;
      }
    }
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j) s -= H(i, j) * y[j];
      y[i] = s / H(i, i);
    }
    std::fill(w.begin(), w.end(), 0.0);
    for (int i = 0; i < k; ++i)
      for (std::size_t p = 0; p < n; ++p) w[p] += y[i] * v[i][p];
    precondition(w, z);
    for (std::size_t p = 0; p < n; ++p) x[p] += z[p];
    residual = residual_vector();
  }
  return total;
}

struct ImplicitWorkspace {
  explicit ImplicitWorkspace(const VelocityGrid& grid) : fft({grid.n(), grid.n(), grid.n()}) {
    const std::size_t n = grid.size();
    const int nn = grid.n();
    k2.resize(fft.modes());
    for (std::size_t m = 0; m < k2.size(); ++m) {
      const int k = static_cast<int>(m % (nn / 2 + 1));
      const int j = static_cast<int>((m / (nn / 2 + 1)) % nn);
      const int i = static_cast<int>(m / ((nn / 2 + 1) * nn));
      const double a = grid.wavenumber(i), b = grid.wavenumber(j), c = grid.wavenumber(k);
      k2[m] = a * a + b * b + c * c;
    }
    for (int i = 0; i < nn; ++i) mean_k2 += 3.0 * grid.wavenumber(i) * grid.wavenumber(i) / nn;
    for (auto& v : flux) v.resize(n);
    source.resize(n);
    rhs.resize(n);
  }
  RealFft fft;
  std::vector<double> k2;
  double mean_k2 = 0.0;
  std::array<std::vector<double>, 3> flux;
  std::vector<double> source;
  std::vector<double> rhs;
};

SpeciesPair explicit_collisions(const PhaseGrid& grid, const SpeciesPair& f, double dt, const LandauOperator& op,
                                const CollisionOptions& options) {
  const SpeciesPair k1 = apply_collision_field(grid, f, op, options);
  SpeciesPair tmp = f;
  tmp.axpy(0.5 * dt, k1);
  const SpeciesPair k2 = apply_collision_field(grid, tmp, op, options);
  tmp = f;
  tmp.axpy(0.5 * dt, k2);
  const SpeciesPair k3 = apply_collision_field(grid, tmp, op, options);
  tmp = f;
  tmp.axpy(dt, k3);
  const SpeciesPair k4 = apply_collision_field(grid, tmp, op, options);
  SpeciesPair out = f;
  out.axpy(dt / 6.0, k1).axpy(dt / 3.0, k2).axpy(dt / 3.0, k3).axpy(dt / 6.0, k4);
  return out;
}

// One Picard sweep: per node and species solve
//   (I - dt Q(G, .)) x = f^n + dt Q(s_g, mu),  G = 2 mu (+ s_g when nonlinear),
// with s_g taken from the previous iterate.
SpeciesPair picard_sweep(const PhaseGrid& grid, const SpeciesPair& fn, const SpeciesPair& iterate, double dt,
                         const TimeStepConfig& config, const LandauOperator& op, PerWorker<ImplicitWorkspace>& pool,
                         const MomentCorrector& corrector, int& max_linear_iterations) {
  const std::size_t nv = grid.v.size();
  SpeciesPair next = make_species(grid);
  std::vector<int> linear_iterations(grid.x.size(), 0);
  const CollisionCoefficients& cmu = op.tables().maxwellian_coefficients();

  parallel_for(grid.x.size(), [&](std::size_t ix, int worker) {
    ImplicitWorkspace& ws = pool.get(worker);
    const auto gp = velocity_slice(grid, iterate.plus, ix);
    const auto gm = velocity_slice(grid, iterate.minus, ix);
    std::vector<double> s(nv);
    for (std::size_t p = 0; p < nv; ++p) s[p] = gp[p] + gm[p];
    const CollisionCoefficients cs = op.coefficients(s, worker);
    for (auto& v : ws.flux) std::fill(v.begin(), v.end(), 0.0);
    op.add_flux_of_maxwellian(cs, {ws.flux[0], ws.flux[1], ws.flux[2]}, worker);
    op.divergence({ws.flux[0], ws.flux[1], ws.flux[2]}, ws.source, worker);

    CollisionCoefficients g = cmu;
    g *= 2.0;
    if (!config.linearized) g.axpy(1.0, cs);
    double mean_diffusion = 0.0;
    for (std::size_t p = 0; p < nv; ++p)
      mean_diffusion += (g.a[sym_index(0, 0)][p] + g.a[sym_index(1, 1)][p] + g.a[sym_index(2, 2)][p]) / 3.0;
    mean_diffusion = std::max(mean_diffusion / static_cast<double>(nv), 0.0);
    // Pointwise rescaling by the local diffusion at the mean squared wavenumber.
    std::vector<double> scale(nv);
    for (std::size_t p = 0; p < nv; ++p) {
      const double local =
          std::max((g.a[sym_index(0, 0)][p] + g.a[sym_index(1, 1)][p] + g.a[sym_index(2, 2)][p]) / 3.0, 0.0);
      scale[p] = (1.0 + dt * mean_diffusion * ws.mean_k2) / (1.0 + dt * local * ws.mean_k2);
    }

    const LinearMap apply = [&](std::span<const double> in, std::span<double> out) {
      op.apply(g, in, out, worker);
      for (std::size_t p = 0; p < nv; ++p) out[p] = in[p] - dt * out[p];
    };
    // (1 + dt a |k|^2)^{-1} with a the mean diffusion coefficient, then the pointwise scale.
    const LinearMap precondition = [&](std::span<const double> in, std::span<double> out) {
      std::copy(in.begin(), in.end(), ws.fft.real().begin());
      auto spec = ws.fft.spectrum();
      const double norm = 1.0 / static_cast<double>(ws.fft.points());
      ws.fft.forward();
      for (std::size_t m = 0; m < spec.size(); ++m) spec[m] *= norm / (1.0 + dt * mean_diffusion * ws.k2[m]);
      ws.fft.backward();
      for (std::size_t p = 0; p < nv; ++p) out[p] = ws.fft.real()[p] * scale[p];
    };

    // Nodal residuals below this cannot move the Picard difference past picard_tol.
    const double abs_tol = 1e-2 * config.picard_tol /
                           std::sqrt(2.0 * grid.x.volume() * grid.v.weight());
    int worst = 0;
    for (Species sp : {Species::plus, Species::minus}) {
      const auto f0 = velocity_slice(grid, fn[sp], ix);
      const auto guess = velocity_slice(grid, iterate[sp], ix);
      auto x = velocity_slice(grid, next[sp], ix);
      for (std::size_t p = 0; p < nv; ++p) ws.rhs[p] = f0[p] + dt * ws.source[p];
      std::copy(guess.begin(), guess.end(), x.begin());
      double residual = 0.0;
      const int its = gmres(apply, precondition, ws.rhs, x, config.gmres_rel_tol, abs_tol, config.gmres_max_iters,
                            60, residual);
      const double bnorm = std::sqrt(dot(ws.rhs, ws.rhs));
      if (residual > 1e3 * std::max(config.gmres_rel_tol * std::max(bnorm, 1e-300), abs_tol))
        throw NonConvergenceError("implicit collision solve did not converge", residual);
      worst = std::max(worst, its);
    }
    if (config.conservative_correction) {
      auto xp = velocity_slice(grid, next.plus, ix);
      auto xm = velocity_slice(grid, next.minus, ix);
      const auto fp = velocity_slice(grid, fn.plus, ix);
      const auto fm = velocity_slice(grid, fn.minus, ix);
      std::vector<double> dp(nv), dm(nv);
      for (std::size_t p = 0; p < nv; ++p) {
        dp[p] = xp[p] - fp[p];
        dm[p] = xm[p] - fm[p];
      }
      corrector.correct_pair(dp, dm);
      for (std::size_t p = 0; p < nv; ++p) {
        xp[p] = fp[p] + dp[p];
        xm[p] = fm[p] + dm[p];
      }
    }
    linear_iterations[ix] = worst;
  });
  max_linear_iterations = std::max(max_linear_iterations,
                                   *std::max_element(linear_iterations.begin(), linear_iterations.end()));
  return next;
}

SpeciesPair implicit_collisions(const PhaseGrid& grid, const SpeciesPair& fn, double dt, const TimeStepConfig& config,
                                const LandauOperator& op, PicardReport& report) {
  PerWorker<ImplicitWorkspace> pool([&] { return std::make_unique<ImplicitWorkspace>(grid.v); });
  const MomentCorrector corrector(grid.v);
  SpeciesPair iterate = fn;
  for (int m = 0; m < config.picard_max_iters; ++m) {
    SpeciesPair next =
        picard_sweep(grid, fn, iterate, dt, config, op, pool, corrector, report.max_linear_iterations);
    const double diff = phase_l2_distance(grid, next, iterate);
    if (!report.differences.empty() && report.differences.back() > 0.0)
      report.contraction_ratios.push_back(diff / report.differences.back());
    report.differences.push_back(diff);
    report.iterations = m + 1;
    iterate = std::move(next);
    if (!std::isfinite(diff)) throw NumericalBlowupError("implicit collision iterate is not finite");
    if (diff < config.picard_tol) return iterate;
  }
  throw NonConvergenceError("Picard iteration exceeded " + std::to_string(config.picard_max_iters) + " iterations",
                            report.differences.back());
}

}  // namespace

SystemState collision_step(const SystemState& state, double dt, const TimeStepConfig& config,
                           const LandauOperator& op, PicardReport* report) {
  const PhaseGrid& grid = state.grid();
  if (!(grid.v == op.grid())) throw GridMismatchError("operator tables built for a different velocity grid");
  SystemState next = state;
  if (config.scheme == CollisionScheme::strang_rk4) {
    next.set_species(explicit_collisions(grid, state.species(), dt, op,
                                         {config.linearized, config.conservative_correction}));
  } else {
    PicardReport local;
    next.set_species(implicit_collisions(grid, state.species(), dt, config, op, local));
    if (report) *report = std::move(local);
  }
  return next;
}

double min_total_density(const SystemState& state) {
  const auto& grid = state.grid();
  const VelocityField mu = maxwellian(grid.v);
  const std::size_t nv = grid.v.size();
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const double m = mu[p % nv];
    lo = std::min({lo, m + state.f_plus()[p], m + state.f_minus()[p]});
  }
  return lo;
}

// --- driver ------------------------------------------------------------------

Integrator::Integrator(const PhaseGrid& grid, std::shared_ptr<const LandauOperator> op, TimeStepConfig config)
    : grid_(grid), op_(std::move(op)), config_(std::move(config)) {
  config_.validate();
  if (config_.collisions) {
    if (!op_) throw ParameterError("collisions enabled without a collision operator");
    if (!(op_->grid() == grid_.v)) throw GridMismatchError("operator tables built for a different velocity grid");
  }
}

Integrator::~Integrator() = default;

void Integrator::warn(const std::string& message) {
  if (std::find(warnings_.begin(), warnings_.end(), message) == warnings_.end()) warnings_.push_back(message);
}

StepReport Integrator::step(SystemState& state, double dt) {
  if (!(state.grid() == grid_)) throw GridMismatchError("state does not match the integrator grid");
  StepReport report;
  report.dt = dt;
  const double t0 = state.time();
  const std::uint64_t n0 = state.step();
  SpeciesPair f = transport(grid_, state.species(), 0.5 * dt);
  state.set_species(std::move(f));
  if (config_.field) state.set_species(field_step(grid_, state.species(), state.phi(), 0.5 * dt, config_.linearized));
  if (config_.collisions) {
    PicardReport picard;
    state = collision_step(state, dt, config_, *op_, &picard);
    if (config_.scheme == CollisionScheme::picard_implicit) report.picard = std::move(picard);
  }
  if (config_.field) state.set_species(field_step(grid_, state.species(), state.phi(), 0.5 * dt, config_.linearized));
  state.set_species(transport(grid_, state.species(), 0.5 * dt));
  state.set_clock(t0 + dt, n0 + 1);
  if (state.charge_mean_warning()) warn("nonzero mean charge projected out of the Poisson solve");
  report.min_density = min_total_density(state);
  return report;
}

namespace {

bool all_finite(const SystemState& s) {
  auto finite = [](const PhaseField& f) {
    return std::all_of(f.begin(), f.end(), [](double v) { return std::isfinite(v); });
  };
  return finite(s.f_plus()) && finite(s.f_minus());
}

}  // namespace

void Integrator::advance(SystemState& state, double t_final, const StepObserver& observer) {
  if (!(t_final > state.time())) throw ParameterError("t_final must exceed the current time");
  if (transport_cfl(grid_, config_.dt) > std::numbers::pi) {
    std::ostringstream msg;
    msg << "dt * max|v| * max wavenumber = " << transport_cfl(grid_, config_.dt) << " exceeds pi";
    warn(msg.str());
  }
  double dt = config_.dt;
  std::uint64_t taken = 0;
  while (t_final - state.time() > 1e-9 * config_.dt) {
    if (config_.adaptive_dt && taken % 10 == 0) dt = std::min(config_.dt, field_stable_dt(state));
    const double remaining = t_final - state.time();
    const bool last = remaining <= dt * (1.0 + 1e-9);
    const double h = last ? remaining : dt;
    std::optional<SystemState> previous;
    if (config_.dump_path) previous = state;
    StepReport report = step(state, h);
    if (last) state.set_clock(t_final, state.step());
    if (!all_finite(state)) {
      std::ostringstream msg;
      msg << "non-finite values after step " << state.step() << " at t = " << state.time();
      if (previous) {
        save_checkpoint(*previous, *config_.dump_path);
        msg << "; last finite state written to " << config_.dump_path->string();
      }
      throw NumericalBlowupError(msg.str());
    }
    ++taken;
    if (observer) observer(state, report);
  }
}

SystemState advance(SystemState state, double t_final, const TimeStepConfig& config,
                    std::shared_ptr<const LandauOperator> op, const StepObserver& observer) {
  Integrator integrator(state.grid(), std::move(op), config);
  integrator.advance(state, t_final, observer);
  return state;
}

}  // namespace vpl
