#include "vpl/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "vpl/parallel.hpp"
#include "vpl/poisson.hpp"

namespace vpl {

std::string to_string(Model model) { return model == Model::landau ? "landau" : "boltzmann"; }

Model parse_model(const std::string& name) {
  if (name == "landau") return Model::landau;
  if (name == "boltzmann") return Model::boltzmann;
  throw ParameterError("unknown model '" + name + "'");
}

WeightSpec WeightSpec::landau(double gamma, double k, double r_offset) {
  WeightSpec w;
  w.model = Model::landau;
  w.gamma = gamma;
  w.k = k;
  w.q = 3.0 - (gamma - 1.0);
  w.p = 3.0;
  w.r = 2.0 * w.q + r_offset;
  return w;
}

WeightSpec WeightSpec::boltzmann(double gamma, double s, double k, double r_offset) {
  WeightSpec w;
  w.model = Model::boltzmann;
  w.gamma = gamma;
  w.s = s;
  w.k = k;
  w.q = 6.0 * s - 3.0 * (gamma - 1.0);
  w.p = w.q + gamma - 1.0;
  w.r = 2.0 * w.q + r_offset;
  return w;
}

double weight_exponent(const WeightSpec& spec, int a, int b) {
  if (a < 0 || b < 0 || a + b > 2) throw OutOfRangeError("weight defined only for |alpha| + |beta| <= 2");
  return spec.k - spec.p * a - spec.q * b + spec.r;
}

double weight_value(const WeightSpec& spec, const Vec3& v, int a, int b) {
  return std::pow(japanese_bracket(v), weight_exponent(spec, a, b));
}

VelocityField weight_field(const WeightSpec& spec, const VelocityGrid& grid, int a, int b) {
  const double e = weight_exponent(spec, a, b);
  return sample(grid, [&](const Vec3& v) { return std::pow(japanese_bracket(v), e); });
}

double exp_weight_constant(const WeightSpec& spec, int a, int b) { return 2.0 * weight_exponent(spec, a, b); }

PhaseField exp_weight_field(const WeightSpec& spec, const PhaseGrid& grid, int a, int b, const SpatialField& phi,
                            double sign) {
  if (phi.size() != grid.x.size()) throw GridMismatchError("potential does not match the spatial grid");
  const double A = exp_weight_constant(spec, a, b);
  PhaseField out = make_field(grid);
  const std::size_t nv = grid.v.size();
  for (std::size_t ix = 0; ix < grid.x.size(); ++ix)
    for (std::size_t iv = 0; iv < nv; ++iv) {
      const Vec3 v = grid.v.velocity(iv);
      out[ix * nv + iv] = std::exp(sign * A * phi[ix] / (1.0 + v[0] * v[0] + v[1] * v[1] + v[2] * v[2]));
    }
  return out;
}

// --- inequality suite --------------------------------------------------------

bool InequalityReport::all_passed() const {
  return std::all_of(results.begin(), results.end(), [](const InequalityResult& r) { return r.passed(); });
}

const InequalityResult& InequalityReport::find(const std::string& name) const {
  for (const auto& r : results)
    if (r.name == name) return r;
  throw OutOfRangeError("no inequality named " + name);
}

namespace {

class Checker {
 public:
  explicit Checker(std::string name) { result_.name = std::move(name); result_.worst_log_margin = std::numeric_limits<double>::infinity(); }
  // lhs <= rhs, both given as logarithms.
  void check(double log_lhs, double log_rhs) {
    const double margin = log_rhs - log_lhs;
    const double slack = 1e-12 * std::max({1.0, std::abs(log_lhs), std::abs(log_rhs)});
    ++result_.checks;
    if (margin < -slack) ++result_.failures;
    result_.worst_log_margin = std::min(result_.worst_log_margin, margin);
  }
  InequalityResult take() { return std::move(result_); }

 private:
  InequalityResult result_;
};

}  // namespace

InequalityReport weight_inequality_suite(const WeightSpec& spec, const std::vector<Vec3>& samples) {
  const bool boltzmann = spec.model == Model::boltzmann;
  const double gain = spec.order_gain();
  const double kappa = spec.kappa();
  Checker velocity_gain(kVelocityOrderGain), spatial_gain(kSpatialOrderGain), exchange(kOrderExchange),
      floor(kWeightFloor), interpolation(kInterpolation), first_product(kFirstShellProduct),
      second_product(kSecondShellProduct), mixed_product(kSecondShellMixedProduct), shell_max(kSecondShellMax),
      shell_interp(kSecondShellInterpolation);

  for (const Vec3& v : samples) {
    const double lb = std::log(japanese_bracket(v));
    auto lw = [&](int a, int b) { return weight_exponent(spec, a, b) * lb; };
    for (int a = 0; a <= 2; ++a) {
      for (int b = 0; a + b <= 2; ++b) {
        for (int b1 = 0; b1 < b; ++b1) velocity_gain.check(lw(a, b) + gain * lb, lw(a, b1));
        for (int a1 = 0; a1 < a; ++a1) spatial_gain.check(lw(a, b) + gain * lb, lw(a1, b));
        if (b >= 1) exchange.check(lw(a, b), (spec.gamma - 1.0) * lb + lw(a + 1, b - 1));
        floor.check((spec.k + 6.0) * lb, lw(a, b));
        if (boltzmann && a >= 1)
          interpolation.check(lw(a, b), spec.s * lw(a - 1, b) + (1.0 - spec.s) * lw(a - 1, b + 1) + spec.gamma * lb);
      }
    }
    first_product.check(std::max(2 * lw(1, 0), 2 * lw(0, 1)) + kappa * lb, lw(0, 0) + lw(1, 0));
    const double second_max = std::max({2 * lw(2, 0), 2 * lw(1, 1), 2 * lw(0, 2)});
    second_product.check(second_max + kappa * lb, lw(1, 0) + lw(2, 0));
    mixed_product.check(std::max(2 * lw(1, 1), 2 * lw(0, 2)) + kappa * lb, lw(0, 1) + lw(1, 1));
    shell_max.check(second_max, 2 * lw(2, 0));
    shell_interp.check(2 * lw(2, 0) + kappa * lb, 0.8 * lw(1, 0) + 1.2 * lw(2, 0));
  }

  InequalityReport report;
  report.spec = spec;
  for (Checker* c : {&velocity_gain, &spatial_gain, &exchange, &floor, &first_product, &second_product,
                     &mixed_product, &shell_max, &shell_interp})
    report.results.push_back(c->take());
  if (boltzmann) report.results.push_back(interpolation.take());
  return report;
}

std::vector<Vec3> sample_velocities(std::size_t count, double cutoff, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-cutoff, cutoff);
  std::vector<Vec3> out(count);
  for (auto& v : out) v = {u(rng), u(rng), u(rng)};
  return out;
}

// --- ladder ----------------------------------------------------------------

double WeightLadder::operator()(int a, int b) const {
  if (a < 0 || b < 0 || a + b > 2) throw OutOfRangeError("ladder constant defined only for a + b <= 2");
  return std::pow(ratio, 2 * a + b);
}

bool WeightLadder::ordered() const {
  const WeightLadder& c = *this;
  for (int a = 0; a <= 2; ++a)
    for (int b = 0; a + b <= 2; ++b) {
      for (int b1 = 0; b1 < b; ++b1)
        if (c(a, b) < ratio * c(a, b1)) return false;
      if (b >= 1 && c(a + 1, b - 1) < ratio * c(a, b)) return false;
    }
  return true;
}

// --- derivatives -------------------------------------------------------------

std::vector<std::array<int, 3>> multi_indices(int dims, int order) {
  std::vector<std::array<int, 3>> out;
  for (int i = 0; i <= order; ++i)
    for (int j = 0; i + j <= order; ++j) {
      const int k = order - i - j;
      const std::array<int, 3> m{i, j, k};
      bool ok = true;
      for (int c = dims; c < 3; ++c) ok = ok && m[c] == 0;
      if (ok) out.push_back(m);
    }
  return out;
}

namespace {

PhaseField spatial_derivative(SpatialBatchSpectral& spectral, const PhaseField& f, const std::array<int, 3>& alpha) {
  PhaseField cur = f;
  for (int c = 0; c < 3; ++c) {
    if (alpha[c] == 0) continue;
    PhaseField next(cur.size());
    spectral.derivative(cur.span(), c, alpha[c], next.span());
    cur = std::move(next);
  }
  return cur;
}

void velocity_derivative(VelocitySpectral& spectral, std::span<const double> in, const std::array<int, 3>& beta,
                         std::vector<double>& out, std::vector<double>& scratch) {
  out.assign(in.begin(), in.end());
  for (int c = 0; c < 3; ++c) {
    if (beta[c] == 0) continue;
    scratch.resize(out.size());
    spectral.derivative(out, c, beta[c], scratch);
    out.swap(scratch);
  }
}

struct Term {
  int a;
  int b;
  std::array<int, 3> alpha;
  std::array<int, 3> beta;
};

std::vector<Term> derivative_terms(int dim_x) {
  std::vector<Term> terms;
  for (int a = 0; a <= 2; ++a)
    for (int b = 0; a + b <= 2; ++b)
      for (const auto& alpha : multi_indices(dim_x, a))
        for (const auto& beta : multi_indices(3, b)) terms.push_back({a, b, alpha, beta});
  return terms;
}

struct SliceWorkspace {
  explicit SliceWorkspace(const VelocityGrid& grid) : spectral(grid) {}
  VelocitySpectral spectral;
  std::vector<double> deriv, scratch, weighted;
};

// Runs fn(term, species sign, ix, worker, d^alpha_beta f slice) over every term,
// species and spatial node, accumulating the returned per-node contributions.
template <class Fn>
NormBreakdown accumulate_terms(const PhaseGrid& grid, const SpeciesPair& f, Fn&& fn) {
  NormBreakdown out;
  SpatialBatchSpectral spatial(grid);
  PerWorker<SliceWorkspace> pool([&] { return std::make_unique<SliceWorkspace>(grid.v); });
  const auto terms = derivative_terms(grid.x.dim());
  std::array<std::array<std::vector<double>, 3>, 3> contributions;
  for (Species s : {Species::plus, Species::minus}) {
    const double sign = s == Species::plus ? 1.0 : -1.0;
    std::array<int, 3> last_alpha{-1, -1, -1};
    PhaseField dx;
    for (const Term& t : terms) {
      if (t.alpha != last_alpha) {
        dx = spatial_derivative(spatial, f[s], t.alpha);
        last_alpha = t.alpha;
      }
      std::vector<double> node(grid.x.size());
      parallel_for(grid.x.size(), [&](std::size_t ix, int worker) {
        SliceWorkspace& ws = pool.get(worker);
        velocity_derivative(ws.spectral, velocity_slice(grid, dx, ix), t.beta, ws.deriv, ws.scratch);
        node[ix] = fn(t, sign, ix, ws);
      });
      contributions[t.a][t.b].push_back(pairwise_sum(node) * grid.x.cell_volume());
    }
  }
  for (int a = 0; a <= 2; ++a)
    for (int b = 0; a + b <= 2; ++b) {
      out.shell[a][b] = pairwise_sum(contributions[a][b]);
      out.total += out.shell[a][b];
    }
  return out;
}

double weighted_square(std::span<const double> g, std::span<const double> weight, double h3) {
  std::vector<double> sq(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) {
    const double x = g[p] * weight[p];
    sq[p] = x * x;
  }
  return pairwise_sum(sq) * h3;
}

}  // namespace

NormBreakdown norm_X_k(const PhaseGrid& grid, const SpeciesPair& f, const SpatialField& phi, const WeightSpec& spec,
                       const WeightLadder& ladder) {
  if (phi.size() != grid.x.size()) throw GridMismatchError("potential does not match the spatial grid");
  const std::size_t nv = grid.v.size();
  std::vector<double> inv_bracket2(nv);
  for (std::size_t iv = 0; iv < nv; ++iv) {
    const double b = japanese_bracket(grid.v.velocity(iv));
    inv_bracket2[iv] = 1.0 / (b * b);
  }
  std::array<std::array<VelocityField, 3>, 3> w;
  for (int a = 0; a <= 2; ++a)
    for (int b = 0; a + b <= 2; ++b) w[a][b] = weight_field(spec, grid.v, a, b);

  NormBreakdown raw = accumulate_terms(grid, f, [&](const Term& t, double sign, std::size_t ix, SliceWorkspace& ws) {
    const double A = exp_weight_constant(spec, t.a, t.b);
    ws.weighted.resize(nv);
    const auto& wf = w[t.a][t.b];
    for (std::size_t iv = 0; iv < nv; ++iv)
      ws.weighted[iv] = std::exp(sign * A * phi[ix] * inv_bracket2[iv]) * wf[iv];
    return weighted_square(ws.deriv, ws.weighted, grid.v.weight());
  });
  NormBreakdown out;
  for (int a = 0; a <= 2; ++a)
    for (int b = 0; a + b <= 2; ++b) {
      out.shell[a][b] = ladder(a, b) * raw.shell[a][b];
      out.total += out.shell[a][b];
    }
  return out;
}

NormBreakdown norm_X_k(const SystemState& state, const WeightSpec& spec, const WeightLadder& ladder) {
  return norm_X_k(state.grid(), state.species(), state.phi(), spec, ladder);
}

namespace {

// Squares of the two pieces of the anisotropic norm.
std::pair<double, double> landau_D_parts(VelocitySpectral& spectral, std::span<const double> f,
                                         std::span<const double> m, double gamma) {
  const VelocityGrid& grid = spectral.grid();
  const std::size_t n = grid.size();
  std::vector<double> g(n), d0(n), d1(n), d2(n), first(n), second(n);
  for (std::size_t p = 0; p < n; ++p) g[p] = m[p] * f[p];
  spectral.gradient(g, {d0, d1, d2});
  for (std::size_t p = 0; p < n; ++p) {
    const Vec3 v = grid.velocity(p);
    const double vb = japanese_bracket(v);
    const double soft = std::pow(vb, gamma);
    const double speed = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    const Vec3 G{d0[p], d1[p], d2[p]};
    Vec3 radial{0.0, 0.0, 0.0};
    if (speed > 0.0) {
      const double proj = (G[0] * v[0] + G[1] * v[1] + G[2] * v[2]) / (speed * speed);
      radial = {proj * v[0], proj * v[1], proj * v[2]};
    }
    double t2 = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double comp = speed > 0.0 ? radial[c] + vb * (G[c] - radial[c]) : G[c];
      t2 += comp * comp;
    }
    first[p] = g[p] * g[p] * soft;
    second[p] = t2 * soft;
  }
  const double h3 = grid.weight();
  return {pairwise_sum(first) * h3, pairwise_sum(second) * h3};
}

}  // namespace

double landau_D_norm(const VelocityGrid& grid, std::span<const double> f, std::span<const double> m, double gamma) {
  if (f.size() != grid.size() || m.size() != grid.size())
    throw GridMismatchError("slice does not match the velocity grid");
  VelocitySpectral spectral(grid);
  const auto [a, b] = landau_D_parts(spectral, f, m, gamma);
  return std::sqrt(a) + std::sqrt(b);
}

NormBreakdown norm_Y_k(const PhaseGrid& grid, const SpeciesPair& f, const WeightSpec& spec, bool surrogate) {
  std::array<std::array<VelocityField, 3>, 3> w;
  for (int a = 0; a <= 2; ++a)
    for (int b = 0; a + b <= 2; ++b) w[a][b] = weight_field(spec, grid.v, a, b);

  if (spec.model == Model::landau) {
    return accumulate_terms(grid, f, [&](const Term& t, double, std::size_t, SliceWorkspace& ws) {
      const auto [a, b] = landau_D_parts(ws.spectral, ws.deriv, w[t.a][t.b].span(), spec.gamma);
      const double norm = std::sqrt(a) + std::sqrt(b);
      return norm * norm;
    });
  }
  if (!surrogate)
    throw UnsupportedError("the Boltzmann dissipation norm is only available as an explicitly requested surrogate");
  // Surrogate: sum_eta <eta>^{2s} |FT(<v>^{gamma/2} w d f)|^2.
  const VelocityGrid& vg = grid.v;
  const VelocityField soft = sample(vg, [&](const Vec3& v) { return std::pow(japanese_bracket(v), 0.5 * spec.gamma); });
  return accumulate_terms(grid, f, [&](const Term& t, double, std::size_t, SliceWorkspace& ws) {
    VelocityField g = make_field(vg);
    for (std::size_t p = 0; p < g.size(); ++p) g[p] = soft[p] * w[t.a][t.b][p] * ws.deriv[p];
    const Spectrum spec_g = forward_transform(vg, g);
    const int n = vg.n();
    double sum = 0.0;
    for (std::size_t m = 0; m < spec_g.coefficients.size(); ++m) {
      const int i = static_cast<int>(m / (static_cast<std::size_t>(n) * n));
      const int j = static_cast<int>((m / n) % n);
      const int k = static_cast<int>(m % n);
      const double e2 = std::pow(vg.wavenumber(i), 2) + std::pow(vg.wavenumber(j), 2) + std::pow(vg.wavenumber(k), 2);
      sum += std::norm(spec_g.coefficients[m]) * std::pow(1.0 + e2, spec.s);
    }
    return sum;
  });
}

NormBreakdown norm_Y_k(const SystemState& state, const WeightSpec& spec, bool surrogate) {
  return norm_Y_k(state.grid(), state.species(), spec, surrogate);
}

double norm_L2_k_squared(const PhaseGrid& grid, const SpeciesPair& f, double k) {
  const std::size_t nv = grid.v.size();
  std::vector<double> w2(nv);
  for (std::size_t iv = 0; iv < nv; ++iv) w2[iv] = std::pow(japanese_bracket(grid.v.velocity(iv)), 2.0 * k);
  std::vector<double> terms(2 * grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    terms[2 * p] = w2[p % nv] * f.plus[p] * f.plus[p];
    terms[2 * p + 1] = w2[p % nv] * f.minus[p] * f.minus[p];
  }
  return pairwise_sum(terms) * grid.x.cell_volume() * grid.v.weight();
}

double grad_phi_H3(const SpatialGrid& grid, const SpatialField& phi) {
  const Spectrum s = forward_transform(grid, phi);
  const int dim = grid.dim();
  const int n = grid.n();
  std::vector<std::array<int, 3>> alphas;
  for (int order = 0; order <= 3; ++order)
    for (const auto& a : multi_indices(dim, order)) alphas.push_back(a);
  std::vector<double> terms(s.coefficients.size(), 0.0);
  for (std::size_t m = 0; m < s.coefficients.size(); ++m) {
    std::array<int, 3> idx{0, 0, 0};
    std::size_t rest = m;
    for (int c = dim - 1; c >= 0; --c) {
      idx[c] = static_cast<int>(rest % n);
      rest /= n;
    }
    const double c2 = std::norm(s.coefficients[m]);
    if (c2 == 0.0) continue;
    double sum = 0.0;
    for (int g = 0; g < dim; ++g)
      for (const auto& alpha : alphas) {
        double mult = 1.0;
        for (int c = 0; c < dim; ++c) {
          const int order = alpha[c] + (c == g ? 1 : 0);
          if (order == 0) continue;
          mult *= std::norm(derivative_multiplier(grid.wavenumber(idx[c]), idx[c] == n / 2, order));
        }
        sum += mult;
      }
    terms[m] = c2 * sum;
  }
  return pairwise_sum(terms);
}

double functional_E_k(const SystemState& state, const WeightSpec& spec, const WeightLadder& ladder) {
  return norm_X_k(state, spec, ladder).total + grad_phi_H3(state.grid().x, state.phi());
}

double functional_D_k(const SystemState& state, const WeightSpec& spec, bool surrogate) {
  return norm_Y_k(state, spec, surrogate).total + grad_phi_H3(state.grid().x, state.phi());
}

}  // namespace vpl
