#include "vpl/landau.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>
#include <fstream>

#include "vpl/parallel.hpp"

namespace vpl {

void check_gamma(double gamma) {
  if (!(gamma >= -3.0 && gamma <= 1.0)) throw ParameterError("gamma must lie in [-3, 1]");
}

SymMatrix3 landau_kernel(const Vec3& u, double gamma, double ball_radius) {
  const double r2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
  SymMatrix3 k{};
  if (r2 < ball_radius * ball_radius) {
    if (gamma >= 0.0 && r2 == 0.0) return k;
    if (gamma < 0.0) {
      const double diag = 2.0 * std::pow(ball_radius, gamma + 2.0) / (gamma + 5.0);
      k[sym_index(0, 0)] = k[sym_index(1, 1)] = k[sym_index(2, 2)] = diag;
      return k;
    }
  }
  double rg;
  if (gamma == 0.0) rg = 1.0;
  else if (gamma == -3.0) rg = 1.0 / (r2 * std::sqrt(r2));
  else if (gamma == -1.0) rg = 1.0 / std::sqrt(r2);
  else if (gamma == 1.0) rg = std::sqrt(r2);
  else rg = std::pow(r2, 0.5 * gamma);
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) k[sym_index(i, j)] = rg * ((i == j ? r2 : 0.0) - u[i] * u[j]);
  return k;
}

Vec3 landau_kernel_divergence(const Vec3& u, double gamma) {
  const double r2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
  if (r2 == 0.0) return {0.0, 0.0, 0.0};
  const double s = -2.0 * std::pow(r2, 0.5 * gamma);
  return {s * u[0], s * u[1], s * u[2]};
}

CollisionCoefficients& CollisionCoefficients::axpy(double s, const CollisionCoefficients& o) {
  for (int k = 0; k < 6; ++k) a[k].axpy(s, o.a[k]);
  for (int k = 0; k < 3; ++k) b[k].axpy(s, o.b[k]);
  return *this;
}

CollisionCoefficients& CollisionCoefficients::operator*=(double s) {
  for (auto& f : a) f *= s;
  for (auto& f : b) f *= s;
  return *this;
}

// --- tables ----------------------------------------------------------------

LandauKernelTables::LandauKernelTables(Uninitialized, double gamma, const VelocityGrid& grid)
    : gamma_(gamma), grid_(grid) {
  check_gamma(gamma);
}

LandauKernelTables::LandauKernelTables(double gamma, const VelocityGrid& grid)
    : LandauKernelTables(Uninitialized{}, gamma, grid) {
  const int n = grid_.n();
  const int m = 2 * n;
  const double h = grid_.spacing();
  RealFft fft({m, m, m});
  const double scale = grid_.weight() / static_cast<double>(fft.points());
  for (int s = 0; s < 6; ++s) spectra_[s].resize(fft.modes());
  std::vector<SymMatrix3> samples(fft.points());
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      for (int k = 0; k < m; ++k) {
        const Vec3 u{signed_mode(i, m) * h, signed_mode(j, m) * h, signed_mode(k, m) * h};
        samples[(static_cast<std::size_t>(i) * m + j) * m + k] = landau_kernel(u, gamma_, 0.5 * h);
      }
    }
  }
  for (int s = 0; s < 6; ++s) {
    auto real = fft.real();
    for (std::size_t p = 0; p < samples.size(); ++p) real[p] = samples[p][s];
    fft.forward();
    auto spec = fft.spectrum();
    for (std::size_t p = 0; p < spec.size(); ++p) spectra_[s][p] = spec[p] * scale;
  }
  finish();
}

SymMatrix3 LandauKernelTables::sample(const std::array<int, 3>& offset) const {
  const int n = grid_.n();
  for (int d : offset)
    if (d < -n || d >= n) throw OutOfRangeError("kernel offset outside [-n, n-1]");
  const double h = grid_.spacing();
  return landau_kernel({offset[0] * h, offset[1] * h, offset[2] * h}, gamma_, 0.5 * h);
}

void LandauKernelTables::finish() {
  mu_ = vpl::maxwellian(grid_);
  VelocitySpectral vs(grid_);
  for (auto& g : grad_mu_) g = make_field(grid_);
  vs.gradient(mu_.span(), {grad_mu_[0].span(), grad_mu_[1].span(), grad_mu_[2].span()});
  // Temporary operator over a non-owning alias of *this.
  const LandauOperator op(std::shared_ptr<const LandauKernelTables>(std::shared_ptr<void>(), this));
  mu_coefficients_ = op.coefficients(mu_.span());
}

namespace {

constexpr std::array<char, 8> kTableMagic{'V', 'P', 'L', 'K', 'E', 'R', 'N', '\0'};

}  // namespace

void LandauKernelTables::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(kTableMagic.data(), kTableMagic.size());
  const std::int32_t n = grid_.n();
  const double cutoff = grid_.cutoff();
  out.write(reinterpret_cast<const char*>(&gamma_), sizeof gamma_);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&cutoff), sizeof cutoff);
  for (const auto& s : spectra_)
    out.write(reinterpret_cast<const char*>(s.data()), static_cast<std::streamsize>(s.size() * sizeof(Complex)));
  if (!out) throw FormatError("kernel table write failed");
}

std::shared_ptr<const LandauKernelTables> LandauKernelTables::load(const std::filesystem::path& path,
                                                                   double gamma, const VelocityGrid& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::array<char, 8> magic{};
  double stored_gamma = 0.0, cutoff = 0.0;
  std::int32_t n = 0;
  in.read(magic.data(), magic.size());
  in.read(reinterpret_cast<char*>(&stored_gamma), sizeof stored_gamma);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&cutoff), sizeof cutoff);
  if (!in || magic != kTableMagic) throw FormatError("not a kernel table file");
  if (stored_gamma != gamma || n != grid.n() || cutoff != grid.cutoff())
    throw FormatError("kernel table was built for a different (gamma, n_v, L)");
  auto tables = std::shared_ptr<LandauKernelTables>(new LandauKernelTables(Uninitialized{}, gamma, grid));
  const std::size_t modes = static_cast<std::size_t>(2 * n) * (2 * n) * (n + 1);
  for (auto& s : tables->spectra_) {
    s.resize(modes);
    in.read(reinterpret_cast<char*>(s.data()), static_cast<std::streamsize>(modes * sizeof(Complex)));
  }
  if (!in) throw FormatError("kernel table truncated");
  tables->finish();
  return tables;
}

std::shared_ptr<const LandauKernelTables> build_kernel_tables(double gamma, const VelocityGrid& grid) {
  return std::make_shared<const LandauKernelTables>(gamma, grid);
}

// --- operator ----------------------------------------------------------------

struct LandauOperator::Workspace {
  explicit Workspace(const VelocityGrid& grid)
      : spectral(grid), padded({2 * grid.n(), 2 * grid.n(), 2 * grid.n()}) {
    const std::size_t n = grid.size();
    for (auto& v : grad) v.resize(n);
    for (auto& v : flux) v.resize(n);
    for (auto& v : source) v.resize(padded.modes());
  }
  VelocitySpectral spectral;
  RealFft padded;
  std::array<std::vector<double>, 3> grad;
  std::array<std::vector<double>, 3> flux;
  std::array<std::vector<Complex>, 4> source;  // g, d1 g, d2 g, d3 g
};

LandauOperator::LandauOperator(std::shared_ptr<const LandauKernelTables> tables) : tables_(std::move(tables)) {}

LandauOperator::~LandauOperator() = default;

LandauOperator::Workspace& LandauOperator::workspace(int worker) const {
  std::lock_guard lock(workspace_mutex_);
  if (worker < 0) throw ParameterError("negative worker id");
  if (static_cast<std::size_t>(worker) >= workspaces_.size()) workspaces_.resize(worker + 1);
  auto& slot = workspaces_[worker];
  if (!slot) slot = std::make_unique<Workspace>(tables_->grid());
  return *slot;
}

namespace {

// Copies an n^3 slice into the low corner of the zeroed (2n)^3 buffer.
void pad(std::span<const double> in, std::span<double> out, int n) {
  std::fill(out.begin(), out.end(), 0.0);
  const int m = 2 * n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      std::memcpy(&out[(static_cast<std::size_t>(i) * m + j) * m],
                  &in[(static_cast<std::size_t>(i) * n + j) * n], sizeof(double) * n);
}

void unpad(std::span<const double> in, std::span<double> out, int n) {
  const int m = 2 * n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      std::memcpy(&out[(static_cast<std::size_t>(i) * n + j) * n],
                  &in[(static_cast<std::size_t>(i) * m + j) * m], sizeof(double) * n);
}

}  // namespace

CollisionCoefficients LandauOperator::coefficients(std::span<const double> g, int worker) const {
  const auto& grid = tables_->grid();
  if (g.size() != grid.size()) throw GridMismatchError("collision argument does not match the velocity grid");
  Workspace& ws = workspace(worker);
  const int n = grid.n();
  ws.spectral.gradient(g, {ws.grad[0], ws.grad[1], ws.grad[2]});

  auto transform_into = [&](std::span<const double> in, std::vector<Complex>& out) {
    pad(in, ws.padded.real(), n);
    ws.padded.forward();
    auto spec = ws.padded.spectrum();
    std::copy(spec.begin(), spec.end(), out.begin());
  };
  transform_into(g, ws.source[0]);
  for (int j = 0; j < 3; ++j) transform_into(ws.grad[j], ws.source[1 + j]);

  CollisionCoefficients c;
  for (auto& f : c.a) f = make_field(grid);
  for (auto& f : c.b) f = make_field(grid);
  const std::size_t modes = ws.padded.modes();
  for (int s = 0; s < 6; ++s) {
    const auto k = tables_->spectrum(s);
    auto spec = ws.padded.spectrum();
    for (std::size_t p = 0; p < modes; ++p) spec[p] = k[p] * ws.source[0][p];
    ws.padded.backward();
    unpad(ws.padded.real(), c.a[s].span(), n);
  }
  for (int i = 0; i < 3; ++i) {
    const auto k0 = tables_->spectrum(sym_index(i, 0));
    const auto k1 = tables_->spectrum(sym_index(i, 1));
    const auto k2 = tables_->spectrum(sym_index(i, 2));
    auto spec = ws.padded.spectrum();
    for (std::size_t p = 0; p < modes; ++p)
      spec[p] = k0[p] * ws.source[1][p] + k1[p] * ws.source[2][p] + k2[p] * ws.source[3][p];
    ws.padded.backward();
    unpad(ws.padded.real(), c.b[i].span(), n);
  }
  return c;
}

namespace {

void accumulate_flux(const CollisionCoefficients& c, std::span<const double> f,
                     const std::array<std::span<const double>, 3>& grad, std::array<std::span<double>, 3> flux) {
  const std::size_t n = f.size();
  for (int i = 0; i < 3; ++i) {
    const auto& a0 = c.a[sym_index(i, 0)];
    const auto& a1 = c.a[sym_index(i, 1)];
    const auto& a2 = c.a[sym_index(i, 2)];
    const auto& b = c.b[i];
    auto out = flux[i];
    for (std::size_t p = 0; p < n; ++p)
      out[p] += a0[p] * grad[0][p] + a1[p] * grad[1][p] + a2[p] * grad[2][p] - b[p] * f[p];
  }
}

}  // namespace

void LandauOperator::add_flux(const CollisionCoefficients& c, std::span<const double> f,
                              std::array<std::span<double>, 3> flux, int worker) const {
  Workspace& ws = workspace(worker);
  ws.spectral.gradient(f, {ws.grad[0], ws.grad[1], ws.grad[2]});
  accumulate_flux(c, f, {ws.grad[0], ws.grad[1], ws.grad[2]}, flux);
}

void LandauOperator::add_flux_of_maxwellian(const CollisionCoefficients& c, std::array<std::span<double>, 3> flux,
                                            int) const {
  const auto& g = tables_->maxwellian_gradient();
  accumulate_flux(c, tables_->maxwellian().span(), {g[0].span(), g[1].span(), g[2].span()}, flux);
}

void LandauOperator::divergence(std::array<std::span<const double>, 3> flux, std::span<double> out,
                                int worker) const {
  workspace(worker).spectral.divergence(flux, out);
}

void LandauOperator::apply(const CollisionCoefficients& c, std::span<const double> f, std::span<double> out,
                           int worker) const {
  Workspace& ws = workspace(worker);
  for (auto& v : ws.flux) std::fill(v.begin(), v.end(), 0.0);
  add_flux(c, f, {ws.flux[0], ws.flux[1], ws.flux[2]}, worker);
  divergence({ws.flux[0], ws.flux[1], ws.flux[2]}, out, worker);
}

VelocityField LandauOperator::q(const VelocityField& g, const VelocityField& f, int worker) const {
  if (f.size() != grid().size()) throw GridMismatchError("collision argument does not match the velocity grid");
  VelocityField out = make_field(grid());
  apply(coefficients(g.span(), worker), f.span(), out.span(), worker);
  return out;
}

VelocityField q_landau_fft(const VelocityField& g, const VelocityField& f, const LandauKernelTables& tables) {
  const LandauOperator op(std::shared_ptr<const LandauKernelTables>(std::shared_ptr<void>(), &tables));
  return op.q(g, f);
}

VelocityField q_landau_direct(const VelocityGrid& grid, const VelocityField& g, const VelocityField& f,
                              double gamma) {
  check_gamma(gamma);
  if (grid.n() > kDirectOracleMaxPoints)
    throw CostGuardError("direct collision quadrature limited to n_v <= " + std::to_string(kDirectOracleMaxPoints));
  if (g.size() != grid.size() || f.size() != grid.size())
    throw GridMismatchError("collision argument does not match the velocity grid");
  const std::size_t n = grid.size();
  const double h = grid.spacing();
  const double w = grid.weight();
  std::array<VelocityField, 3> dg, df;
  for (int c = 0; c < 3; ++c) {
    dg[c] = spectral_derivative(grid, g, velocity_axis(c), 1);
    df[c] = spectral_derivative(grid, f, velocity_axis(c), 1);
  }
  std::vector<Vec3> nodes(n);
  for (std::size_t p = 0; p < n; ++p) nodes[p] = grid.velocity(p);

  std::array<VelocityField, 3> flux{make_field(grid), make_field(grid), make_field(grid)};
  for (std::size_t a = 0; a < n; ++a) {
    // flux_i(v) = int phi^{ij}(v - w) [g(w) d_j f(v) - f(v) d_j g(w)] dw
    Vec3 acc{};
    for (std::size_t b = 0; b < n; ++b) {
      const Vec3 u{nodes[a][0] - nodes[b][0], nodes[a][1] - nodes[b][1], nodes[a][2] - nodes[b][2]};
      const SymMatrix3 k = landau_kernel(u, gamma, 0.5 * h);
      for (int i = 0; i < 3; ++i) {
        double s = 0.0;
        for (int j = 0; j < 3; ++j) s += k[sym_index(i, j)] * (g[b] * df[j][a] - f[a] * dg[j][b]);
        acc[i] += s;
      }
    }
    for (int i = 0; i < 3; ++i) flux[i][a] = acc[i] * w;
  }
  VelocityField out = make_field(grid);
  VelocitySpectral vs(grid);
  vs.divergence({flux[0].span(), flux[1].span(), flux[2].span()}, out.span());
  return out;
}

// --- conservative correction -----------------------------------------------

MomentCorrector::MomentCorrector(const VelocityGrid& grid) : grid_(grid) {
  const std::size_t n = grid.size();
  mu_ = maxwellian(grid).values();
  for (auto& b : basis_) b.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    const auto v = grid.velocity(p);
    basis_[0][p] = 1.0;
    for (int c = 0; c < 3; ++c) basis_[1 + c][p] = v[c];
    basis_[4][p] = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
  }
  auto weighted = [&](int k, int l) {
    std::vector<double> prod(n);
    for (std::size_t p = 0; p < n; ++p) prod[p] = basis_[k][p] * basis_[l][p] * mu_[p];
    return pairwise_sum(prod) * grid.weight();
  };
  Eigen::Matrix<double, 5, 5> g;
  for (int k = 0; k < 5; ++k)
    for (int l = 0; l < 5; ++l) g(k, l) = weighted(k, l);
  const Eigen::Matrix<double, 5, 5> gi = g.inverse();
  for (int k = 0; k < 5; ++k)
    for (int l = 0; l < 5; ++l) single_inverse_[k * 5 + l] = gi(k, l);

  // Pair unknowns: mu on +, mu on -, then v mu and |v|^2 mu shared by both.
  Eigen::Matrix<double, 6, 6> m;
  for (int l = 0; l < 6; ++l) {
    std::array<double, 6> col{};
    if (l == 0) col = {g(0, 0), 0.0, g(1, 0), g(2, 0), g(3, 0), g(4, 0)};
    else if (l == 1) col = {0.0, g(0, 0), g(1, 0), g(2, 0), g(3, 0), g(4, 0)};
    else {
      const int b = l - 1;  // basis index 1..4
      col = {g(0, b), g(0, b), 2 * g(1, b), 2 * g(2, b), 2 * g(3, b), 2 * g(4, b)};
    }
    for (int k = 0; k < 6; ++k) m(k, l) = col[k];
  }
  const Eigen::Matrix<double, 6, 6> mi = m.inverse();
  for (int k = 0; k < 6; ++k)
    for (int l = 0; l < 6; ++l) pair_inverse_[k * 6 + l] = mi(k, l);
}

namespace {

double dot(std::span<const double> a, std::span<const double> b, double w) {
  std::vector<double> prod(a.size());
  for (std::size_t p = 0; p < a.size(); ++p) prod[p] = a[p] * b[p];
  return pairwise_sum(prod) * w;
}

}  // namespace

std::array<double, 5> MomentCorrector::moments(std::span<const double> q) const {
  if (q.size() != grid_.size()) throw GridMismatchError("slice does not match the velocity grid");
  std::array<double, 5> m{};
  for (int k = 0; k < 5; ++k) m[k] = dot(q, basis_[k], grid_.weight());
  return m;
}

void MomentCorrector::correct(std::span<double> q, const std::array<double, 5>& target) const {
  const auto m = moments(q);
  std::array<double, 5> c{};
  for (int k = 0; k < 5; ++k)
    for (int l = 0; l < 5; ++l) c[k] += single_inverse_[k * 5 + l] * (m[l] - target[l]);
  for (std::size_t p = 0; p < q.size(); ++p) {
    double s = 0.0;
    for (int k = 0; k < 5; ++k) s += c[k] * basis_[k][p];
    q[p] -= s * mu_[p];
  }
}

std::array<double, 6> MomentCorrector::pair_moments(std::span<const double> q_plus,
                                                    std::span<const double> q_minus) const {
  if (q_plus.size() != grid_.size() || q_minus.size() != grid_.size())
    throw GridMismatchError("slice does not match the velocity grid");
  std::vector<double> sum(q_plus.size());
  for (std::size_t p = 0; p < sum.size(); ++p) sum[p] = q_plus[p] + q_minus[p];
  const double w = grid_.weight();
  return {dot(q_plus, basis_[0], w), dot(q_minus, basis_[0], w), dot(sum, basis_[1], w),
          dot(sum, basis_[2], w),    dot(sum, basis_[3], w),     dot(sum, basis_[4], w)};
}

void MomentCorrector::correct_pair(std::span<double> q_plus, std::span<double> q_minus,
                                   const std::array<double, 6>& target) const {
  const auto m = pair_moments(q_plus, q_minus);
  std::array<double, 6> c{};
  for (int k = 0; k < 6; ++k)
    for (int l = 0; l < 6; ++l) c[k] += pair_inverse_[k * 6 + l] * (m[l] - target[l]);
  for (std::size_t p = 0; p < q_plus.size(); ++p) {
    const double shared = (c[2] * basis_[1][p] + c[3] * basis_[2][p] + c[4] * basis_[3][p] + c[5] * basis_[4][p]) * mu_[p];
    q_plus[p] -= c[0] * mu_[p] + shared;
    q_minus[p] -= c[1] * mu_[p] + shared;
  }
}

// --- assembled right-hand side ---------------------------------------------

SpeciesPair apply_collision_field(const PhaseGrid& grid, const SpeciesPair& f, const LandauOperator& op,
                                  const CollisionOptions& options) {
  if (!(grid.v == op.grid())) throw GridMismatchError("operator tables built for a different velocity grid");
  if (f.plus.size() != grid.size() || f.minus.size() != grid.size())
    throw GridMismatchError("species fields do not match the phase grid");
  SpeciesPair out = make_species(grid);
  const std::size_t nv = grid.v.size();
  const CollisionCoefficients& cmu = op.tables().maxwellian_coefficients();
  const MomentCorrector corrector(grid.v);

  parallel_for(grid.x.size(), [&](std::size_t ix, int worker) {
    const auto fp = velocity_slice(grid, f.plus, ix);
    const auto fm = velocity_slice(grid, f.minus, ix);
    std::vector<double> s(nv);
    for (std::size_t p = 0; p < nv; ++p) s[p] = fp[p] + fm[p];
    const CollisionCoefficients cs = op.coefficients(s, worker);

    // Flux of Q(s, mu), shared by both species.
    std::array<std::vector<double>, 3> base;
    for (auto& b : base) b.assign(nv, 0.0);
    op.add_flux_of_maxwellian(cs, {base[0], base[1], base[2]}, worker);

    CollisionCoefficients g = cmu;
    g *= 2.0;
    if (!options.linearized) g.axpy(1.0, cs);

    std::array<std::vector<double>, 3> flux;
    auto species_rhs = [&](std::span<const double> fs, std::span<double> rhs) {
      for (int i = 0; i < 3; ++i) flux[i] = base[i];
      op.add_flux(g, fs, {flux[0], flux[1], flux[2]}, worker);
      op.divergence({flux[0], flux[1], flux[2]}, rhs, worker);
    };
    auto rp = velocity_slice(grid, out.plus, ix);
    auto rm = velocity_slice(grid, out.minus, ix);
    species_rhs(fp, rp);
    species_rhs(fm, rm);
    if (options.conservative_correction) corrector.correct_pair(rp, rm);
  });
  return out;
}

SpeciesPair apply_collision_field(const SystemState& state, const LandauOperator& op,
                                  const CollisionOptions& options) {
  return apply_collision_field(state.grid(), state.species(), op, options);
}

double equilibrium_residual(const LandauKernelTables& tables) {
  const VelocityField& mu = tables.maxwellian();
  const VelocityField q = q_landau_fft(mu, mu, tables);
  return l2_norm(tables.grid(), q) / l2_norm(tables.grid(), mu);
}

}  // namespace vpl
