#include "vpl/grid.hpp"

#include <cmath>
#include <string>

#include "vpl/parallel.hpp"

namespace vpl {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void check_order(int order) {
  if (order < 1 || order > 2)
    throw UnsupportedOrderError("spectral derivative order " + std::to_string(order) + " not in {1, 2}");
}

}  // namespace

SpatialGrid::SpatialGrid(int dim, int n, double length) : dim_(dim), n_(n), length_(length) {
  if (dim < 1 || dim > 3) throw ParameterError("spatial dimension must be 1, 2 or 3");
  if (n < 4 || !is_power_of_two(n)) throw ParameterError("spatial points per axis must be a power of two >= 4");
  if (!(length > 0.0)) throw ParameterError("spatial period must be positive");
  size_ = 1;
  for (int d = 0; d < dim; ++d) size_ *= static_cast<std::size_t>(n);
}

double SpatialGrid::volume() const { return std::pow(length_, dim_); }
double SpatialGrid::cell_volume() const { return std::pow(spacing(), dim_); }

std::array<int, 3> SpatialGrid::unravel(std::size_t flat) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int d = dim_ - 1; d >= 0; --d) {
    idx[d] = static_cast<int>(flat % n_);
    flat /= n_;
  }
  return idx;
}

std::array<double, 3> SpatialGrid::position(std::size_t flat) const {
  const auto idx = unravel(flat);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int d = 0; d < dim_; ++d) x[d] = node(idx[d]);
  return x;
}

VelocityGrid::VelocityGrid(int n, double cutoff) : n_(n), cutoff_(cutoff) {
  if (n < 4 || !is_power_of_two(n)) throw ParameterError("velocity points per axis must be a power of two >= 4");
  if (!(cutoff > 0.0)) throw ParameterError("velocity cutoff must be positive");
}

double VelocityGrid::weight() const {
  const double h = spacing();
  return h * h * h;
}

std::array<int, 3> VelocityGrid::unravel(std::size_t flat) const {
  const int k = static_cast<int>(flat % n_);
  flat /= n_;
  const int j = static_cast<int>(flat % n_);
  const int i = static_cast<int>(flat / n_);
  return {i, j, k};
}

Vec3 VelocityGrid::velocity(std::size_t flat) const {
  const auto idx = unravel(flat);
  return {node(idx[0]), node(idx[1]), node(idx[2])};
}

double VelocityGrid::max_speed() const {
  const double c = std::abs(node(0));
  return std::sqrt(3.0) * c;
}

double truncation_tolerance(const VelocityGrid& grid) {
  const double L = grid.cutoff();
  const double h = grid.spacing();
  const double tail = 3.0 * std::erfc(L / std::sqrt(2.0)) * std::pow(1.0 + 3.0 * L * L, 3);
  const double eta = kTwoPi / h;
  const double alias = 6.0 * std::exp(-0.5 * eta * eta) * std::pow(1.0 + eta * eta, 3);
  return tail + alias + 1e-13;
}

SpatialField make_field(const SpatialGrid& grid, double fill) { return SpatialField(grid.size(), fill); }
VelocityField make_field(const VelocityGrid& grid, double fill) { return VelocityField(grid.size(), fill); }
PhaseField make_field(const PhaseGrid& grid, double fill) { return PhaseField(grid.size(), fill); }

std::span<double> velocity_slice(const PhaseGrid& grid, PhaseField& f, std::size_t ix) {
  return f.span().subspan(ix * grid.v.size(), grid.v.size());
}

std::span<const double> velocity_slice(const PhaseGrid& grid, const PhaseField& f, std::size_t ix) {
  return f.span().subspan(ix * grid.v.size(), grid.v.size());
}

// --- full complex transforms ----------------------------------------------

Complex Spectrum::at(std::span<const int> modes) const {
  if (modes.size() != shape.size()) throw GridMismatchError("mode rank does not match spectrum");
  std::size_t flat = 0;
  for (std::size_t d = 0; d < shape.size(); ++d) {
    const int n = shape[d];
    int idx = modes[d] % n;
    if (idx < 0) idx += n;
    flat = flat * n + idx;
  }
  return coefficients[flat];
}

namespace {

Spectrum forward_full(const std::vector<int>& shape, std::span<const double> values, double volume) {
  ComplexFft fft(shape);
  auto data = fft.data();
  for (std::size_t i = 0; i < values.size(); ++i) data[i] = values[i];
  fft.forward();
  const double scale = std::sqrt(volume) / static_cast<double>(values.size());
  Spectrum s{shape, std::vector<Complex>(data.size())};
  for (std::size_t i = 0; i < data.size(); ++i) s.coefficients[i] = data[i] * scale;
  return s;
}

std::vector<double> inverse_full(const std::vector<int>& shape, const Spectrum& s, double volume) {
  if (s.shape != shape) throw GridMismatchError("spectrum shape does not match grid");
  ComplexFft fft(shape);
  auto data = fft.data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = s.coefficients[i];
  fft.backward();
  const double scale = 1.0 / std::sqrt(volume);
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[i].real() * scale;
  return out;
}

}  // namespace

Spectrum forward_transform(const SpatialGrid& grid, const SpatialField& field) {
  if (field.size() != grid.size()) throw GridMismatchError("field does not match spatial grid");
  return forward_full(grid.shape(), field.span(), grid.volume());
}

Spectrum forward_transform(const VelocityGrid& grid, const VelocityField& field) {
  if (field.size() != grid.size()) throw GridMismatchError("field does not match velocity grid");
  const double box = std::pow(2.0 * grid.cutoff(), 3);
  return forward_full({grid.n(), grid.n(), grid.n()}, field.span(), box);
}

SpatialField inverse_transform(const SpatialGrid& grid, const Spectrum& spectrum) {
  return SpatialField(inverse_full(grid.shape(), spectrum, grid.volume()));
}

VelocityField inverse_transform(const VelocityGrid& grid, const Spectrum& spectrum) {
  const double box = std::pow(2.0 * grid.cutoff(), 3);
  return VelocityField(inverse_full({grid.n(), grid.n(), grid.n()}, spectrum, box));
}

// --- derivatives -------------------------------------------------------------

Complex derivative_multiplier(double wavenumber, bool nyquist, int order) {
  if (order == 1) return nyquist ? Complex{0.0, 0.0} : Complex{0.0, wavenumber};
  return Complex{-wavenumber * wavenumber, 0.0};
}

namespace {

// Index along `axis` of half-spectrum entry `mode` for a row-major r2c layout
// of `dims` equal axes of length n (last axis halved).
int half_index(std::size_t mode, int dims, int n, int axis) {
  const int last = n / 2 + 1;
  std::array<int, 3> idx{0, 0, 0};
  idx[dims - 1] = static_cast<int>(mode % last);
  mode /= last;
  for (int d = dims - 2; d >= 0; --d) {
    idx[d] = static_cast<int>(mode % n);
    mode /= n;
  }
  return idx[axis];
}

}  // namespace

VelocitySpectral::VelocitySpectral(const VelocityGrid& grid)
    : grid_(grid), fft_({grid.n(), grid.n(), grid.n()}), saved_(fft_.modes()), accumulated_(fft_.modes()) {}

void VelocitySpectral::derivative(std::span<const double> in, int comp, int order, std::span<double> out) {
  check_order(order);
  if (in.size() != grid_.size() || out.size() != grid_.size())
    throw GridMismatchError("velocity slice size mismatch");
  std::copy(in.begin(), in.end(), fft_.real().begin());
  fft_.forward();
  const int n = grid_.n();
  const double norm = 1.0 / static_cast<double>(grid_.size());
  auto spec = fft_.spectrum();
  for (std::size_t m = 0; m < spec.size(); ++m) {
    const int idx = half_index(m, 3, n, comp);
    spec[m] *= derivative_multiplier(grid_.wavenumber(idx), idx == n / 2, order) * norm;
  }
  fft_.backward();
  std::copy(fft_.real().begin(), fft_.real().end(), out.begin());
}

void VelocitySpectral::gradient(std::span<const double> in, std::array<std::span<double>, 3> out) {
  if (in.size() != grid_.size()) throw GridMismatchError("velocity slice size mismatch");
  std::copy(in.begin(), in.end(), fft_.real().begin());
  fft_.forward();
  std::copy(fft_.spectrum().begin(), fft_.spectrum().end(), saved_.begin());
  const int n = grid_.n();
  const double norm = 1.0 / static_cast<double>(grid_.size());
  for (int c = 0; c < 3; ++c) {
    auto spec = fft_.spectrum();
    for (std::size_t m = 0; m < spec.size(); ++m) {
      const int idx = half_index(m, 3, n, c);
      spec[m] = saved_[m] * derivative_multiplier(grid_.wavenumber(idx), idx == n / 2, 1) * norm;
    }
    fft_.backward();
    std::copy(fft_.real().begin(), fft_.real().end(), out[c].begin());
  }
}

void VelocitySpectral::divergence(std::array<std::span<const double>, 3> flux, std::span<double> out) {
  const int n = grid_.n();
  const double norm = 1.0 / static_cast<double>(grid_.size());
  std::fill(accumulated_.begin(), accumulated_.end(), Complex{});
  for (int c = 0; c < 3; ++c) {
    std::copy(flux[c].begin(), flux[c].end(), fft_.real().begin());
    fft_.forward();
    auto spec = fft_.spectrum();
    for (std::size_t m = 0; m < spec.size(); ++m) {
      const int idx = half_index(m, 3, n, c);
      accumulated_[m] += spec[m] * derivative_multiplier(grid_.wavenumber(idx), idx == n / 2, 1);
    }
  }
  auto spec = fft_.spectrum();
  for (std::size_t m = 0; m < spec.size(); ++m) spec[m] = accumulated_[m] * norm;
  fft_.backward();
  std::copy(fft_.real().begin(), fft_.real().end(), out.begin());
}

SpatialBatchSpectral::SpatialBatchSpectral(const PhaseGrid& grid)
    : grid_(grid), fft_(grid.x.shape(), static_cast<int>(grid.v.size())) {}

void SpatialBatchSpectral::derivative(std::span<const double> in, int comp, int order, std::span<double> out) {
  check_order(order);
  if (comp >= grid_.x.dim()) throw GridMismatchError("spatial axis exceeds grid dimension");
  if (in.size() != grid_.size() || out.size() != grid_.size())
    throw GridMismatchError("phase field size mismatch");
  std::copy(in.begin(), in.end(), fft_.real().begin());
  fft_.forward();
  const int n = grid_.x.n();
  const int dims = grid_.x.dim();
  const std::size_t batch = grid_.v.size();
  const double norm = 1.0 / static_cast<double>(grid_.x.size());
  auto spec = fft_.spectrum();
  for (std::size_t m = 0; m < fft_.modes(); ++m) {
    const int idx = half_index(m, dims, n, comp);
    const Complex mult = derivative_multiplier(grid_.x.wavenumber(idx), idx == n / 2, order) * norm;
    for (std::size_t b = 0; b < batch; ++b) spec[m * batch + b] *= mult;
  }
  fft_.backward();
  std::copy(fft_.real().begin(), fft_.real().end(), out.begin());
}

SpatialField spectral_derivative(const SpatialGrid& grid, const SpatialField& field, Axis axis, int order) {
  check_order(order);
  if (!is_spatial(axis) || component(axis) >= grid.dim())
    throw GridMismatchError("axis is not a spatial axis of this grid");
  if (field.size() != grid.size()) throw GridMismatchError("field does not match spatial grid");
  RealFft fft(grid.shape());
  std::copy(field.begin(), field.end(), fft.real().begin());
  fft.forward();
  const int n = grid.n();
  const double norm = 1.0 / static_cast<double>(grid.size());
  auto spec = fft.spectrum();
  for (std::size_t m = 0; m < spec.size(); ++m) {
    const int idx = half_index(m, grid.dim(), n, component(axis));
    spec[m] *= derivative_multiplier(grid.wavenumber(idx), idx == n / 2, order) * norm;
  }
  fft.backward();
  return SpatialField(std::vector<double>(fft.real().begin(), fft.real().end()));
}

VelocityField spectral_derivative(const VelocityGrid& grid, const VelocityField& field, Axis axis, int order) {
  check_order(order);
  if (is_spatial(axis)) throw GridMismatchError("axis is not a velocity axis");
  if (field.size() != grid.size()) throw GridMismatchError("field does not match velocity grid");
  VelocitySpectral ws(grid);
  VelocityField out = make_field(grid);
  ws.derivative(field.span(), component(axis), order, out.span());
  return out;
}

PhaseField spectral_derivative(const PhaseGrid& grid, const PhaseField& field, Axis axis, int order) {
  check_order(order);
  if (field.size() != grid.size()) throw GridMismatchError("field does not match phase grid");
  PhaseField out = make_field(grid);
  if (is_spatial(axis)) {
    if (component(axis) >= grid.x.dim()) throw GridMismatchError("spatial axis exceeds grid dimension");
    SpatialBatchSpectral ws(grid);
    ws.derivative(field.span(), component(axis), order, out.span());
    return out;
  }
  VelocitySpectral ws(grid.v);
  for (std::size_t ix = 0; ix < grid.x.size(); ++ix)
    ws.derivative(velocity_slice(grid, field, ix), component(axis), order, velocity_slice(grid, out, ix));
  return out;
}

// --- quadrature -------------------------------------------------------------

double integrate(const SpatialGrid& grid, const SpatialField& field) {
  if (field.size() != grid.size()) throw GridMismatchError("field does not match spatial grid");
  return pairwise_sum(field.span()) * grid.cell_volume();
}

double integrate(const VelocityGrid& grid, std::span<const double> slice) {
  if (slice.size() != grid.size()) throw GridMismatchError("slice does not match velocity grid");
  return pairwise_sum(slice) * grid.weight();
}

double integrate(const VelocityGrid& grid, const VelocityField& field) { return integrate(grid, field.span()); }

SpatialField integrate_velocity(const PhaseGrid& grid, const PhaseField& field) {
  if (field.size() != grid.size()) throw GridMismatchError("field does not match phase grid");
  SpatialField out = make_field(grid.x);
  for (std::size_t ix = 0; ix < grid.x.size(); ++ix) out[ix] = integrate(grid.v, velocity_slice(grid, field, ix));
  return out;
}

double integrate(const PhaseGrid& grid, const PhaseField& field) {
  return integrate(grid.x, integrate_velocity(grid, field));
}

double l2_norm(const SpatialGrid& grid, const SpatialField& field) {
  std::vector<double> sq(field.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = field[i] * field[i];
  return std::sqrt(pairwise_sum(sq) * grid.cell_volume());
}

double l2_norm(const VelocityGrid& grid, const VelocityField& field) {
  std::vector<double> sq(field.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = field[i] * field[i];
  return std::sqrt(pairwise_sum(sq) * grid.weight());
}

double l2_norm(const PhaseGrid& grid, const PhaseField& field) {
  std::vector<double> sq(field.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = field[i] * field[i];
  return std::sqrt(pairwise_sum(sq) * grid.x.cell_volume() * grid.v.weight());
}

double japanese_bracket(const Vec3& v) { return std::sqrt(1.0 + v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

}  // namespace vpl
