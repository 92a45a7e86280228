#pragma once

// Discrete phase space: a periodic spatial grid (dimension 1-3) times a
// truncated, periodically extended velocity box [-L, L)^3.
//
// Spectral conventions used throughout the library:
//  * Spatial nodes are x_j = j * length / n. Velocity nodes are cell centred,
//    v_j = -L + (j + 1/2) h with h = 2L / n, so the velocity grid is symmetric
//    about the origin and never contains v = 0.
//  * forward_transform returns the full complex spectrum with the L^2-unitary
//    normalization c_m = sqrt(volume) / N * sum_j f_j exp(-2 pi i m.j / n),
//    so that sum_m |c_m|^2 equals the quadrature L^2 norm sum_j |f_j|^2 * cell.
//    Phases are relative to the first node.
//  * Derivatives multiply by (i * wavenumber)^order; the Nyquist mode is
//    zeroed for odd orders. No other dealiasing is applied.

#include <array>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "vpl/error.hpp"
#include "vpl/fft.hpp"

namespace vpl {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Vec3 = std::array<double, 3>;

enum class Axis : int { x1 = 0, x2, x3, v1, v2, v3 };

inline bool is_spatial(Axis a) { return static_cast<int>(a) < 3; }
inline int component(Axis a) { return static_cast<int>(a) % 3; }
inline Axis spatial_axis(int c) { return static_cast<Axis>(c); }
inline Axis velocity_axis(int c) { return static_cast<Axis>(3 + c); }

class SpatialGrid {
 public:
  SpatialGrid(int dim, int n, double length = kTwoPi);

  int dim() const { return dim_; }
  int n() const { return n_; }
  double length() const { return length_; }
  double spacing() const { return length_ / n_; }
  std::size_t size() const { return size_; }
  double volume() const;
  double cell_volume() const;
  double node(int idx) const { return idx * spacing(); }
  /// Physical wavenumber of DFT index `idx` along any axis.
  double wavenumber(int idx) const { return kTwoPi / length_ * signed_mode(idx, n_); }
  std::array<int, 3> unravel(std::size_t flat) const;
  std::array<double, 3> position(std::size_t flat) const;
  std::vector<int> shape() const { return std::vector<int>(dim_, n_); }
  /// Largest |wavenumber| resolved on an axis.
  double max_wavenumber() const { return kTwoPi / length_ * (n_ / 2); }

  bool operator==(const SpatialGrid&) const = default;

 private:
  int dim_;
  int n_;
  double length_;
  std::size_t size_;
};

class VelocityGrid {
 public:
  explicit VelocityGrid(int n, double cutoff = 8.0);

  int n() const { return n_; }
  double cutoff() const { return cutoff_; }
  double spacing() const { return 2.0 * cutoff_ / n_; }
  /// Quadrature weight of each node, h^3.
  double weight() const;
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_ * n_; }
  double node(int j) const { return -cutoff_ + (j + 0.5) * spacing(); }
  Vec3 velocity(std::size_t flat) const;
  std::array<int, 3> unravel(std::size_t flat) const;
  double wavenumber(int idx) const { return std::numbers::pi / cutoff_ * signed_mode(idx, n_); }
  double max_wavenumber() const { return std::numbers::pi / cutoff_ * (n_ / 2); }
  double max_speed() const;

  bool operator==(const VelocityGrid&) const = default;

 private:
  int n_;
  double cutoff_;
};

struct PhaseGrid {
  SpatialGrid x;
  VelocityGrid v;

  std::size_t size() const { return x.size() * v.size(); }
  bool operator==(const PhaseGrid&) const = default;
};

/// Error budget for replacing R^3 by the box [-L, L)^3 sampled with spacing h:
/// Gaussian tail mass outside the box plus the aliasing error of the uniform
/// rule, both with room for moments up to |v|^6.
double truncation_tolerance(const VelocityGrid& grid);

// --- fields --------------------------------------------------------------

template <class Tag>
class Field {
 public:
  Field() = default;
  explicit Field(std::size_t n, double fill = 0.0) : values_(n, fill) {}
  explicit Field(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  Field& operator+=(const Field& o) {
    check(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    check(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  Field& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }
  /// this += s * o
  Field& axpy(double s, const Field& o) {
    check(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += s * o.values_[i];
    return *this;
  }
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }
  bool operator==(const Field&) const = default;

 private:
  void check(const Field& o) const {
    if (o.values_.size() != values_.size()) throw GridMismatchError("field size mismatch");
  }
  std::vector<double> values_;
};

struct SpatialTag {};
struct VelocityTag {};
struct PhaseTag {};
using SpatialField = Field<SpatialTag>;
using VelocityField = Field<VelocityTag>;
/// Phase-space field stored x-major: index = ix * n_v^3 + iv.
using PhaseField = Field<PhaseTag>;

SpatialField make_field(const SpatialGrid& grid, double fill = 0.0);
VelocityField make_field(const VelocityGrid& grid, double fill = 0.0);
PhaseField make_field(const PhaseGrid& grid, double fill = 0.0);

std::span<double> velocity_slice(const PhaseGrid& grid, PhaseField& f, std::size_t ix);
std::span<const double> velocity_slice(const PhaseGrid& grid, const PhaseField& f, std::size_t ix);

template <class Fn>
VelocityField sample(const VelocityGrid& grid, Fn&& fn) {
  VelocityField out = make_field(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = fn(grid.velocity(i));
  return out;
}

template <class Fn>
SpatialField sample(const SpatialGrid& grid, Fn&& fn) {
  SpatialField out = make_field(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = fn(grid.position(i));
  return out;
}

/// fn(x, v) sampled on the phase grid.
template <class Fn>
PhaseField sample(const PhaseGrid& grid, Fn&& fn) {
  PhaseField out = make_field(grid);
  const std::size_t nv = grid.v.size();
  for (std::size_t ix = 0; ix < grid.x.size(); ++ix) {
    const auto x = grid.x.position(ix);
    for (std::size_t iv = 0; iv < nv; ++iv) out[ix * nv + iv] = fn(x, grid.v.velocity(iv));
  }
  return out;
}

// --- transforms ------------------------------------------------------------

/// Full complex spectrum in DFT index order (row-major over `shape`).
struct Spectrum {
  std::vector<int> shape;
  std::vector<Complex> coefficients;

  /// Coefficient at signed mode numbers (one per axis).
  Complex at(std::span<const int> modes) const;
  Complex at(std::initializer_list<int> modes) const {
    return at(std::span<const int>(modes.begin(), modes.size()));
  }
};

Spectrum forward_transform(const SpatialGrid& grid, const SpatialField& field);
Spectrum forward_transform(const VelocityGrid& grid, const VelocityField& field);
SpatialField inverse_transform(const SpatialGrid& grid, const Spectrum& spectrum);
VelocityField inverse_transform(const VelocityGrid& grid, const Spectrum& spectrum);

/// (i k)^order multiplier with Nyquist zeroed for odd orders.
Complex derivative_multiplier(double wavenumber, bool nyquist, int order);

SpatialField spectral_derivative(const SpatialGrid& grid, const SpatialField& field, Axis axis, int order);
VelocityField spectral_derivative(const VelocityGrid& grid, const VelocityField& field, Axis axis,
                                  int order);
PhaseField spectral_derivative(const PhaseGrid& grid, const PhaseField& field, Axis axis, int order);

/// Reusable workspace for derivatives of single velocity slices (n_v^3).
/// Not thread-safe; use one per worker.
class VelocitySpectral {
 public:
  explicit VelocitySpectral(const VelocityGrid& grid);

  void derivative(std::span<const double> in, int component, int order, std::span<double> out);
  void gradient(std::span<const double> in, std::array<std::span<double>, 3> out);
  /// out = sum_i d/dv_i flux_i
  void divergence(std::array<std::span<const double>, 3> flux, std::span<double> out);
  const VelocityGrid& grid() const { return grid_; }

 private:
  VelocityGrid grid_;
  RealFft fft_;
  std::vector<Complex> saved_;
  std::vector<Complex> accumulated_;
};

/// Reusable workspace for spatial derivatives of whole phase fields.
class SpatialBatchSpectral {
 public:
  explicit SpatialBatchSpectral(const PhaseGrid& grid);
  void derivative(std::span<const double> in, int component, int order, std::span<double> out);
  RealFft& fft() { return fft_; }

 private:
  PhaseGrid grid_;
  RealFft fft_;
};

// --- quadrature ----------------------------------------------------------

double integrate(const SpatialGrid& grid, const SpatialField& field);
double integrate(const VelocityGrid& grid, const VelocityField& field);
double integrate(const VelocityGrid& grid, std::span<const double> slice);
/// Integral over x and v.
double integrate(const PhaseGrid& grid, const PhaseField& field);
/// Integral over v only; returns a spatial field.
SpatialField integrate_velocity(const PhaseGrid& grid, const PhaseField& field);

/// Quadrature L^2 norms (not squared).
double l2_norm(const SpatialGrid& grid, const SpatialField& field);
double l2_norm(const VelocityGrid& grid, const VelocityField& field);
double l2_norm(const PhaseGrid& grid, const PhaseField& field);

double japanese_bracket(const Vec3& v);

}  // namespace vpl
