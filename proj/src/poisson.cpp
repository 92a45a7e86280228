#include "vpl/poisson.hpp"

#include <cmath>
#include <vector>

#include "vpl/parallel.hpp"

namespace vpl {

namespace {

// Squared wavenumber of half-spectrum entry `mode`.
double wavenumber_squared(const SpatialGrid& grid, std::size_t mode) {
  const int n = grid.n();
  const int last = n / 2 + 1;
  double k2 = 0.0;
  const int idx_last = static_cast<int>(mode % last);
  k2 += grid.wavenumber(idx_last) * grid.wavenumber(idx_last);
  mode /= last;
  for (int d = grid.dim() - 2; d >= 0; --d) {
    const int idx = static_cast<int>(mode % n);
    mode /= n;
    k2 += grid.wavenumber(idx) * grid.wavenumber(idx);
  }
  return k2;
}

}  // namespace

PotentialSolution solve_potential(const SpatialGrid& grid, const SpatialField& rho) {
  if (rho.size() != grid.size()) throw GridMismatchError("density does not match spatial grid");
  PotentialSolution out;
  const double mean = pairwise_sum(rho.span()) / static_cast<double>(grid.size());
  const double rms = l2_norm(grid, rho) / std::sqrt(grid.volume());
  out.removed_mean = mean;
  out.mean_warning = std::abs(mean) > 1e-8 * rms && std::abs(mean) > 0.0;

  RealFft fft(grid.shape());
  std::copy(rho.begin(), rho.end(), fft.real().begin());
  fft.forward();
  auto spec = fft.spectrum();
  const double norm = 1.0 / static_cast<double>(grid.size());
  for (std::size_t m = 0; m < spec.size(); ++m) {
    const double k2 = wavenumber_squared(grid, m);
    spec[m] = m == 0 ? Complex{} : spec[m] * (norm / k2);
  }
  fft.backward();
  out.phi = SpatialField(std::vector<double>(fft.real().begin(), fft.real().end()));
  out.electric_field = spatial_gradient(grid, out.phi);
  for (auto& e : out.electric_field) e *= -1.0;
  return out;
}

SpatialField charge_density(const PhaseGrid& grid, const PhaseField& f_plus, const PhaseField& f_minus) {
  SpatialField rho = integrate_velocity(grid, f_plus);
  rho -= integrate_velocity(grid, f_minus);
  return rho;
}

std::vector<SpatialField> spatial_gradient(const SpatialGrid& grid, const SpatialField& field) {
  std::vector<SpatialField> out;
  out.reserve(grid.dim());
  for (int d = 0; d < grid.dim(); ++d) out.push_back(spectral_derivative(grid, field, spatial_axis(d), 1));
  return out;
}

double field_energy(const SpatialGrid& grid, const SpatialField& phi) {
  double total = 0.0;
  for (const auto& g : spatial_gradient(grid, phi)) {
    const double n = l2_norm(grid, g);
    total += n * n;
  }
  return total;
}

double poisson_residual(const SpatialGrid& grid, const SpatialField& phi, const SpatialField& rho) {
  SpatialField lap = make_field(grid);
  for (int d = 0; d < grid.dim(); ++d) lap += spectral_derivative(grid, phi, spatial_axis(d), 2);
  const double mean = pairwise_sum(rho.span()) / static_cast<double>(grid.size());
  SpatialField r = make_field(grid);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = -lap[i] - (rho[i] - mean);
  return l2_norm(grid, r);
}

}  // namespace vpl
