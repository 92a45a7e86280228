#pragma once

#include <array>
#include <vector>

#include "vpl/grid.hpp"

namespace vpl {

struct PotentialSolution {
  SpatialField phi;
  /// E = -grad phi, one component per spatial dimension.
  std::vector<SpatialField> electric_field;
  /// Spatial mean of the input density that was projected out.
  double removed_mean = 0.0;
  /// Set when |mean(rho)| exceeded 1e-8 of the RMS density.
  bool mean_warning = false;
};

/// Zero-mean periodic Poisson solve -Laplace(phi) = rho. The k = 0 mode of
/// rho is discarded; a nonzero mean is reported through mean_warning.
PotentialSolution solve_potential(const SpatialGrid& grid, const SpatialField& rho);

/// rho(x) = int (f+ - f-) dv
SpatialField charge_density(const PhaseGrid& grid, const PhaseField& f_plus, const PhaseField& f_minus);

/// Spectral gradient of a spatial field, one component per dimension.
std::vector<SpatialField> spatial_gradient(const SpatialGrid& grid, const SpatialField& field);

/// int |grad phi|^2 dx
double field_energy(const SpatialGrid& grid, const SpatialField& phi);

/// Residual || -Laplace(phi) - (rho - mean rho) ||_{L^2}.
double poisson_residual(const SpatialGrid& grid, const SpatialField& phi, const SpatialField& rho);

}  // namespace vpl
