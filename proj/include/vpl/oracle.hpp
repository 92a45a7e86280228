#pragma once

// Slow references for the tests. Each takes a different route from the code
// it checks: closed forms, finite differences, or analytic derivatives
// sampled on refined grids.

#include <array>
#include <functional>
#include <vector>

#include "vpl/grid.hpp"
#include "vpl/weights.hpp"

namespace vpl {

/// int |v|^{2n} mu dv for n = 0..3, from m_{n+1} = (2n + 3) m_n.
struct GaussianMomentTable {
  std::array<double, 4> values{};
  GaussianMomentTable();
  double operator[](int n) const { return values.at(n); }
};

/// Second-order periodic central differences, order 1 or 2.
SpatialField fd_derivative(const SpatialGrid& grid, const SpatialField& field, Axis axis, int order);
VelocityField fd_derivative(const VelocityGrid& grid, const VelocityField& field, Axis axis, int order);

struct FdStudy {
  /// Derivative on the finest grid.
  SpatialField finest;
  std::vector<int> n;
  /// Max-norm differences between consecutive levels on the coarsest nodes.
  std::vector<double> level_differences;
  /// Richardson estimate log2(d_k / d_{k+1}) from the last two differences.
  double order = 0.0;
};

/// Samples fn on grids with n, 2n, ... (levels >= 3) points per axis and
/// differentiates each by finite differences. Spatial nodes nest under
/// halving, which the Richardson estimate relies on.
FdStudy fd_derivative_study(const std::function<double(const std::array<double, 3>&)>& fn, const SpatialGrid& base,
                            Axis axis, int order, int levels);

/// A phase-space function known together with its derivatives:
/// derivative(x, v, alpha, beta) = d^alpha_x d^beta_v f(x, v).
struct AnalyticField {
  std::function<double(const std::array<double, 3>& x, const Vec3& v, const std::array<int, 3>& alpha,
                       const std::array<int, 3>& beta)>
      derivative;
};

struct AnalyticPair {
  AnalyticField plus;
  AnalyticField minus;
  /// Potential on the torus; empty means phi = 0.
  std::function<double(const std::array<double, 3>&)> phi;
};

/// Unladdered shell sum_{|alpha| = a, |beta| = b} || exp(+-A phi / <v>^2) w(a, b)
/// d^alpha_beta f_pm ||^2 over both species, with the analytic derivatives
/// sampled on the grid refined by `factor` (2 or 4) in x and v.
double highres_norm(const AnalyticPair& f, const PhaseGrid& base, const WeightSpec& spec, int a, int b, int factor);

}  // namespace vpl
