#include "vpl/oracle.hpp"

#include <cmath>
#include <string>

#include "vpl/parallel.hpp"

namespace vpl {

GaussianMomentTable::GaussianMomentTable() {
  values[0] = 1.0;
  for (int n = 0; n < 3; ++n) values[n + 1] = (2.0 * n + 3.0) * values[n];
}

namespace {

void check_fd_order(int order) {
  if (order != 1 && order != 2) throw UnsupportedOrderError("finite differences support order 1 or 2");
}

// Central difference along one axis of a row-major periodic array.
template <class F>
F central_difference(const F& field, int dims, int n, int axis, double h, int order) {
  F out(field.size());
  std::size_t stride = 1;
  for (int c = dims - 1; c > axis; --c) stride *= static_cast<std::size_t>(n);
  for (std::size_t p = 0; p < field.size(); ++p) {
    const std::size_t i = (p / stride) % static_cast<std::size_t>(n);
    const std::size_t base = p - i * stride;
    const std::size_t up = base + ((i + 1) % n) * stride;
    const std::size_t down = base + ((i + n - 1) % n) * stride;
    out[p] = order == 1 ? (field[up] - field[down]) / (2.0 * h) : (field[up] - 2.0 * field[p] + field[down]) / (h * h);
  }
  return out;
}

}  // namespace

SpatialField fd_derivative(const SpatialGrid& grid, const SpatialField& field, Axis axis, int order) {
  check_fd_order(order);
  if (!is_spatial(axis) || component(axis) >= grid.dim()) throw ParameterError("axis is not a spatial axis of the grid");
  if (field.size() != grid.size()) throw GridMismatchError("field does not match the spatial grid");
  return central_difference(field, grid.dim(), grid.n(), component(axis), grid.spacing(), order);
}

VelocityField fd_derivative(const VelocityGrid& grid, const VelocityField& field, Axis axis, int order) {
  check_fd_order(order);
  if (is_spatial(axis)) throw ParameterError("axis is not a velocity axis");
  if (field.size() != grid.size()) throw GridMismatchError("field does not match the velocity grid");
  return central_difference(field, 3, grid.n(), component(axis), grid.spacing(), order);
}

FdStudy fd_derivative_study(const std::function<double(const std::array<double, 3>&)>& fn, const SpatialGrid& base,
                            Axis axis, int order, int levels) {
  if (levels < 3) throw ParameterError("a Richardson estimate needs at least 3 levels");
  FdStudy study;
  std::vector<SpatialField> derivs;
  for (int l = 0; l < levels; ++l) {
    const SpatialGrid grid(base.dim(), base.n() << l, base.length());
    derivs.push_back(fd_derivative(grid, sample(grid, fn), axis, order));
    study.n.push_back(grid.n());
  }
  // Value of level l at coarse node p.
  auto at_coarse = [&](int l, std::size_t p) {
    const auto idx = base.unravel(p);
    std::size_t flat = 0;
    const std::size_t n = static_cast<std::size_t>(base.n()) << l;
    for (int c = 0; c < base.dim(); ++c) flat = flat * n + (static_cast<std::size_t>(idx[c]) << l);
    return derivs[l][flat];
  };
  for (int l = 0; l + 1 < levels; ++l) {
    double d = 0.0;
    for (std::size_t p = 0; p < base.size(); ++p) d = std::max(d, std::abs(at_coarse(l, p) - at_coarse(l + 1, p)));
    study.level_differences.push_back(d);
  }
  const double d0 = study.level_differences[levels - 3];
  const double d1 = study.level_differences[levels - 2];
  study.order = (d0 > 0.0 && d1 > 0.0) ? std::log2(d0 / d1) : 0.0;
  study.finest = std::move(derivs.back());
  return study;
}

double highres_norm(const AnalyticPair& f, const PhaseGrid& base, const WeightSpec& spec, int a, int b, int factor) {
  if (factor != 2 && factor != 4) throw ParameterError("refinement factor must be 2 or 4");
  if (!f.plus.derivative || !f.minus.derivative) throw UnsupportedError("highres_norm needs analytic derivatives");
  const SpatialGrid xg(base.x.dim(), base.x.n() * factor, base.x.length());
  const VelocityGrid vg(base.v.n() * factor, base.v.cutoff());
  const double A = exp_weight_constant(spec, a, b);
  const auto alphas = multi_indices(xg.dim(), a);
  const auto betas = multi_indices(3, b);
  const std::size_t nv = vg.size();

  std::vector<double> weights(nv), inv_bracket2(nv);
  for (std::size_t iv = 0; iv < nv; ++iv) {
    const Vec3 v = vg.velocity(iv);
    weights[iv] = weight_value(spec, v, a, b);
    const double jb = japanese_bracket(v);
    inv_bracket2[iv] = 1.0 / (jb * jb);
  }

  std::vector<double> per_node(xg.size());
  parallel_for(xg.size(), [&](std::size_t ix, int) {
    const auto x = xg.position(ix);
    const double phi = f.phi ? f.phi(x) : 0.0;
    std::vector<double> terms;
    terms.reserve(2 * nv * alphas.size() * betas.size());
    for (int s = 0; s < 2; ++s) {
      const AnalyticField& field = s == 0 ? f.plus : f.minus;
      const double sign = s == 0 ? 1.0 : -1.0;
      for (const auto& alpha : alphas)
        for (const auto& beta : betas)
          for (std::size_t iv = 0; iv < nv; ++iv) {
            const double d = field.derivative(x, vg.velocity(iv), alpha, beta);
            const double w = std::exp(sign * A * phi * inv_bracket2[iv]) * weights[iv] * d;
            terms.push_back(w * w);
          }
    }
    per_node[ix] = pairwise_sum(terms);
  });
  return pairwise_sum(per_node) * xg.cell_volume() * vg.weight();
}

}  // namespace vpl
