#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "bdac/error.hpp"
#include "bdac/grid.hpp"

namespace bdac {

// Discrete compact bump kernel phi(r) ~ (1 - r^2)^2, r = |x| / eps.
//
// `weights` already include the cell volume and sum to one, the discrete
// analogue of the kernel integrating to one.
struct MollifierKernel {
  double eps = 0.0;
  int radius = 0;
  struct Tap {
    int dx;
    int dy;
    double weight;
  };
  std::vector<Tap> taps;

  static MollifierKernel bump(const GridSpec& g, double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("mollifier width must be positive");
    MollifierKernel k;
    k.eps = eps;
    const int r = static_cast<int>(std::ceil(eps / g.h));
    const int ry = g.dim == 2 ? r : 0;
    double total = 0.0;
    for (int dy = -ry; dy <= ry; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        const double rr = (dx * dx + dy * dy) * g.h * g.h / (eps * eps);
        if (rr >= 1.0) continue;
        const double w = (1.0 - rr) * (1.0 - rr);
        k.taps.push_back({dx, dy, w});
        total += w;
        k.radius = std::max({k.radius, std::abs(dx), std::abs(dy)});
      }
    }
    for (auto& t : k.taps) t.weight /= total;
    if (static_cast<std::size_t>(k.radius) >= g.nx ||
        (g.dim == 2 && static_cast<std::size_t>(k.radius) >= g.ny)) {
      throw KernelTooWideError("mollifier radius of " + std::to_string(k.radius) +
                               " cells does not fit the domain");
    }
    return k;
  }

  // Single-tap kernel: mollification is the identity.
  static MollifierKernel delta() {
    MollifierKernel k;
    k.taps.push_back({0, 0, 1.0});
    return k;
  }

  double weight_sum() const noexcept {
    double s = 0.0;
    for (const auto& t : taps) s += t.weight;
    return s;
  }
};

// Half-sample reflection across a Neumann boundary.
inline std::size_t reflect_index(long i, std::size_t m) noexcept {
  const long mm = static_cast<long>(m);
  if (i < 0) i = -1 - i;
  if (i >= mm) i = 2 * mm - 1 - i;
  return static_cast<std::size_t>(i);
}

inline void check_kernel_fits(const GridSpec& g, const MollifierKernel& k) {
  if (static_cast<std::size_t>(k.radius) >= g.nx ||
      (g.dim == 2 && static_cast<std::size_t>(k.radius) >= g.ny)) {
    throw KernelTooWideError("mollifier wider than the domain");
  }
}

// Z_eps: per-component discrete convolution with reflection at the
// boundaries. Linear, positivity preserving, exact on constants up to
// round-off, and conserves sum_cells z h^d.
inline ClusterField mollify(const ClusterField& z, const GridSpec& g, const MollifierKernel& k) {
  check_kernel_fits(g, k);
  ClusterField out(z.cells(), z.n(), 0.0);
  for (std::size_t iy = 0; iy < g.ny; ++iy) {
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      auto dst = out.cell(g.index(ix, iy));
      for (const auto& t : k.taps) {
        const std::size_t sx = reflect_index(static_cast<long>(ix) + t.dx, g.nx);
        const std::size_t sy = g.dim == 2 ? reflect_index(static_cast<long>(iy) + t.dy, g.ny) : 0;
        const auto src = z.cell(g.index(sx, sy));
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += t.weight * src[i];
      }
    }
  }
  return out;
}

}  // namespace bdac
