#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bdac/error.hpp"

namespace bdac {

// Cell-centred uniform grid in one or two dimensions with zero-flux
// (Neumann) boundaries. In 1D, ny == 1.
struct GridSpec {
  int dim = 1;
  std::size_t nx = 3;
  std::size_t ny = 1;
  double h = 1.0;

  static GridSpec line(std::size_t nx, double h) { return make(1, nx, 1, h); }
  static GridSpec square(std::size_t nx, std::size_t ny, double h) { return make(2, nx, ny, h); }

  static GridSpec make(int dim, std::size_t nx, std::size_t ny, double h) {
    GridSpec g{dim, nx, dim == 1 ? 1 : ny, h};
    g.validate();
    return g;
  }

  void validate() const {
    if (dim != 1 && dim != 2) throw DomainError("grid dimension must be 1 or 2");
    if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("grid spacing must be positive");
    if (nx < 3 || (dim == 2 && ny < 3)) throw DomainError("grid needs at least 3 cells per axis");
    if (dim == 1 && ny != 1) throw DomainError("1D grid must have ny == 1");
  }

  std::size_t cells() const noexcept { return nx * ny; }
  double cell_volume() const noexcept { return dim == 1 ? h : h * h; }
  std::size_t index(std::size_t ix, std::size_t iy) const noexcept { return iy * nx + ix; }
  std::size_t ix(std::size_t c) const noexcept { return c % nx; }
  std::size_t iy(std::size_t c) const noexcept { return c / nx; }

  bool operator==(const GridSpec&) const = default;
};

// Discrete Laplacian with reflective ghost cells, so boundary faces carry no
// flux. Equals -(1/h^d) times the chi-gradient of the face-summed
// gradient energy (1/2) h^d sum_faces ((chi_j - chi_i)/h)^2.
inline void laplacian_into(const GridSpec& g, std::span<const double> u, std::span<double> out) {
  const double inv = 1.0 / (g.h * g.h);
  for (std::size_t iy = 0; iy < g.ny; ++iy) {
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      const std::size_t c = g.index(ix, iy);
      double acc = 0.0;
      if (ix > 0) acc += u[c - 1] - u[c];
      if (ix + 1 < g.nx) acc += u[c + 1] - u[c];
      if (g.dim == 2) {
        if (iy > 0) acc += u[c - g.nx] - u[c];
        if (iy + 1 < g.ny) acc += u[c + g.nx] - u[c];
      }
      out[c] = acc * inv;
    }
  }
}

inline std::vector<double> laplacian(const GridSpec& g, std::span<const double> u) {
  std::vector<double> out(u.size(), 0.0);
  laplacian_into(g, u, out);
  return out;
}

// Sum over interior faces of |difference / h|^2.
inline double gradient_square_sum(const GridSpec& g, std::span<const double> u) {
  const double inv = 1.0 / (g.h * g.h);
  double acc = 0.0;
  for (std::size_t iy = 0; iy < g.ny; ++iy) {
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      const std::size_t c = g.index(ix, iy);
      if (ix + 1 < g.nx) {
        const double d = u[c + 1] - u[c];
        acc += d * d * inv;
      }
      if (g.dim == 2 && iy + 1 < g.ny) {
        const double d = u[c + g.nx] - u[c];
        acc += d * d * inv;
      }
    }
  }
  return acc;
}

// Cluster states of every cell, stored cell-major: value(c, i) is the density
// of (i+1)-clusters in cell c.
class ClusterField {
 public:
  ClusterField() = default;
  ClusterField(std::size_t cells, std::size_t n, double fill = 0.0)
      : cells_(cells), n_(n), data_(cells * n, fill) {}

  std::size_t cells() const noexcept { return cells_; }
  std::size_t n() const noexcept { return n_; }

  std::span<double> cell(std::size_t c) noexcept { return {data_.data() + c * n_, n_}; }
  std::span<const double> cell(std::size_t c) const noexcept { return {data_.data() + c * n_, n_}; }
  double& operator()(std::size_t c, std::size_t i) noexcept { return data_[c * n_ + i]; }
  double operator()(std::size_t c, std::size_t i) const noexcept { return data_[c * n_ + i]; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool operator==(const ClusterField&) const = default;

 private:
  std::size_t cells_ = 0;
  std::size_t n_ = 0;
  std::vector<double> data_;
};

}  // namespace bdac
