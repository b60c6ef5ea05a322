#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bdac/error.hpp"
#include "bdac/summation.hpp"

namespace bdac {

// Truncated cluster-number vector at one spatial cell.
//
// Storage is zero-based: `values()[i]` is the number density of clusters of
// size `i + 1`. The truncation size is `size()`. All entries are finite and
// non-negative.
class ClusterState {
 public:
  ClusterState() = default;
  explicit ClusterState(std::size_t n) : z_(n, 0.0) {}
  explicit ClusterState(std::vector<double> z) : z_(std::move(z)) { validate(); }

  std::size_t size() const noexcept { return z_.size(); }
  bool empty() const noexcept { return z_.empty(); }

  // Number density of clusters of size `alpha` (1-based).
  double operator()(std::size_t alpha) const { return z_.at(alpha - 1); }

  std::span<const double> values() const noexcept { return z_; }
  const std::vector<double>& vector() const noexcept { return z_; }

  bool operator==(const ClusterState&) const = default;

 private:
  void validate() const {
    for (std::size_t i = 0; i < z_.size(); ++i) {
      if (!std::isfinite(z_[i]) || z_[i] < 0.0) {
        throw DomainError("cluster density z[" + std::to_string(i + 1) +
                          "] = " + std::to_string(z_[i]) +
                          " is negative or non-finite");
      }
    }
  }

  std::vector<double> z_;
};

// Mass density: sum of alpha * z_alpha.
inline double rho(std::span<const double> z) noexcept {
  CompensatedSum s;
  for (std::size_t i = 0; i < z.size(); ++i) s.add(static_cast<double>(i + 1) * z[i]);
  return s.value();
}

// Total number of clusters N(z).
inline double count_N(std::span<const double> z) noexcept { return compensated_sum(z); }

// Norm of the space X: sum of alpha * |z_alpha|.
inline double x_norm(std::span<const double> z) noexcept {
  CompensatedSum s;
  for (std::size_t i = 0; i < z.size(); ++i) s.add(static_cast<double>(i + 1) * std::abs(z[i]));
  return s.value();
}

// Mass held by clusters larger than `fraction * n`; large values signal that
// the truncation is starving the distribution.
inline double tail_mass(std::span<const double> z, double fraction = 0.9) noexcept {
  const auto start = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(z.size())));
  CompensatedSum s;
  for (std::size_t i = start; i < z.size(); ++i) s.add(static_cast<double>(i + 1) * z[i]);
  return s.value();
}

inline double rho(const ClusterState& z) noexcept { return rho(z.values()); }
inline double count_N(const ClusterState& z) noexcept { return count_N(z.values()); }
inline double x_norm(const ClusterState& z) noexcept { return x_norm(z.values()); }

}  // namespace bdac
