#pragma once

// Seeded generators and independent reference computations shared by the
// unit and acceptance tests.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace bdtest {

inline constexpr std::uint64_t kSeeds[] = {1, 7, 42, 1234, 99991, 20240611, 777, 31337};

struct Gen {
  explicit Gen(std::uint64_t s) : seed(s), rng(s) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
  std::size_t index(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

  // Strictly positive distribution decaying roughly like exp(-alpha/scale).
  std::vector<double> positive_state(std::size_t n, double scale = 4.0) {
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = uniform(0.2, 1.0) * std::exp(-static_cast<double>(i) / scale);
    return z;
  }

  // Non-negative state with z_1 > 0 and some zero entries.
  std::vector<double> sparse_state(std::size_t n) {
    auto z = positive_state(n);
    for (std::size_t i = 1; i < n; ++i) {
      if (coin(0.2)) z[i] = 0.0;
    }
    return z;
  }

  std::string label() const { return "seed " + std::to_string(seed); }

  std::uint64_t seed;
  std::mt19937_64 rng;
};

// n = 2, fixed K: z' = A z with A = [[-2 K g1, 2 g2], [K g1, -g2]]. det A = 0,
// so exp(A t) = I + A (exp(mu t) - 1) / mu with mu = trace A.
inline std::array<double, 2> two_state_exact(double K, double g1, double g2, std::array<double, 2> z0, double t) {
  const double a11 = -2.0 * K * g1, a12 = 2.0 * g2, a21 = K * g1, a22 = -g2;
  const double mu = a11 + a22;
  const double f = std::expm1(mu * t) / mu;
  return {z0[0] + f * (a11 * z0[0] + a12 * z0[1]), z0[1] + f * (a21 * z0[0] + a22 * z0[1])};
}

// Right-hand side of the truncated system written straight from the
// definitions with constant evaporation rate g and a self-consistent or
// fixed K.
struct ConstantRateSystem {
  double g = 1.0;       // evaporation rate, same for every size
  double s = 1.0;       // exp(-E_A / (k theta b))
  double kFixed = 0.0;  // 0 selects the self-consistent K

  std::vector<double> operator()(const std::vector<double>& z) const {
    const std::size_t n = z.size();
    double N = 0.0;
    for (double v : z) N += v;
    const double K = kFixed > 0.0 ? kFixed : z[0] * g / (N * s);
    std::vector<double> j(n + 1, 0.0), dz(n, 0.0);
    for (std::size_t a = 1; a < n; ++a) j[a] = K * g * z[a - 1] - g * z[a];
    double sum = 0.0;
    for (std::size_t a = 1; a < n; ++a) sum += j[a];
    dz[0] = -j[1] - sum;
    for (std::size_t a = 2; a < n; ++a) dz[a - 1] = j[a - 1] - j[a];
    if (n >= 2) dz[n - 1] = j[n - 1];
    return dz;
  }
};

// Fixed-step classical RK4.
template <class F>
std::vector<double> rk4_reference(const F& f, std::vector<double> z, double T, int steps) {
  const double h = T / steps;
  const std::size_t n = z.size();
  std::vector<double> tmp(n);
  for (int s = 0; s < steps; ++s) {
    const auto k1 = f(z);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + 0.5 * h * k1[i];
    const auto k2 = f(tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + 0.5 * h * k2[i];
    const auto k3 = f(tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + h * k3[i];
    const auto k4 = f(tmp);
    for (std::size_t i = 0; i < n; ++i) z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return z;
}

}  // namespace bdtest
