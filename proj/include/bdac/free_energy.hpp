#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "bdac/cluster_state.hpp"
#include "bdac/rate_model.hpp"
#include "bdac/summation.hpp"

namespace bdac {

// Free energy density of pure phase l (1 or 2):
//   f_l(z) = k_B theta sum_a z_a [ b_l ln(z_a / N) + E^l_a / (k_B theta) ].
// Empty components contribute nothing (x ln x -> 0).
inline double phase_free_energy(std::span<const double> z, int phase, const RateModel& rm) {
  const double n = count_N(z);
  if (!(n > 0.0)) return 0.0;
  const double kt = rm.kbTheta();
  const double b = rm.b(phase);
  const auto& e = rm.enthalpy(phase);
  const double logN = std::log(n);
  CompensatedSum s;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] == 0.0) continue;
    s.add(z[i] * (kt * b * (std::log(z[i]) - logN) + e(i + 1)));
  }
  return s.value();
}

inline double phase_free_energy(const ClusterState& z, int phase, const RateModel& rm) {
  return phase_free_energy(z.values(), phase, rm);
}

// f_1(z) - f_2(z), the bulk driving force of the phase field.
inline double phase_energy_difference(std::span<const double> z, const RateModel& rm) {
  return phase_free_energy(z, 1, rm) - phase_free_energy(z, 2, rm);
}

// Per-cell free energy written through the Arrhenius rates,
//   k_B theta sum_a z_a [ b_chi ln(z_a R_a^(1/b_chi) / N) + E_A(chi)/(k_B theta) ],
// with the integration constant s_M = 0.
inline double reduced_free_energy(std::span<const double> z, double chi, const RateModel& rm) {
  const double n = count_N(z);
  if (!(n > 0.0)) return 0.0;
  const double kt = rm.kbTheta();
  const double b = rm.b_mix(chi);
  const double ea = rm.activation_energy(chi) / kt;
  const double logN = std::log(n);
  CompensatedSum s;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] == 0.0) continue;
    const double logR = rm.log_rate(i + 1, chi);
    s.add(kt * z[i] * (b * (std::log(z[i]) + logR / b - logN) + ea));
  }
  return s.value();
}

inline double reduced_free_energy(const ClusterState& z, double chi, const RateModel& rm) {
  return reduced_free_energy(z.values(), chi, rm);
}

// chi ln chi + (1-chi) ln(1-chi) on the closed interval, zero at the ends.
inline double mixing_entropy(double chi) {
  require_phase(chi);
  const auto xlogx = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
  return xlogx(chi) + xlogx(1.0 - chi);
}

}  // namespace bdac
