#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "bdac/cluster_state.hpp"
#include "bdac/error.hpp"
#include "bdac/rate_model.hpp"

namespace bdac {

// How the condensation prefactor K is obtained for a cell.
struct KSetting {
  KMode mode = KMode::SelfConsistent;
  double value = 0.0;

  static KSetting self_consistent() noexcept { return {KMode::SelfConsistent, 0.0}; }
  static KSetting fixed(double k) {
    if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("fixed K must be positive and finite");
    return {KMode::Fixed, k};
  }
};

// Rate coefficients of one cell with the phase value frozen.
//
// gammaE[i] is the evaporation rate Gamma^E_{i+1} = R_{i+1}^(1/b_chi);
// condensation of an (i+1)-cluster proceeds at K * gammaE[i].
struct CellRates {
  double chi = 0.0;
  double b = 1.0;
  double logS = 0.0;
  // Gamma^E_1 / s, so that self-consistent K = (z_1 / N) * kPrefactor.
  double kPrefactor = 1.0;
  std::vector<double> gammaE;

  static CellRates compute(const RateModel& rm, double chi, std::size_t n) {
    CellRates r;
    r.chi = chi;
    r.b = rm.b_mix(chi);
    r.logS = rm.log_s(chi);
    r.gammaE.resize(n);
    for (std::size_t a = 1; a <= n; ++a) r.gammaE[a - 1] = rm.evaporation_rate(a, chi);
    r.kPrefactor = rm.checked_exp(rm.log_evaporation_rate(1, chi) - r.logS, 1);
    return r;
  }

  std::size_t size() const noexcept { return gammaE.size(); }
};

// Fluxes j[0..n]: j[alpha] is the net rate alpha -> alpha+1 and
// j[0] = -sum_{alpha>=1} j[alpha] is the monomer bookkeeping flux.
struct FluxVector {
  std::vector<double> j;

  std::size_t size() const noexcept { return j.size(); }
  double operator[](std::size_t alpha) const { return j.at(alpha); }
};

// K from the constraint (1/K) z_1 R_1^(1/b)/N = exp(-E_A/(b k_B theta)).
inline double self_consistent_K(std::span<const double> z, const CellRates& rates) {
  if (z.empty()) throw DegenerateStateError("empty cluster state");
  const double n = count_N(z);
  if (!(n > 0.0)) throw DegenerateStateError("N(z) = 0: self-consistent K undefined");
  if (!(z[0] > 0.0)) throw DegenerateStateError("z_1 = 0: self-consistent K undefined");
  return (z[0] / n) * rates.kPrefactor;
}

inline double self_consistent_K(const ClusterState& z, double chi, const RateModel& rm) {
  if (z.empty()) throw DegenerateStateError("empty cluster state");
  return self_consistent_K(z.values(), CellRates::compute(rm, chi, 1));
}

inline double resolve_K(std::span<const double> z, const CellRates& rates, KSetting k) {
  return k.mode == KMode::Fixed ? k.value : self_consistent_K(z, rates);
}

// Writes j[0..n] into `j` (size n+1).
inline void fluxes_into(std::span<const double> z, const CellRates& rates, double K,
                        std::span<double> j) noexcept {
  const std::size_t n = z.size();
  const auto& g = rates.gammaE;
  double total = 0.0;
  for (std::size_t a = 1; a < n; ++a) {
    j[a] = K * g[a - 1] * z[a - 1] - g[a] * z[a];
    total += j[a];
  }
  j[n] = 0.0;
  j[0] = -total;
}

inline FluxVector fluxes(const ClusterState& z, double chi, double K, const RateModel& rm) {
  if (!(K > 0.0)) throw DomainError("K must be positive");
  const auto rates = CellRates::compute(rm, chi, z.size());
  FluxVector out{std::vector<double>(z.size() + 1, 0.0)};
  fluxes_into(z.values(), rates, K, out.j);
  return out;
}

// Truncated right-hand side:
//   dz_1 = -j_1 - sum_{a=1}^{n-1} j_a,  dz_a = j_{a-1} - j_a,  dz_n = j_{n-1}.
inline void rhs_into(std::span<const double> z, const CellRates& rates, double K,
                     std::span<double> dz) noexcept {
  const std::size_t n = z.size();
  if (n == 0) return;
  if (n == 1) {
    dz[0] = 0.0;
    return;
  }
  const auto& g = rates.gammaE;
  double total = 0.0;
  double prev = 0.0;
  for (std::size_t a = 1; a < n; ++a) {
    const double ja = K * g[a - 1] * z[a - 1] - g[a] * z[a];
    total += ja;
    if (a == 1) {
      dz[0] = -ja;
    } else {
      dz[a - 1] = prev - ja;
    }
    prev = ja;
  }
  dz[0] -= total;
  dz[n - 1] = prev;
}

inline std::vector<double> rhs(const ClusterState& z, double chi, const RateModel& rm,
                               KSetting k = KSetting::self_consistent()) {
  const auto rates = CellRates::compute(rm, chi, z.size());
  std::vector<double> dz(z.size(), 0.0);
  if (z.empty()) return dz;
  rhs_into(z.values(), rates, resolve_K(z.values(), rates, k), dz);
  return dz;
}

}  // namespace bdac
