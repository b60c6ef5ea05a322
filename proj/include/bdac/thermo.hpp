#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "bdac/free_energy.hpp"
#include "bdac/grid.hpp"
#include "bdac/kinetics.hpp"
#include "bdac/phase_field.hpp"
#include "bdac/summation.hpp"

namespace bdac {

// Discrete free energy split into its parts (energy x volume units).
struct EnergyBreakdown {
  double bulk = 0.0;      // h^d sum_cells chi f_1 + (1 - chi) f_2
  double mixing = 0.0;    // theta h^d sum_cells W(chi)
  double gradient = 0.0;  // theta gamma / 2 h^d sum_faces |grad chi|^2
  double total = 0.0;
  // Bulk part evaluated through the Arrhenius rates; equals `bulk` up to
  // round-off.
  double bulkRewritten = 0.0;
};

// Read-only view of the spatial state needed by the energy functions.
struct FieldView {
  const GridSpec& grid;
  const ClusterField& z;
  std::span<const double> chi;
};

inline EnergyBreakdown total_free_energy(const FieldView& s, const PhaseParams& pp,
                                         const RateModel& rm) {
  const double vol = s.grid.cell_volume();
  CompensatedSum bulk, rewritten, mixing;
  for (std::size_t c = 0; c < s.z.cells(); ++c) {
    const auto zc = s.z.cell(c);
    const double chi = s.chi[c];
    // The endpoint branches avoid 0 * f_l terms.
    double direct = 0.0;
    if (chi > 0.0) direct += chi * phase_free_energy(zc, 1, rm);
    if (chi < 1.0) direct += (1.0 - chi) * phase_free_energy(zc, 2, rm);
    bulk.add(direct);
    rewritten.add(reduced_free_energy(zc, chi, rm));
    mixing.add(mixing_entropy(chi));
  }
  EnergyBreakdown e;
  e.bulk = vol * bulk.value();
  e.bulkRewritten = vol * rewritten.value();
  e.mixing = pp.theta * vol * mixing.value();
  e.gradient = 0.5 * pp.theta * pp.gamma * vol * gradient_square_sum(s.grid, s.chi);
  e.total = e.bulk + e.mixing + e.gradient;
  assert(std::abs(e.bulk - e.bulkRewritten) <=
         1e-9 * (std::abs(e.bulk) + std::abs(e.bulkRewritten) + 1e-300));
  return e;
}

// Same quadrature with the bulk part taken from the rewritten form.
inline double total_free_energy_rewritten(const FieldView& s, const PhaseParams& pp,
                                          const RateModel& rm) {
  const auto e = total_free_energy(s, pp, rm);
  return e.bulkRewritten + e.mixing + e.gradient;
}

// Instantaneous dissipation terms of the coupled system.
struct DissipationReport {
  // h^d k_B theta sum_cells sum_a (A_a - B_a) b ln(B_a / A_a),
  // A_a = K R_a^(1/b) z_a, B_a = R_{a+1}^(1/b) z_{a+1}.
  double bdTerm = 0.0;
  // Exact chain-rule value of dF/dt along the cluster dynamics. Equal to
  // bdTerm when K satisfies the self-consistency constraint.
  double bdExact = 0.0;
  // -(1/tau) h^d sum_cells dF/dchi(z) * dF/dchi(z_eps): the chain-rule rate
  // of the phase relaxation. Reduces to -(1/tau) int (dF/dchi)^2 when
  // mollification leaves z unchanged.
  double acTerm = 0.0;
  // -(1/tau) h^d sum_cells (dF/dchi(z_eps))^2, always <= 0.
  double acSquare = 0.0;
  // Largest single summand of bdTerm (<= 0 in the self-consistent mode).
  double maxSummand = -std::numeric_limits<double>::infinity();
  // |bdExact - bdTerm|: how far a fixed K is from the constraint.
  double constraintDefect = 0.0;
  double dFdtNumeric = std::numeric_limits<double>::quiet_NaN();
  double defect = std::numeric_limits<double>::quiet_NaN();

  double predicted() const noexcept { return bdTerm + acTerm; }
  void set_numeric(double dFdt) noexcept {
    dFdtNumeric = dFdt;
    defect = std::abs(dFdt - predicted());
  }
};

// (A - B) b ln(B / A) with the 0/0 case contributing zero.
inline double flux_dissipation_summand(double a, double b, double bchi) noexcept {
  if (a == 0.0 && b == 0.0) return 0.0;
  if (a == 0.0 || b == 0.0) return -std::numeric_limits<double>::infinity();
  return (a - b) * bchi * (std::log(b) - std::log(a));
}

// `kset` holds one entry per cell or a single entry for all cells.
inline DissipationReport dissipation_rates(const FieldView& s, const ClusterField& zEps,
                                           const PhaseParams& pp, const RateModel& rm,
                                           std::span<const KSetting> kset) {
  const double vol = s.grid.cell_volume();
  const double kt = rm.kbTheta();
  const std::size_t n = s.z.n();
  DissipationReport r;
  CompensatedSum bd, bdx;
  for (std::size_t c = 0; c < s.z.cells(); ++c) {
    const auto zc = s.z.cell(c);
    const double chi = s.chi[c];
    const auto rates = CellRates::compute(rm, chi, n);
    const KSetting k = kset[kset.size() == 1 ? 0 : c];
    const double K = resolve_K(zc, rates, k);
    CompensatedSum cell;
    double jsum = 0.0;
    for (std::size_t a = 1; a < n; ++a) {
      const double A = K * rates.gammaE[a - 1] * zc[a - 1];
      const double B = rates.gammaE[a] * zc[a];
      const double term = flux_dissipation_summand(A, B, rates.b);
      r.maxSummand = std::max(r.maxSummand, term);
      cell.add(term);
      jsum += A - B;
    }
    const double cellBd = kt * cell.value();
    bd.add(cellBd);
    double offset = 0.0;
    if (k.mode == KMode::Fixed && zc[0] > 0.0) {
      offset = rates.b * std::log(K / self_consistent_K(zc, rates));
    }
    bdx.add(cellBd + kt * offset * jsum);
  }
  r.bdTerm = vol * bd.value();
  r.bdExact = vol * bdx.value();
  r.constraintDefect = std::abs(r.bdExact - r.bdTerm);

  const auto gz = variational_derivative_field(s.grid, bulk_drive(s.z, rm), s.chi, pp);
  const auto ge = variational_derivative_field(s.grid, bulk_drive(zEps, rm), s.chi, pp);
  CompensatedSum ac, sq;
  for (std::size_t c = 0; c < gz.size(); ++c) {
    ac.add(gz[c] * ge[c]);
    sq.add(ge[c] * ge[c]);
  }
  r.acTerm = -vol * ac.value() / pp.tau;
  r.acSquare = -vol * sq.value() / pp.tau;
  return r;
}

}  // namespace bdac
