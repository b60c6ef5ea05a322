#pragma once

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bdac/error.hpp"
#include "bdac/free_energy.hpp"
#include "bdac/grid.hpp"
#include "bdac/rate_model.hpp"

namespace bdac {

struct PhaseParams {
  double tau = 1.0;
  double gamma = 1e-3;
  double theta = 1.0;

  void validate() const {
    if (!(tau > 0.0) || !(gamma > 0.0) || !(theta > 0.0)) {
      throw DomainError("tau, gamma and theta must be positive");
    }
  }
  bool operator==(const PhaseParams&) const = default;
};

// Phase indicator on the grid; every value lies strictly inside (0,1).
class PhaseField {
 public:
  PhaseField() = default;
  explicit PhaseField(std::vector<double> chi) : chi_(std::move(chi)) {
    for (std::size_t c = 0; c < chi_.size(); ++c) {
      if (!(chi_[c] > 0.0 && chi_[c] < 1.0)) {
        throw DomainError("phase field value " + std::to_string(chi_[c]) + " at cell " +
                          std::to_string(c) + " outside (0,1)");
      }
    }
  }
  std::size_t size() const noexcept { return chi_.size(); }
  double operator[](std::size_t c) const noexcept { return chi_[c]; }
  std::span<const double> values() const noexcept { return chi_; }
  const std::vector<double>& vector() const noexcept { return chi_; }

 private:
  std::vector<double> chi_;
};

inline void require_open_phase(double chi) {
  if (!(chi > 0.0 && chi < 1.0)) {
    throw DomainError("double-well potential requires 0 < chi < 1, got " + std::to_string(chi));
  }
}

// W(chi) = chi ln chi + (1 - chi) ln(1 - chi).
inline double double_well(double chi) {
  require_open_phase(chi);
  return chi * std::log(chi) + (1.0 - chi) * std::log1p(-chi);
}

inline double double_well_prime(double chi) {
  require_open_phase(chi);
  return std::log(chi) - std::log1p(-chi);
}

inline double double_well_second(double chi) {
  require_open_phase(chi);
  return 1.0 / (chi * (1.0 - chi));
}

// dF/dchi = f_1(z_eps) - f_2(z_eps) + theta W'(chi) - theta gamma lap(chi).
inline double variational_derivative(std::span<const double> zEps, double chi,
                                     double laplacianChi, const PhaseParams& pp,
                                     const RateModel& rm) {
  return phase_energy_difference(zEps, rm) + pp.theta * double_well_prime(chi) -
         pp.theta * pp.gamma * laplacianChi;
}

// Field version; `drive[c]` is f_1 - f_2 of the cell's (mollified) state.
inline std::vector<double> variational_derivative_field(const GridSpec& g,
                                                        std::span<const double> drive,
                                                        std::span<const double> chi,
                                                        const PhaseParams& pp) {
  std::vector<double> out(chi.size());
  laplacian_into(g, chi, out);
  for (std::size_t c = 0; c < chi.size(); ++c) {
    out[c] = drive[c] + pp.theta * double_well_prime(chi[c]) - pp.theta * pp.gamma * out[c];
  }
  return out;
}

inline std::vector<double> bulk_drive(const ClusterField& z, const RateModel& rm) {
  std::vector<double> d(z.cells());
  for (std::size_t c = 0; c < z.cells(); ++c) d[c] = phase_energy_difference(z.cell(c), rm);
  return d;
}

struct PhaseStepControls {
  // Cells must stay inside (delta, 1 - delta).
  double delta = 1e-12;
  // Substeps satisfy h * theta * max W''(chi) / tau <= stability.
  double stability = 1.0;
  int maxHalvings = 60;
  // Budget of accepted substeps per call.
  int maxSubsteps = 1'000'000;
};

struct PhaseStepReport {
  int substeps = 0;
  int halvings = 0;
  double minChi = 1.0;
  double maxChi = 0.0;
};

// Semi-implicit Allen-Cahn integrator: the Laplacian is implicit, the
// logarithmic and bulk terms explicit,
//   (I - (h theta gamma / tau) L) chi^{k+1} = chi^k - (h / tau)(drive + theta W'(chi^k)).
// Factorizations are cached per substep length.
class PhaseStepper {
 public:
  PhaseStepper(GridSpec grid, PhaseParams pp, PhaseStepControls controls = {})
      : g_(grid), pp_(pp), c_(controls) {
    g_.validate();
    pp_.validate();
    build_laplacian();
  }

  const GridSpec& grid() const noexcept { return g_; }
  const PhaseParams& params() const noexcept { return pp_; }

  // Advances chi by exactly `dt` with `drive` frozen; halves the substep
  // whenever a cell would leave (delta, 1 - delta).
  PhaseStepReport step(std::vector<double>& chi, std::span<const double> drive, double dt) {
    if (!(dt > 0.0)) throw DomainError("time step must be positive");
    PhaseStepReport rep;
    const std::size_t m = chi.size();
    std::vector<double> rhs(m), next(m);
    double t = 0.0;
    double h = dt;
    int halvings = 0;
    int tries = 0;
    while (true) {
      const double remaining = dt - t;
      bool last = h >= remaining * (1.0 - 1e-12);
      if (last) h = remaining;
      double wmax = 0.0;
      for (double x : chi) wmax = std::max(wmax, double_well_second(x));
      while (h * pp_.theta * wmax / pp_.tau > c_.stability) {
        h *= 0.5;
        last = false;
        ++halvings;
        if (++tries > c_.maxHalvings) throw StepFailure("phase step underflow (stability)");
      }
      for (std::size_t c = 0; c < m; ++c) {
        rhs[c] = chi[c] - (h / pp_.tau) * (drive[c] + pp_.theta * double_well_prime(chi[c]));
      }
      solve(h, rhs, next);
      bool inside = true;
      for (double x : next) {
        if (!(x > c_.delta && x < 1.0 - c_.delta)) {
          inside = false;
          break;
        }
      }
      if (!inside) {
        h *= 0.5;
        ++halvings;
        if (++tries > c_.maxHalvings) {
          throw StepFailure("phase step could not keep chi inside (0,1)");
        }
        continue;
      }
      chi.swap(next);
      tries = 0;
      if (++rep.substeps >= c_.maxSubsteps && !last) {
        throw StepFailure("phase step needs more than " + std::to_string(c_.maxSubsteps) + " substeps");
      }
      t += h;
      if (last) break;
      h = std::min(2.0 * h, dt - t);
    }
    rep.halvings = halvings;
    for (double x : chi) {
      rep.minChi = std::min(rep.minChi, x);
      rep.maxChi = std::max(rep.maxChi, x);
    }
    return rep;
  }

 private:
  using Solver = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>;

  void build_laplacian() {
    const std::size_t m = g_.cells();
    const double inv = 1.0 / (g_.h * g_.h);
    std::vector<Eigen::Triplet<double>> trip;
    const auto link = [&](std::size_t a, std::size_t b) {
      trip.emplace_back(a, b, inv);
      trip.emplace_back(a, a, -inv);
    };
    for (std::size_t iy = 0; iy < g_.ny; ++iy) {
      for (std::size_t ix = 0; ix < g_.nx; ++ix) {
        const std::size_t c = g_.index(ix, iy);
        if (ix > 0) link(c, c - 1);
        if (ix + 1 < g_.nx) link(c, c + 1);
        if (g_.dim == 2) {
          if (iy > 0) link(c, c - g_.nx);
          if (iy + 1 < g_.ny) link(c, c + g_.nx);
        }
      }
    }
    lap_.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    lap_.setFromTriplets(trip.begin(), trip.end());
  }

  void solve(double h, std::span<const double> rhs, std::vector<double>& out) {
    auto it = cache_.find(h);
    if (it == cache_.end()) {
      Eigen::SparseMatrix<double> a(lap_.rows(), lap_.cols());
      a.setIdentity();
      a -= (h * pp_.theta * pp_.gamma / pp_.tau) * lap_;
      auto solver = std::make_unique<Solver>();
      solver->compute(a);
      if (solver->info() != Eigen::Success) throw StepFailure("phase matrix factorization failed");
      if (cache_.size() > 32) cache_.clear();
      it = cache_.emplace(h, std::move(solver)).first;
    }
    Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    Eigen::VectorXd x = it->second->solve(b);
    out.assign(x.data(), x.data() + x.size());
  }

  GridSpec g_;
  PhaseParams pp_;
  PhaseStepControls c_;
  Eigen::SparseMatrix<double> lap_;
  std::map<double, std::unique_ptr<Solver>> cache_;
};

// One phase-field step of length dt driven by the mollified cluster field.
inline PhaseField step_phase(const PhaseField& chi, const ClusterField& zEps, const GridSpec& g,
                             const PhaseParams& pp, const RateModel& rm, double dt,
                             PhaseStepControls controls = {}) {
  PhaseStepper stepper(g, pp, controls);
  std::vector<double> work = chi.vector();
  const auto drive = bulk_drive(zEps, rm);
  stepper.step(work, drive, dt);
  return PhaseField(std::move(work));
}

}  // namespace bdac
