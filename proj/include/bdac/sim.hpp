#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "bdac/cluster_state.hpp"
#include "bdac/equilibrium.hpp"
#include "bdac/error.hpp"
#include "bdac/grid.hpp"
#include "bdac/integrator.hpp"
#include "bdac/kinetics.hpp"
#include "bdac/mollifier.hpp"
#include "bdac/phase_field.hpp"
#include "bdac/rate_model.hpp"
#include "bdac/thermo.hpp"

namespace bdac {

struct InitialData {
  // monomers | geometric | equilibrium | table
  std::string kind = "monomers";
  double rho = 1.0;
  // Ratio z_{a+1}/z_a for the geometric profile.
  double ratio = 0.5;
  std::vector<double> table;
  // Relative amplitude of the seeded multiplicative perturbation; the cell
  // mass is restored afterwards.
  double perturbation = 0.0;

  // uniform | tanh | random
  std::string chiKind = "uniform";
  double chi = 0.5;
  double chiLow = 0.05;
  double chiHigh = 0.95;
  // Interface width of the tanh profile, in units of the domain length.
  double chiWidth = 0.1;

  bool operator==(const InitialData&) const = default;
};

struct SimConfig {
  std::size_t n = 256;
  double kB = 1.0;
  double theta = 1.0;
  double b1 = 1.0;
  double b2 = 0.75;
  EnergyProfile e1 = EnergyProfile::constant(1.0);
  EnergyProfile e2 = EnergyProfile::constant(1.2);
  ActivationEnergy ea = ActivationEnergy::constant(0.5);
  double gamma = 1e-3;
  double tau = 1.0;
  // Mollifier width; NaN selects 3h, zero disables mollification.
  double eps = std::numeric_limits<double>::quiet_NaN();
  KMode kMode = KMode::SelfConsistent;
  double kFixed = 1.0;

  int dim = 1;
  std::size_t nx = 64;
  std::size_t ny = 1;
  double h = 1.0 / 64.0;

  InitialData init;
  std::uint64_t seed = 1;

  double T = 1.0;
  double dt = 1e-3;
  double dtMin = 1e-12;

  std::size_t outputEvery = 1;
  std::size_t snapshotEvery = 0;
  std::size_t checkpointEvery = 0;
  std::vector<std::size_t> snapshotSizes{1};

  double rtol = 1e-9;
  double atolFraction = 1e-14;
  double phaseDelta = 1e-12;
  // Admissible F increase per step, relative to |F(0)|.
  double dissipationTol = 1e-8;
  bool strictDissipation = false;
  int threads = 1;

  RateModel rate_model() const { return RateModel(e1, e2, ea, b1, b2, kB * theta, RateModel::kDefaultExponentCap); }
  GridSpec grid() const { return GridSpec::make(dim, nx, dim == 1 ? 1 : ny, h); }
  PhaseParams phase_params() const { return PhaseParams{tau, gamma, theta}; }
  double mollifier_eps() const { return std::isnan(eps) ? 3.0 * h : eps; }
  KSetting k_setting() const {
    return kMode == KMode::Fixed ? KSetting::fixed(kFixed) : KSetting::self_consistent();
  }
  StepControls step_controls() const {
    StepControls c;
    c.rtol = rtol;
    c.atolFraction = atolFraction;
    return c;
  }

  bool operator==(const SimConfig& o) const {
    // NaN eps compares equal to NaN eps.
    const bool epsEq = (std::isnan(eps) && std::isnan(o.eps)) || eps == o.eps;
    return epsEq && n == o.n && kB == o.kB && theta == o.theta && b1 == o.b1 && b2 == o.b2 &&
           e1 == o.e1 && e2 == o.e2 && ea.phase1 == o.ea.phase1 && ea.phase2 == o.ea.phase2 &&
           gamma == o.gamma && tau == o.tau && kMode == o.kMode && kFixed == o.kFixed &&
           dim == o.dim && nx == o.nx && ny == o.ny && h == o.h && init == o.init &&
           seed == o.seed && T == o.T && dt == o.dt && dtMin == o.dtMin &&
           outputEvery == o.outputEvery && snapshotEvery == o.snapshotEvery &&
           checkpointEvery == o.checkpointEvery && snapshotSizes == o.snapshotSizes &&
           rtol == o.rtol && atolFraction == o.atolFraction && phaseDelta == o.phaseDelta &&
           dissipationTol == o.dissipationTol && strictDissipation == o.strictDissipation &&
           threads == o.threads;
  }
};

// Diagnostics of one state.
struct Diagnostics {
  double t = 0.0;
  std::size_t step = 0;
  double dt = 0.0;
  EnergyBreakdown energy;
  DissipationReport dissipation;
  double maxMassDrift = 0.0;
  double totalMass = 0.0;
  double minChi = 1.0;
  double maxChi = 0.0;
};

struct SimState {
  double t = 0.0;
  std::size_t step = 0;
  GridSpec grid;
  ClusterField z;
  std::vector<double> chi;
  std::vector<double> rho0;
  std::vector<double> dtHint;
  std::deque<Diagnostics> history;
  static constexpr std::size_t kHistory = 64;

  void remember(const Diagnostics& d) {
    history.push_back(d);
    if (history.size() > kHistory) history.pop_front();
  }
};

// Largest per-cell relative drift |rho(t) - rho(0)| / rho(0).
inline double max_mass_drift(const SimState& s) {
  double worst = 0.0;
  for (std::size_t c = 0; c < s.z.cells(); ++c) {
    worst = std::max(worst, std::abs(rho(s.z.cell(c)) - s.rho0[c]) / s.rho0[c]);
  }
  return worst;
}

// (A1): every cell has positive mass and a positive monomer density.
inline void check_initial_assumption(const ClusterField& z) {
  for (std::size_t c = 0; c < z.cells(); ++c) {
    const auto zc = z.cell(c);
    if (!(rho(zc) > 0.0)) {
      throw AssumptionViolation("A1", "initial mass is zero in cell " + std::to_string(c));
    }
    if (!(zc[0] > 0.0)) {
      throw AssumptionViolation("A1", "initial monomer density is zero in cell " + std::to_string(c));
    }
  }
}

namespace detail {

inline std::vector<double> initial_profile(const SimConfig& cfg, const RateModel& rm) {
  const auto& in = cfg.init;
  std::vector<double> z(cfg.n, 0.0);
  if (in.kind == "monomers") {
    z[0] = in.rho;
  } else if (in.kind == "geometric") {
    double w = 1.0;
    for (auto& v : z) {
      v = w;
      w *= in.ratio;
    }
    const double scale = in.rho / rho(z);
    for (auto& v : z) v *= scale;
  } else if (in.kind == "equilibrium") {
    EquilibriumProblem p;
    p.rhoBar = in.rho;
    p.chiBar = in.chi;
    p.rm = &rm;
    const auto sol = solve_equilibrium(p);
    for (std::size_t i = 0; i < z.size() && i < sol.zBar.size(); ++i) z[i] = sol.zBar[i];
  } else if (in.kind == "table") {
    if (in.table.size() > cfg.n) throw DomainError("initial table is longer than n");
    std::copy(in.table.begin(), in.table.end(), z.begin());
  } else {
    throw DomainError("unknown initial data kind '" + in.kind + "'");
  }
  return z;
}

inline std::vector<double> initial_phase(const SimConfig& cfg, const GridSpec& g, std::mt19937_64& rng) {
  const auto& in = cfg.init;
  std::vector<double> chi(g.cells(), in.chi);
  if (in.chiKind == "uniform") return chi;
  if (in.chiKind == "tanh") {
    const double len = static_cast<double>(g.nx) * g.h;
    for (std::size_t c = 0; c < chi.size(); ++c) {
      const double x = (static_cast<double>(g.ix(c)) + 0.5) * g.h;
      const double s = 0.5 * (1.0 + std::tanh((x - 0.5 * len) / (in.chiWidth * len)));
      chi[c] = in.chiLow + (in.chiHigh - in.chiLow) * s;
    }
    return chi;
  }
  if (in.chiKind == "random") {
    std::uniform_real_distribution<double> u(in.chiLow, in.chiHigh);
    for (auto& v : chi) v = u(rng);
    return chi;
  }
  throw DomainError("unknown phase initial data kind '" + in.chiKind + "'");
}

}  // namespace detail

inline SimState make_initial_state(const SimConfig& cfg) {
  const auto rm = cfg.rate_model();
  SimState s;
  s.grid = cfg.grid();
  const std::size_t cells = s.grid.cells();
  std::mt19937_64 rng(cfg.seed);
  const auto base = detail::initial_profile(cfg, rm);
  s.z = ClusterField(cells, cfg.n);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t c = 0; c < cells; ++c) {
    auto zc = s.z.cell(c);
    std::copy(base.begin(), base.end(), zc.begin());
    if (cfg.init.perturbation > 0.0) {
      const double target = rho(zc);
      for (auto& v : zc) v *= 1.0 + cfg.init.perturbation * u(rng);
      const double scale = target / rho(zc);
      for (auto& v : zc) v *= scale;
    }
  }
  check_initial_assumption(s.z);
  s.chi = detail::initial_phase(cfg, s.grid, rng);
  PhaseField check(s.chi);
  s.rho0.resize(cells);
  for (std::size_t c = 0; c < cells; ++c) s.rho0[c] = rho(s.z.cell(c));
  s.dtHint.assign(cells, cfg.dt);
  return s;
}

struct StepOutcome {
  double dt = 0.0;
  int kineticSubsteps = 0;
  int phaseSubsteps = 0;
  int phaseHalvings = 0;
};

struct RunSummary {
  std::size_t steps = 0;
  double t = 0.0;
  double maxMassDrift = 0.0;
  // Accepted steps where F rose by more than dissipationTol |F(0)|.
  std::size_t dissipationViolations = 0;
  double maxFIncrease = 0.0;
  double maxDefect = 0.0;
  // Largest flux-dissipation summand over all evaluated states.
  double maxSummand = -std::numeric_limits<double>::infinity();
  // Accepted steps with some chi outside (0,1).
  std::size_t phaseViolations = 0;
  std::size_t rejectedSteps = 0;
  double minChi = 1.0;
  double maxChi = 0.0;
  double F0 = 0.0;
  double F = 0.0;
  double wallSeconds = 0.0;
};

struct RunHooks {
  std::function<void(const Diagnostics&, const SimState&)> record;
  std::function<void(const SimState&)> snapshot;
  std::function<void(const SimState&)> checkpoint;
};

// Coupled cluster/phase-field engine. Each composite step is a Lie
// splitting: cluster kinetics at frozen chi, mollification, Allen-Cahn.
class Simulation {
 public:
  explicit Simulation(SimConfig cfg) : Simulation(cfg, make_initial_state(cfg)) {}

  Simulation(SimConfig cfg, SimState state)
      : cfg_(std::move(cfg)),
        rm_(cfg_.rate_model()),
        pp_(cfg_.phase_params()),
        state_(std::move(state)),
        kernel_(cfg_.mollifier_eps() > 0.0 ? MollifierKernel::bump(state_.grid, cfg_.mollifier_eps())
                                           : MollifierKernel::delta()),
        stepper_(state_.grid, pp_, PhaseStepControls{cfg_.phaseDelta, 1.0, 60}) {
    if (state_.z.n() != cfg_.n || state_.z.cells() != state_.grid.cells() ||
        state_.chi.size() != state_.grid.cells()) {
      throw DomainError("state does not match the configuration");
    }
    if (state_.dtHint.size() != state_.grid.cells()) state_.dtHint.assign(state_.grid.cells(), cfg_.dt);
  }

  const SimConfig& config() const noexcept { return cfg_; }
  const RateModel& rate_model() const noexcept { return rm_; }
  const SimState& state() const noexcept { return state_; }
  SimState& mutable_state() noexcept { return state_; }
  const MollifierKernel& kernel() const noexcept { return kernel_; }

  ClusterField mollified() const { return mollify(state_.z, state_.grid, kernel_); }

  EnergyBreakdown energy() const {
    return total_free_energy(FieldView{state_.grid, state_.z, state_.chi}, pp_, rm_);
  }

  Diagnostics diagnose() const {
    Diagnostics d;
    d.t = state_.t;
    d.step = state_.step;
    const FieldView view{state_.grid, state_.z, state_.chi};
    d.energy = total_free_energy(view, pp_, rm_);
    const KSetting k = cfg_.k_setting();
    d.dissipation = dissipation_rates(view, mollified(), pp_, rm_, std::span<const KSetting>(&k, 1));
    d.maxMassDrift = max_mass_drift(state_);
    d.totalMass = 0.0;
    for (std::size_t c = 0; c < state_.z.cells(); ++c) d.totalMass += rho(state_.z.cell(c));
    d.totalMass *= state_.grid.cell_volume();
    for (double x : state_.chi) {
      d.minChi = std::min(d.minChi, x);
      d.maxChi = std::max(d.maxChi, x);
    }
    return d;
  }

  // One composite step of exactly `dt`. The state is left untouched when a
  // stage fails.
  StepOutcome advance(double dt) {
    if (!(dt > 0.0)) throw DomainError("time step must be positive");
    StepOutcome out;
    out.dt = dt;
    ClusterField z = state_.z;
    std::vector<double> hints = state_.dtHint;
    out.kineticSubsteps = kinetics(z, hints, dt);

    const auto zEps = mollify(z, state_.grid, kernel_);
    std::vector<double> chi = state_.chi;
    const auto rep = stepper_.step(chi, bulk_drive(zEps, rm_), dt);
    out.phaseSubsteps = rep.substeps;
    out.phaseHalvings = rep.halvings;

    state_.z = std::move(z);
    state_.chi = std::move(chi);
    state_.dtHint = std::move(hints);
    state_.t += dt;
    ++state_.step;
    return out;
  }

  RunSummary run(const RunHooks& hooks = {}) {
    const auto wall0 = std::chrono::steady_clock::now();
    RunSummary sum;
    Diagnostics d = diagnose();
    sum.F0 = d.energy.total;
    const double tolF = cfg_.dissipationTol * std::max(std::abs(sum.F0), 1e-300);
    auto emit = [&](const Diagnostics& diag, bool force) {
      state_.remember(diag);
      const bool due = cfg_.outputEvery > 0 && state_.step % cfg_.outputEvery == 0;
      if (hooks.record && (due || force)) hooks.record(diag, state_);
      if (hooks.snapshot && cfg_.snapshotEvery > 0 && (state_.step % cfg_.snapshotEvery == 0 || force)) {
        hooks.snapshot(state_);
      }
      if (hooks.checkpoint && cfg_.checkpointEvery > 0 &&
          (state_.step % cfg_.checkpointEvery == 0 || force)) {
        hooks.checkpoint(state_);
      }
    };
    const auto finish = [&](const Diagnostics& last) {
      sum.steps = state_.step;
      sum.t = state_.t;
      sum.F = last.energy.total;
      sum.maxMassDrift = std::max(sum.maxMassDrift, last.maxMassDrift);
      sum.wallSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    };
    track_phase(d, sum);
    emit(d, true);

    double dt = cfg_.dt;
    int calm = 0;
    const double tEnd = cfg_.T;
    while (state_.t < tEnd) {
      // A remainder within round-off of dt is taken as the final step.
      const double remaining = tEnd - state_.t;
      const bool final = remaining <= dt * (1.0 + 1e-8);
      const double h = final && std::abs(remaining - dt) > 1e-8 * dt ? remaining : dt;
      try {
        advance(h);
        if (final) state_.t = tEnd;
      } catch (const StepFailure&) {
        ++sum.rejectedSteps;
        dt = 0.5 * h;
        calm = 0;
        if (dt < cfg_.dtMin) {
          finish(d);
          throw;
        }
        continue;
      }
      Diagnostics next = diagnose();
      next.dt = h;
      const double dF = next.energy.total - d.energy.total;
      d.dissipation.set_numeric(dF / h);
      if (std::isfinite(d.dissipation.defect)) sum.maxDefect = std::max(sum.maxDefect, d.dissipation.defect);
      next.dissipation.dFdtNumeric = dF / h;
      sum.maxFIncrease = std::max(sum.maxFIncrease, dF);
      if (cfg_.kMode == KMode::SelfConsistent && dF > tolF) {
        ++sum.dissipationViolations;
        if (cfg_.strictDissipation) {
          finish(next);
          throw Error("free energy increased by " + std::to_string(dF) + " at step " +
                      std::to_string(state_.step));
        }
      }
      sum.maxMassDrift = std::max(sum.maxMassDrift, next.maxMassDrift);
      track_phase(next, sum);
      d = next;
      emit(d, !(state_.t < tEnd));
      if (dt < cfg_.dt && ++calm >= 8) {
        dt = std::min(cfg_.dt, 2.0 * dt);
        calm = 0;
      }
    }
    finish(d);
    return sum;
  }

 private:
  static void track_phase(const Diagnostics& d, RunSummary& sum) {
    sum.maxSummand = std::max(sum.maxSummand, d.dissipation.maxSummand);
    sum.minChi = std::min(sum.minChi, d.minChi);
    sum.maxChi = std::max(sum.maxChi, d.maxChi);
    if (!(d.minChi > 0.0 && d.maxChi < 1.0)) ++sum.phaseViolations;
  }

  // Advances every cell at frozen chi; cells are split into contiguous
  // blocks, one per worker.
  int kinetics(ClusterField& z, std::vector<double>& hints, double dt) const {
    const std::size_t cells = z.cells();
    const std::size_t workers =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, cfg_.threads)), 1, cells);
    std::vector<int> substeps(cells, 0);
    std::vector<std::string> failures(cells);
    const KSetting k = cfg_.k_setting();
    const StepControls controls = cfg_.step_controls();
    auto work = [&](std::size_t lo, std::size_t hi) {
      std::vector<double> buf(z.n());
      for (std::size_t c = lo; c < hi; ++c) {
        try {
          CellIntegrator integ(CellRates::compute(rm_, state_.chi[c], z.n()), k, controls);
          auto zc = z.cell(c);
          std::copy(zc.begin(), zc.end(), buf.begin());
          const auto rep = integ.integrate(buf, dt, hints[c]);
          std::copy(buf.begin(), buf.end(), zc.begin());
          substeps[c] = rep.substeps;
          hints[c] = rep.suggestedDt > 0.0 ? rep.suggestedDt : hints[c];
        } catch (const StepFailure& e) {
          failures[c] = std::string(e.what()) + (e.alpha() ? " (alpha " + std::to_string(e.alpha()) + ")" : "");
        } catch (const Error& e) {
          failures[c] = e.what();
        }
      }
    };
    if (workers == 1) {
      work(0, cells);
    } else {
      std::vector<std::thread> pool;
      const std::size_t chunk = (cells + workers - 1) / workers;
      for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(cells, lo + chunk);
        if (lo < hi) pool.emplace_back(work, lo, hi);
      }
      for (auto& t : pool) t.join();
    }
    std::string msg;
    std::size_t first = StepFailure::npos;
    int count = 0;
    for (std::size_t c = 0; c < cells; ++c) {
      if (failures[c].empty()) continue;
      if (first == StepFailure::npos) first = c;
      if (++count <= 8) {
        const auto& g = state_.grid;
        msg += (msg.empty() ? "" : "; ") + std::string("cell (") + std::to_string(g.ix(c)) + "," +
               std::to_string(g.iy(c)) + "): " + failures[c];
      }
    }
    if (count > 0) {
      throw StepFailure("kinetics failed in " + std::to_string(count) + " cell(s): " + msg, 0, first);
    }
    int total = 0;
    for (int s : substeps) total += s;
    return total;
  }

  SimConfig cfg_;
  RateModel rm_;
  PhaseParams pp_;
  SimState state_;
  MollifierKernel kernel_;
  PhaseStepper stepper_;
};

}  // namespace bdac
