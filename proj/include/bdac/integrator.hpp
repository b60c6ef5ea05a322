#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bdac/cluster_state.hpp"
#include "bdac/error.hpp"
#include "bdac/kinetics.hpp"

namespace bdac {

struct StepControls {
  double rtol = 1e-9;
  // Absolute tolerance as a fraction of the cell mass rho(z).
  double atolFraction = 1e-14;
  int maxRetries = 60;
  double maxGrowth = 4.0;
};

struct StepReport {
  double acceptedDt = 0.0;
  double suggestedDt = 0.0;
  double massDrift = 0.0;
  double minComponent = 0.0;
  double errorEstimate = 0.0;
  int retries = 0;
};

struct IntegrateReport {
  int substeps = 0;
  int retries = 0;
  double suggestedDt = 0.0;
  double massDrift = 0.0;
  double minComponent = std::numeric_limits<double>::infinity();
};

// Explicit RK4 with step-doubling error control for one cell at frozen chi.
//
// Every stage is an exact linear combination of right-hand sides whose
// alpha-weighted sum vanishes, so mass is conserved to round-off. Positivity
// is enforced by rejecting and halving, never by clipping.
class CellIntegrator {
 public:
  CellIntegrator(CellRates rates, KSetting k, StepControls controls = {})
      : rates_(std::move(rates)), k_(k), c_(controls) {
    const std::size_t n = rates_.size();
    for (auto* v : {&k1_, &k2_, &k3_, &k4_, &stage_, &full_, &half_, &two_}) v->assign(n, 0.0);
  }

  const CellRates& rates() const noexcept { return rates_; }

  // Attempts `dt`, shrinking on rejection. On success `z` holds the new state
  // and the report carries the step actually taken.
  StepReport step(std::vector<double>& z, double dt) {
    if (!(dt > 0.0)) throw DomainError("time step must be positive");
    if (z.size() != rates_.size()) throw DomainError("state size does not match rate table");
    StepReport rep;
    const double mass0 = rho(z);
    const double atol = c_.atolFraction * std::max(mass0, std::numeric_limits<double>::min());
    double h = dt;
    for (int attempt = 0;; ++attempt) {
      if (attempt > c_.maxRetries) {
        throw StepFailure("cell step failed after " + std::to_string(c_.maxRetries) +
                              " retries (dt = " + std::to_string(h) + ")",
                          failedAlpha_);
      }
      rep.retries = attempt;
      if (!rk4(z, h, full_) || !rk4(z, 0.5 * h, half_) || !rk4(half_, 0.5 * h, two_)) {
        h *= 0.5;
        continue;
      }
      if (const auto neg = first_negative(half_, two_); neg != 0) {
        failedAlpha_ = neg;
        h *= 0.5;
        continue;
      }
      double err = 0.0;
      std::size_t worst = 0;
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double scale = atol + c_.rtol * std::max(std::abs(z[i]), std::abs(two_[i]));
        const double e = std::abs(two_[i] - full_[i]) / (15.0 * scale);
        if (e > err) {
          err = e;
          worst = i + 1;
        }
      }
      if (!std::isfinite(err) || err > 1.0) {
        failedAlpha_ = worst;
        const double shrink = std::isfinite(err) ? 0.9 * std::pow(err, -0.2) : 0.1;
        h *= std::clamp(shrink, 0.1, 0.5);
        continue;
      }
      const double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : c_.maxGrowth;
      z.swap(two_);
      rep.acceptedDt = h;
      rep.suggestedDt = h * std::clamp(grow, 0.2, c_.maxGrowth);
      rep.errorEstimate = err;
      rep.massDrift = std::abs(rho(z) - mass0);
      rep.minComponent = z.empty() ? 0.0 : *std::min_element(z.begin(), z.end());
      return rep;
    }
  }

  // Advances `z` by exactly `duration` using as many accepted substeps as
  // needed, starting from the step size hint.
  IntegrateReport integrate(std::vector<double>& z, double duration, double dtHint) {
    IntegrateReport out;
    if (!(duration > 0.0)) return out;
    const double mass0 = rho(z);
    double t = 0.0;
    double h = dtHint > 0.0 ? std::min(dtHint, duration) : duration;
    while (true) {
      const double remaining = duration - t;
      const bool last = h >= remaining * (1.0 - 1e-12);
      if (last) h = remaining;
      const auto rep = step(z, h);
      ++out.substeps;
      out.retries += rep.retries;
      out.minComponent = std::min(out.minComponent, rep.minComponent);
      const bool shrunk = rep.acceptedDt < h;
      t += rep.acceptedDt;
      h = rep.suggestedDt;
      out.suggestedDt = rep.suggestedDt;
      if (last && !shrunk) break;
    }
    out.massDrift = std::abs(rho(z) - mass0);
    return out;
  }

 private:
  bool eval(std::span<const double> z, std::vector<double>& dz) {
    double K = k_.value;
    if (k_.mode == KMode::SelfConsistent) {
      double n = 0.0;
      for (double v : z) n += v;
      if (!(n > 0.0) || !(z[0] > 0.0)) {
        failedAlpha_ = 1;
        return false;
      }
      K = (z[0] / n) * rates_.kPrefactor;
    }
    rhs_into(z, rates_, K, dz);
    return true;
  }

  bool rk4(std::span<const double> z, double h, std::vector<double>& out) {
    const std::size_t n = z.size();
    if (!eval(z, k1_)) return false;
    for (std::size_t i = 0; i < n; ++i) stage_[i] = z[i] + 0.5 * h * k1_[i];
    if (!eval(stage_, k2_)) return false;
    for (std::size_t i = 0; i < n; ++i) stage_[i] = z[i] + 0.5 * h * k2_[i];
    if (!eval(stage_, k3_)) return false;
    for (std::size_t i = 0; i < n; ++i) stage_[i] = z[i] + h * k3_[i];
    if (!eval(stage_, k4_)) return false;
    const double w = h / 6.0;
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = z[i] + w * (k1_[i] + 2.0 * (k2_[i] + k3_[i]) + k4_[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(out[i])) {
        failedAlpha_ = i + 1;
        return false;
      }
    }
    return true;
  }

  static std::size_t first_negative(const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] < 0.0 || b[i] < 0.0) return i + 1;
    }
    return 0;
  }

  CellRates rates_;
  KSetting k_;
  StepControls c_;
  std::size_t failedAlpha_ = 0;
  std::vector<double> k1_, k2_, k3_, k4_, stage_, full_, half_, two_;
};

// One adaptive RK4 step of a single cell. The returned report's acceptedDt
// may be smaller than `dt` when the attempt was rejected.
inline std::pair<ClusterState, StepReport> step_cell(const ClusterState& z, double chi,
                                                     const RateModel& rm, double dt,
                                                     KSetting k = KSetting::self_consistent(),
                                                     StepControls controls = {}) {
  CellIntegrator integ(CellRates::compute(rm, chi, z.size()), k, controls);
  std::vector<double> work = z.vector();
  const auto rep = integ.step(work, dt);
  return {ClusterState(std::move(work)), rep};
}

// Integrates one cell over `duration` at frozen chi.
inline std::pair<ClusterState, IntegrateReport> integrate_cell(
    const ClusterState& z, double chi, const RateModel& rm, double duration,
    KSetting k = KSetting::self_consistent(), StepControls controls = {}, double dtHint = 0.0) {
  CellIntegrator integ(CellRates::compute(rm, chi, z.size()), k, controls);
  std::vector<double> work = z.vector();
  const auto rep = integ.integrate(work, duration, dtHint > 0.0 ? dtHint : duration);
  return {ClusterState(std::move(work)), rep};
}

}  // namespace bdac
