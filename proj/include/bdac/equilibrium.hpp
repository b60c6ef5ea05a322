#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "bdac/cluster_state.hpp"
#include "bdac/error.hpp"
#include "bdac/free_energy.hpp"
#include "bdac/kinetics.hpp"
#include "bdac/rate_model.hpp"

namespace bdac {

struct SeriesValue {
  double value = 0.0;
  // Rigorous bound on the omitted tail.
  double tailBound = 0.0;
  std::size_t terms = 0;
  bool divergent = false;
};

// The power series s sum_a a^p K^a / Gamma^E_a(chi) (p = 0 or 1) at a fixed
// phase value, with rigorous tail bounds derived from the closed-form tail
// of the enthalpy profile.
class EvaporationSeries {
 public:
  static constexpr std::size_t kMaxTerms = 20'000'000;

  EvaporationSeries(const RateModel& rm, double chi)
      : rm_(rm), chi_(chi), profile_(mix(chi, rm.enthalpy(1), rm.enthalpy(2))) {
    require_phase(chi);
    b_ = rm.b_mix(chi);
    kt_ = rm.kbTheta();
    ea_ = rm.activation_energy(chi);
    logS_ = rm.log_s(chi);
    const double emin = profile_.infimum();
    logC0_ = std::isfinite(emin) ? (emin - ea_) / (kt_ * b_) : -std::numeric_limits<double>::infinity();
  }

  double s() const noexcept { return std::exp(logS_); }
  double log_s() const noexcept { return logS_; }
  double chi() const noexcept { return chi_; }

  // Uniform lower bound c0 of Gamma^E_alpha over all alpha; zero when (A4)
  // fails.
  double c0() const noexcept { return std::exp(logC0_); }
  bool a4_holds() const noexcept { return std::isfinite(logC0_); }

  double log_gamma(std::size_t alpha) const { return rm_.log_evaporation_rate(alpha, chi_); }
  double gamma(std::size_t alpha) const { return std::exp(log_gamma(alpha)); }

  // log of s K^alpha / Gamma_alpha.
  double log_term(std::size_t alpha, double logK) const {
    return logS_ + static_cast<double>(alpha) * logK - log_gamma(alpha);
  }

  SeriesValue sum(double K, int power, double tailTol) const {
    if (!(K >= 0.0 && K <= 1.0)) throw DomainError("series argument K must lie in [0,1]");
    SeriesValue out;
    if (K == 0.0) return out;
    const double logK = std::log(K);
    const Tail tail = tail_shape(logK);
    if (tail.diverges) {
      out.divergent = true;
      out.value = std::numeric_limits<double>::infinity();
      out.tailBound = std::numeric_limits<double>::infinity();
      return out;
    }
    const std::size_t table = profile_.table.size();
    CompensatedSum acc;
    for (std::size_t a = 1; a <= kMaxTerms; ++a) {
      const double lt = log_term(a, logK) + (power == 1 ? std::log(static_cast<double>(a)) : 0.0);
      if (lt > 709.0) throw Error("series term overflows at alpha = " + std::to_string(a));
      acc.add(std::exp(lt));
      out.terms = a;
      if (a >= table && (a < 64 || a % 16 == 0)) {
        const double bound = tail_bound(a, K, logK, power, tail);
        if (bound < tailTol) {
          out.value = acc.value();
          out.tailBound = bound;
          if (!std::isfinite(out.value)) throw Error("series partial sum overflowed");
          return out;
        }
      }
    }
    out.divergent = true;
    out.value = std::numeric_limits<double>::infinity();
    out.tailBound = std::numeric_limits<double>::infinity();
    return out;
  }

  // Rigorous bound on sum_{a>m} a^p s K^a / Gamma_a, m >= table length.
  double tail_bound(std::size_t m, double K, int power, double tailTol = 0.0) const {
    (void)tailTol;
    const double logK = std::log(K);
    return tail_bound(m, K, logK, power, tail_shape(logK));
  }

 private:
  // For alpha beyond the table: term(x) = exp(logC - a x - c x^(2/3)).
  struct Tail {
    double logC;
    double a;
    double c;
    bool diverges;
  };

  Tail tail_shape(double logK) const {
    const double scale = kt_ * b_;
    Tail t{};
    t.logC = logS_ - (profile_.offset - ea_) / scale;
    t.a = profile_.volume / scale - logK;
    t.c = profile_.surface / scale;
    t.diverges = t.a < 0.0 || (t.a == 0.0 && t.c <= 0.0);
    return t;
  }

  double tail_bound(std::size_t m, double K, double logK, int power, const Tail& t) const {
    const double md = static_cast<double>(m);
    double best = std::numeric_limits<double>::infinity();

    // Geometric bound from Gamma_a >= c0.
    if (K < 1.0 && a4_holds()) {
      const double lead = logS_ - logC0_ + (md + 1.0) * logK;
      const double g = power == 0 ? 1.0 / (1.0 - K)
                                  : ((md + 1.0) - md * K) / ((1.0 - K) * (1.0 - K));
      best = std::min(best, std::exp(lead) * g);
    }

    // Ratio bound: term(a+1)/term(a) <= q for all a > m.
    {
      double logq = -t.a;
      if (t.c < 0.0) {
        logq -= t.c * (std::cbrt((md + 2.0) * (md + 2.0)) - std::cbrt((md + 1.0) * (md + 1.0)));
      }
      double q = std::exp(logq);
      if (power == 1) q *= (md + 2.0) / (md + 1.0);
      if (q < 1.0) {
        const double first = std::exp(log_term(m + 1, logK)) * (power == 1 ? md + 1.0 : 1.0);
        best = std::min(best, first / (1.0 - q));
      }
    }

    // Integral bound for an eventually decreasing tail.
    if (t.a >= 0.0 && t.c >= 0.0 && (t.a > 0.0 || t.c > 0.0)) {
      const double y = t.c * std::cbrt(md * md);
      const bool decreasing = power == 0 || md * (t.a + (2.0 / 3.0) * t.c / std::cbrt(md)) >= 1.0;
      if (decreasing && md >= 1.0) {
        const double base = t.logC - t.a * md;
        double integral = std::numeric_limits<double>::infinity();
        if (t.a > 0.0) {
          const double poly = power == 0 ? 1.0 / t.a : md / t.a + 1.0 / (t.a * t.a);
          integral = std::min(integral, std::exp(base - y) * poly);
        }
        if (t.c > 0.0) {
          double gam;
          if (power == 0) {
            gam = 1.5 * std::pow(t.c, -1.5) *
                  (std::sqrt(y) * std::exp(-y) + 0.5 * std::sqrt(std::numbers::pi) * std::erfc(std::sqrt(y)));
          } else {
            gam = 1.5 * std::pow(t.c, -3.0) * std::exp(-y) * (y * y + 2.0 * y + 2.0);
          }
          integral = std::min(integral, std::exp(base) * gam);
        }
        best = std::min(best, integral);
      }
    }
    return best;
  }

  const RateModel& rm_;
  double chi_;
  EnergyProfile profile_;
  double b_ = 1.0;
  double kt_ = 1.0;
  double ea_ = 0.0;
  double logS_ = 0.0;
  double logC0_ = 0.0;
};

inline constexpr double kDefaultTailTol = 1e-15;

inline double f_tilde(double K, double chiBar, const RateModel& rm, double tailTol = kDefaultTailTol) {
  return EvaporationSeries(rm, chiBar).sum(K, 0, tailTol).value;
}

inline double g_tilde(double K, double chiBar, const RateModel& rm, double tailTol = kDefaultTailTol) {
  return EvaporationSeries(rm, chiBar).sum(K, 1, tailTol).value;
}

enum class EqStatus { Satisfied, SatisfiedBoundary, Violated };

inline const char* to_string(EqStatus s) noexcept {
  switch (s) {
    case EqStatus::Satisfied: return "satisfied";
    case EqStatus::SatisfiedBoundary: return "satisfied_boundary";
    case EqStatus::Violated: return "violated";
  }
  return "?";
}

// Tolerance for deciding f~(1) == 1.
inline constexpr double kEqUnitTol = 1e-12;

inline void require_a4(const EvaporationSeries& series) {
  if (!series.a4_holds()) {
    throw AssumptionViolation("A4", "evaporation rates are not bounded away from zero");
  }
}

// Existence condition: f~(1) > 1, or f~(1) = 1 with g~(1) finite.
inline EqStatus check_EQ(double chiBar, const RateModel& rm, double tailTol = kDefaultTailTol) {
  const EvaporationSeries series(rm, chiBar);
  require_a4(series);
  const auto f1 = series.sum(1.0, 0, tailTol);
  if (f1.divergent || f1.value > 1.0 + kEqUnitTol) return EqStatus::Satisfied;
  if (f1.value + f1.tailBound < 1.0 - kEqUnitTol) return EqStatus::Violated;
  const auto g1 = series.sum(1.0, 1, tailTol);
  return g1.divergent ? EqStatus::Violated : EqStatus::SatisfiedBoundary;
}

struct EquilibriumProblem {
  double rhoBar = 1.0;
  double chiBar = 0.5;
  const RateModel* rm = nullptr;
  double tailTol = kDefaultTailTol;
  // When set (and 0 < chiBar < 1), the phase stationarity residual
  // f_1 - f_2 + theta W'(chiBar) is reported.
  std::optional<double> theta;
};

struct EquilibriumSolution {
  double kBar = 0.0;
  double nBar = 0.0;
  double s = 0.0;
  EqStatus status = EqStatus::Violated;
  // zBar[i] is the density of (i+1)-clusters; size() is the truncation.
  std::vector<double> zBar;
  double residualF = 0.0;     // |f~(kBar) - 1|
  double residualMass = 0.0;  // |rho(zBar) - rhoBar|
  double residualFlux = 0.0;  // max_a |J_a(zBar, chiBar)| with K = kBar
  std::optional<double> phaseResidual;
};

inline EquilibriumSolution solve_equilibrium(const EquilibriumProblem& p) {
  if (p.rm == nullptr) throw DomainError("equilibrium problem has no rate model");
  if (!(p.rhoBar > 0.0) || !std::isfinite(p.rhoBar)) throw DomainError("rhoBar must be positive");
  const RateModel& rm = *p.rm;
  const EvaporationSeries series(rm, p.chiBar);
  require_a4(series);

  EquilibriumSolution sol;
  sol.status = check_EQ(p.chiBar, rm, p.tailTol);
  sol.s = series.s();
  if (sol.status == EqStatus::Violated) {
    throw NoRootError("existence condition violated: f~(1) < 1 or g~(1) diverges");
  }

  // f~(K) >= s K / Gamma_1 brackets the root by Gamma_1 / s.
  const double upper = std::min(1.0, std::exp(series.log_gamma(1) - series.log_s()));
  const auto fAt = [&](double k) { return series.sum(k, 0, p.tailTol).value; };
  const double fu = fAt(upper);
  if (fu < 1.0 - kEqUnitTol) throw NoRootError("f~ stays below 1 on the bracket");

  double lo = 0.0;
  double hi = upper;
  double flo = 0.0;
  double fhi = fu;
  for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = fAt(mid);
    if (fm < 1.0) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  if (std::isfinite(fhi) && std::abs(fhi - 1.0) <= std::abs(flo - 1.0)) {
    sol.kBar = hi;
    sol.residualF = std::abs(fhi - 1.0);
  } else {
    sol.kBar = lo;
    sol.residualF = std::abs(flo - 1.0);
  }

  const auto g = series.sum(sol.kBar, 1, p.tailTol);
  if (g.divergent) throw DivergentSeriesError("g~(kBar) diverges");
  sol.nBar = p.rhoBar / g.value;

  const double logK = std::log(sol.kBar);
  const double logN = std::log(sol.nBar);
  for (std::size_t a = 1; a <= EvaporationSeries::kMaxTerms; ++a) {
    const double za = std::exp(logN + series.log_term(a, logK));
    sol.zBar.push_back(za);
    if (za < p.tailTol * sol.nBar && series.tail_bound(a, sol.kBar, 0) < p.tailTol) break;
  }

  sol.residualMass = std::abs(rho(sol.zBar) - p.rhoBar);
  const auto j = fluxes(ClusterState(sol.zBar), p.chiBar, sol.kBar, rm);
  for (double v : j.j) sol.residualFlux = std::max(sol.residualFlux, std::abs(v));
  if (p.theta && p.chiBar > 0.0 && p.chiBar < 1.0) {
    sol.phaseResidual = phase_energy_difference(sol.zBar, rm) +
                        *p.theta * (std::log(p.chiBar) - std::log1p(-p.chiBar));
  }
  return sol;
}

}  // namespace bdac
