#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "bdac/error.hpp"

namespace bdac {

// Enthalpy profile alpha -> E_alpha of one phase.
//
// For alpha <= table.size() the tabulated value is used; beyond the table the
// closed form offset + volume*alpha + surface*alpha^(2/3) applies. A pure
// table profile therefore holds its last value for all larger clusters.
struct EnergyProfile {
  std::vector<double> table;
  double offset = 0.0;
  double volume = 0.0;
  double surface = 0.0;

  static EnergyProfile constant(double e) { return {{}, e, 0.0, 0.0}; }
  static EnergyProfile volume_surface(double ev, double es) { return {{}, 0.0, ev, es}; }
  static EnergyProfile from_table(std::vector<double> values) {
    if (values.empty()) throw DomainError("enthalpy table must not be empty");
    const double last = values.back();
    return {std::move(values), last, 0.0, 0.0};
  }

  double closed_form(double alpha) const noexcept {
    return offset + volume * alpha + surface * std::cbrt(alpha * alpha);
  }

  double operator()(std::size_t alpha) const noexcept {
    if (alpha <= table.size()) return table[alpha - 1];
    return closed_form(static_cast<double>(alpha));
  }

  // Infimum over all alpha >= 1; -inf when the closed-form tail is unbounded
  // below.
  double infimum() const noexcept {
    double lo = std::numeric_limits<double>::infinity();
    for (double e : table) lo = std::min(lo, e);
    if (volume < 0.0 || (volume == 0.0 && surface < 0.0)) {
      return -std::numeric_limits<double>::infinity();
    }
    const double first = static_cast<double>(table.size() + 1);
    lo = std::min(lo, closed_form(first));
    if (surface < 0.0 && volume > 0.0) {
      // E'(x) = volume + (2/3) surface x^(-1/3) vanishes at x*.
      const double xs = std::pow(-2.0 * surface / (3.0 * volume), 3.0);
      for (double x : {std::floor(xs), std::ceil(xs)}) {
        if (x >= first) lo = std::min(lo, closed_form(x));
      }
    }
    return lo;
  }

  bool operator==(const EnergyProfile&) const = default;
};

// Pointwise convex combination w*a + (1-w)*b.
inline EnergyProfile mix(double w, const EnergyProfile& a, const EnergyProfile& b) {
  EnergyProfile out;
  const std::size_t len = std::max(a.table.size(), b.table.size());
  out.table.resize(len);
  for (std::size_t i = 0; i < len; ++i) {
    out.table[i] = w * a(i + 1) + (1.0 - w) * b(i + 1);
  }
  out.offset = w * a.offset + (1.0 - w) * b.offset;
  out.volume = w * a.volume + (1.0 - w) * b.volume;
  out.surface = w * a.surface + (1.0 - w) * b.surface;
  return out;
}

// Activation energy E_A(chi), interpolated linearly between the two pure
// phases. Equal endpoints give a phase-independent barrier.
struct ActivationEnergy {
  double phase1 = 0.0;
  double phase2 = 0.0;

  static ActivationEnergy constant(double e) { return {e, e}; }
  double operator()(double chi) const noexcept { return std::lerp(phase2, phase1, chi); }
  bool operator==(const ActivationEnergy&) const = default;
};

enum class KMode { Fixed, SelfConsistent };

inline const char* to_string(KMode m) noexcept {
  return m == KMode::Fixed ? "fixed" : "self_consistent";
}

inline void require_phase(double chi) {
  if (!(chi >= 0.0 && chi <= 1.0)) {
    throw DomainError("phase value chi = " + std::to_string(chi) + " outside [0,1]");
  }
}

// Constitutive rate data: enthalpies of both phases, activation energy,
// lattice factors and the thermal energy scale k_B*theta.
//
// Rates follow the Arrhenius law
//   R_alpha(chi) = exp((chi E1_alpha + (1-chi) E2_alpha - E_A(chi)) / kbTheta)
// and the evaporation rate is Gamma^E_alpha = R_alpha^(1/b_chi).
class RateModel {
 public:
  static constexpr double kDefaultExponentCap = 700.0;

  RateModel(EnergyProfile e1, EnergyProfile e2, ActivationEnergy ea, double b1, double b2,
            double kbTheta, double exponentCap = kDefaultExponentCap)
      : e1_(std::move(e1)), e2_(std::move(e2)), ea_(ea), b1_(b1), b2_(b2),
        kbTheta_(kbTheta), cap_(exponentCap) {
    if (!(b1 > 0.0 && b1 <= 1.0) || !(b2 > 0.0 && b2 <= 1.0)) {
      throw DomainError("lattice factors must lie in (0,1]");
    }
    if (!(kbTheta > 0.0) || !std::isfinite(kbTheta)) {
      throw DomainError("k_B*theta must be positive and finite");
    }
    if (!(exponentCap > 0.0)) throw DomainError("exponent cap must be positive");
    check_profile(e1_, "phase 1");
    check_profile(e2_, "phase 2");
    if (!std::isfinite(ea.phase1) || !std::isfinite(ea.phase2)) {
      throw DomainError("activation energy must be finite");
    }
  }

  const EnergyProfile& enthalpy(int phase) const { return phase == 1 ? e1_ : e2_; }
  const ActivationEnergy& activation() const noexcept { return ea_; }
  double b1() const noexcept { return b1_; }
  double b2() const noexcept { return b2_; }
  double b(int phase) const noexcept { return phase == 1 ? b1_ : b2_; }
  double kbTheta() const noexcept { return kbTheta_; }
  double exponent_cap() const noexcept { return cap_; }

  double b_mix(double chi) const {
    require_phase(chi);
    return std::lerp(b2_, b1_, chi);
  }

  double activation_energy(double chi) const {
    require_phase(chi);
    return ea_(chi);
  }

  // chi*E1 + (1-chi)*E2, exact at the endpoints and when E1 == E2.
  double mixed_enthalpy(std::size_t alpha, double chi) const noexcept {
    return std::lerp(e2_(alpha), e1_(alpha), chi);
  }

  // ln R_alpha(chi).
  double log_rate(std::size_t alpha, double chi) const {
    require_alpha(alpha);
    require_phase(chi);
    return (mixed_enthalpy(alpha, chi) - ea_(chi)) / kbTheta_;
  }

  double arrhenius_rate(std::size_t alpha, double chi) const {
    return checked_exp(log_rate(alpha, chi), alpha);
  }

  // ln Gamma^E_alpha(chi) = ln R_alpha / b_chi.
  double log_evaporation_rate(std::size_t alpha, double chi) const {
    return log_rate(alpha, chi) / b_mix(chi);
  }

  double evaporation_rate(std::size_t alpha, double chi) const {
    return checked_exp(log_evaporation_rate(alpha, chi), alpha);
  }

  // ln s(chi) = -E_A(chi) / (k_B theta b_chi).
  double log_s(double chi) const { return -activation_energy(chi) / (kbTheta_ * b_mix(chi)); }

  double checked_exp(double exponent, std::size_t alpha) const {
    if (exponent > cap_) throw RateOverflowError(alpha, exponent);
    return std::exp(exponent);
  }

  bool operator==(const RateModel&) const = default;

 private:
  static void require_alpha(std::size_t alpha) {
    if (alpha == 0) throw DomainError("cluster size must be >= 1");
  }

  static void check_profile(const EnergyProfile& p, const char* name) {
    for (double e : p.table) {
      if (!std::isfinite(e)) throw DomainError(std::string("non-finite enthalpy in ") + name);
    }
    if (!std::isfinite(p.offset) || !std::isfinite(p.volume) || !std::isfinite(p.surface)) {
      throw DomainError(std::string("non-finite enthalpy coefficients in ") + name);
    }
    // Zero is admitted here; validate_config warns about it.
    if (p.infimum() < 0.0) {
      throw DomainError(std::string("enthalpy profile of ") + name +
                        " takes negative values");
    }
  }

  EnergyProfile e1_;
  EnergyProfile e2_;
  ActivationEnergy ea_;
  double b1_;
  double b2_;
  double kbTheta_;
  double cap_;
};

inline double b_mix(double chi, const RateModel& rm) { return rm.b_mix(chi); }

inline double arrhenius_rate(std::size_t alpha, double chi, const RateModel& rm) {
  return rm.arrhenius_rate(alpha, chi);
}

}  // namespace bdac
