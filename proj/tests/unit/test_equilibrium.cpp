#include <gtest/gtest.h>

#include <cmath>

#include "bdac/equilibrium.hpp"
#include "bdac/integrator.hpp"
#include "support.hpp"

using namespace bdac;

namespace {

RateModel unit_rates() {
  return RateModel(EnergyProfile::constant(0.0), EnergyProfile::constant(0.0), ActivationEnergy::constant(0.0), 1.0,
                   1.0, 1.0);
}

RateModel volume_rates(double v) {
  return RateModel(EnergyProfile::volume_surface(v, 0.0), EnergyProfile::volume_surface(v, 0.0),
                   ActivationEnergy::constant(0.0), 1.0, 1.0, 1.0);
}

RateModel mixed_rates() {
  return RateModel(EnergyProfile::volume_surface(0.05, 0.4), EnergyProfile::from_table({0.3, 0.6, 0.8, 0.9}),
                   ActivationEnergy{0.3, 0.1}, 0.9, 0.7, 1.0);
}

EquilibriumSolution solve(const RateModel& rm, double rhoBar, double chiBar) {
  EquilibriumProblem p;
  p.rhoBar = rhoBar;
  p.chiBar = chiBar;
  p.rm = &rm;
  return solve_equilibrium(p);
}

// Brute-force sum_{a>m} a^p s K^a / Gamma_a in long double.
long double brute_tail(const RateModel& rm, double chi, double K, int p, std::size_t m, std::size_t upto) {
  const EvaporationSeries s(rm, chi);
  long double acc = 0.0L;
  for (std::size_t a = upto; a > m; --a) {
    acc += std::exp(static_cast<long double>(s.log_term(a, std::log(K)))) * (p == 1 ? static_cast<long double>(a) : 1.0L);
  }
  return acc;
}

}  // namespace

TEST(Series, GeometricExamples) {
  const auto rm = unit_rates();
  EXPECT_NEAR(f_tilde(0.5, 0.5, rm), 1.0, 1e-14);
  EXPECT_NEAR(g_tilde(0.5, 0.5, rm), 2.0, 1e-14);
  EXPECT_NEAR(f_tilde(0.25, 0.5, rm), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(g_tilde(0.25, 0.5, rm), 0.25 / (0.75 * 0.75), 1e-15);
}

TEST(Series, ZeroArgument) {
  const auto v = EvaporationSeries(unit_rates(), 0.2).sum(0.0, 0, kDefaultTailTol);
  EXPECT_EQ(v.value, 0.0);
  EXPECT_FALSE(v.divergent);
}

TEST(Series, DivergentAtUnitArgument) {
  const auto v = EvaporationSeries(unit_rates(), 0.5).sum(1.0, 0, kDefaultTailTol);
  EXPECT_TRUE(v.divergent);
  EXPECT_TRUE(std::isinf(v.value));
}

TEST(Series, RejectsArgumentOutsideUnitInterval) {
  EXPECT_THROW(EvaporationSeries(unit_rates(), 0.5).sum(1.5, 0, 1e-15), DomainError);
}

TEST(Series, VolumeProfileClosedForm) {
  const auto rm = volume_rates(1.0);
  const double q = std::exp(-1.0);
  EXPECT_NEAR(f_tilde(1.0, 0.3, rm), q / (1.0 - q), 1e-15);
  EXPECT_NEAR(g_tilde(1.0, 0.3, rm), q / ((1.0 - q) * (1.0 - q)), 1e-14);
}

TEST(Series, SurfaceTailMatchesBruteForce) {
  const auto rm = mixed_rates();
  for (double chi : {0.0, 0.37, 1.0}) {
    for (double K : {0.2, 0.9, 1.0}) {
      for (int p : {0, 1}) {
        SCOPED_TRACE(std::to_string(chi) + " " + std::to_string(K) + " " + std::to_string(p));
        const auto v = EvaporationSeries(rm, chi).sum(K, p, 1e-15);
        if (v.divergent) {
          EXPECT_LT(chi, 1.0);  // table phase has constant tail and diverges at K = 1
          continue;
        }
        const double want = static_cast<double>(brute_tail(rm, chi, K, p, 0, 200000));
        EXPECT_NEAR(v.value, want, 1e-13 * want);
      }
    }
  }
}

TEST(Series, TailBoundDominatesTrueTail) {
  const RateModel models[] = {mixed_rates(), volume_rates(0.3),
                              RateModel(EnergyProfile::volume_surface(0.0, 0.9), EnergyProfile::constant(2.0),
                                        ActivationEnergy::constant(0.4), 0.8, 1.0, 0.7)};
  for (const auto& rm : models) {
    for (double chi : {1.0, 0.6}) {
      const EvaporationSeries s(rm, chi);
      for (double K : {0.5, 0.95, 1.0}) {
        for (int p : {0, 1}) {
          if (s.sum(K, p, 1e-12).divergent) continue;
          for (std::size_t m : {5u, 20u, 100u, 400u}) {
            SCOPED_TRACE(std::to_string(K) + " p" + std::to_string(p) + " m" + std::to_string(m));
            const long double truth = brute_tail(rm, chi, K, p, m, 400000);
            EXPECT_GE(static_cast<long double>(s.tail_bound(m, K, p)) * (1.0L + 1e-12L), truth);
          }
        }
      }
    }
  }
}

TEST(Series, IncreasingInK) {
  const auto rm = mixed_rates();
  bdtest::Gen g(5);
  for (int i = 0; i < 50; ++i) {
    const double chi = g.uniform(0, 1);
    const double a = g.uniform(0.01, 0.98);
    const double b = a + g.uniform(0.001, 0.99 - a);
    EXPECT_LT(f_tilde(a, chi, rm), f_tilde(b, chi, rm));
  }
}

TEST(CheckEQ, ThreeRegimes) {
  EXPECT_EQ(check_EQ(0.5, unit_rates()), EqStatus::Satisfied);
  EXPECT_EQ(check_EQ(0.5, volume_rates(std::log(2.0))), EqStatus::SatisfiedBoundary);
  EXPECT_EQ(check_EQ(0.5, volume_rates(1.0)), EqStatus::Violated);
  EXPECT_STREQ(to_string(EqStatus::SatisfiedBoundary), "satisfied_boundary");
}

TEST(Solve, UnitRatesClosedForm) {
  const auto sol = solve(unit_rates(), 4.0, 0.5);
  EXPECT_NEAR(sol.kBar, 0.5, 1e-14);
  EXPECT_NEAR(sol.nBar, 2.0, 1e-13);
  EXPECT_EQ(sol.status, EqStatus::Satisfied);
  EXPECT_NEAR(sol.zBar[0], 1.0, 1e-13);
  EXPECT_NEAR(sol.zBar[1], 0.5, 1e-13);
  EXPECT_LE(sol.residualF, 1e-14);
  EXPECT_LE(sol.residualMass, 1e-12);
}

TEST(Solve, BoundaryCase) {
  const auto sol = solve(volume_rates(std::log(2.0)), 3.0, 0.5);
  EXPECT_EQ(sol.status, EqStatus::SatisfiedBoundary);
  EXPECT_NEAR(sol.kBar, 1.0, 1e-12);
  EXPECT_NEAR(sol.nBar, 1.5, 1e-10);
}

TEST(Solve, GeometricRateScalingMovesK) {
  // Gamma_a -> c^a Gamma_a scales K by c and leaves N alone.
  const double c = 1.5;
  const auto base = solve(unit_rates(), 4.0, 0.5);
  const auto scaled = solve(volume_rates(std::log(c)), 4.0, 0.5);
  EXPECT_NEAR(scaled.kBar, c * base.kBar, 1e-13);
  EXPECT_NEAR(scaled.nBar, base.nBar, 1e-12);
}

TEST(Solve, DoublingMassDoublesN) {
  const auto rm = mixed_rates();
  for (double chi : {0.0, 0.4, 1.0}) {
    const auto a = solve(rm, 1.3, chi), b = solve(rm, 2.6, chi);
    EXPECT_EQ(a.kBar, b.kBar);
    EXPECT_NEAR(b.nBar, 2.0 * a.nBar, 1e-14 * b.nBar);
  }
}

TEST(Solve, DetailedBalanceRecursion) {
  const auto rm = mixed_rates();
  for (double chi : {0.0, 0.25, 0.8, 1.0}) {
    const auto sol = solve(rm, 2.0, chi);
    const EvaporationSeries s(rm, chi);
    for (std::size_t a = 1; a + 1 <= std::min<std::size_t>(sol.zBar.size(), 200) - 1; ++a) {
      const double want = sol.kBar * std::exp(s.log_gamma(a) - s.log_gamma(a + 1));
      EXPECT_NEAR(sol.zBar[a] / sol.zBar[a - 1], want, 1e-12 * want);
    }
  }
}

TEST(Solve, ConsistentAndStationary) {
  const auto rm = mixed_rates();
  for (auto seed : bdtest::kSeeds) {
    bdtest::Gen g(seed);
    SCOPED_TRACE(g.label());
    const double rhoBar = g.uniform(0.1, 10.0), chi = g.uniform(0, 1);
    const auto sol = solve(rm, rhoBar, chi);
    EXPECT_LE(sol.residualF, 1e-13);
    EXPECT_LE(sol.residualMass, 1e-12 * rhoBar);
    EXPECT_LE(sol.residualFlux, 1e-13 * rhoBar);
    EXPECT_NEAR(count_N(sol.zBar), sol.nBar, 1e-12 * sol.nBar);
    const auto dz = rhs(ClusterState(sol.zBar), chi, rm);
    for (double v : dz) EXPECT_LE(std::abs(v), 1e-10 * rhoBar);
  }
}

TEST(Solve, NoRootWhenConditionFails) {
  const auto rm = volume_rates(1.0);
  EXPECT_THROW(solve(rm, 1.0, 0.5), NoRootError);
}

TEST(Solve, PhaseResidualReported) {
  const auto rm = mixed_rates();
  EquilibriumProblem p;
  p.rm = &rm;
  p.chiBar = 0.3;
  p.theta = 1.0;
  EXPECT_TRUE(solve_equilibrium(p).phaseResidual.has_value());
  p.chiBar = 1.0;
  EXPECT_FALSE(solve_equilibrium(p).phaseResidual.has_value());
}

TEST(Solve, KineticsRelaxToEquilibrium) {
  const auto rm = unit_rates();
  const std::size_t n = 60;
  std::vector<double> z(n, 0.0);
  z[0] = 4.0;
  CellIntegrator integ(CellRates::compute(rm, 0.5, n), KSetting::self_consistent());
  integ.integrate(z, 400.0, 0.01);
  const auto sol = solve(rm, 4.0, 0.5);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_NEAR(z[i], sol.zBar[i], 1e-6) << "alpha " << i + 1;
}
