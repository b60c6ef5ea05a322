#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bdac/equilibrium.hpp"
#include "bdac/kinetics.hpp"
#include "bdac/rate_model.hpp"
#include "support.hpp"

using namespace bdac;

namespace {

RateModel flat(double b1 = 1.0, double b2 = 1.0) {
  return RateModel(EnergyProfile::constant(0.0), EnergyProfile::constant(0.0), ActivationEnergy::constant(0.0),
                   b1, b2, 1.0);
}

RateModel lattice_model() {
  return RateModel(EnergyProfile::constant(2.0), EnergyProfile::constant(1.0), ActivationEnergy{1.0, 1.0}, 1.0,
                   0.75, 1.0);
}

}  // namespace

TEST(BMix, LatticeExamples) {
  const auto rm = lattice_model();
  EXPECT_EQ(b_mix(1.0, rm), 1.0);
  EXPECT_EQ(b_mix(0.5, rm), 0.875);
  EXPECT_EQ(b_mix(0.0, rm), 0.75);
  EXPECT_THROW(b_mix(-0.01, rm), DomainError);
  EXPECT_THROW(b_mix(1.01, rm), DomainError);
  EXPECT_THROW(b_mix(NAN, rm), DomainError);
}

TEST(BMix, BoundedBelowByTheSmallerFactor) {
  const auto rm = lattice_model();
  bdtest::Gen g(5);
  for (int i = 0; i < 200; ++i) EXPECT_GE(b_mix(g.uniform(0, 1), rm), 0.75);
}

TEST(Arrhenius, DirectSubstitution) {
  // chi = 1, E^1 = 2, E_A(1) = 1
  const RateModel rm(EnergyProfile::constant(2.0), EnergyProfile::constant(1.0), ActivationEnergy{1.0, 1.0}, 1.0,
                     1.0, 1.0);
  EXPECT_NEAR(arrhenius_rate(3, 1.0, rm), std::numbers::e, 1e-15);
}

TEST(Arrhenius, ZeroExponent) {
  const RateModel rm(EnergyProfile::constant(2.0), EnergyProfile::constant(0.7), ActivationEnergy{0.3, 0.7}, 1.0,
                     1.0, 1.0);
  EXPECT_EQ(arrhenius_rate(1, 0.0, rm), 1.0);
}

TEST(Arrhenius, SymmetricCancellation) {
  // chi = 0.5, E^1 = 2, E^2 = 1, E_A(0.5) = 1.5
  const RateModel rm(EnergyProfile::constant(2.0), EnergyProfile::constant(1.0), ActivationEnergy{2.0, 1.0}, 1.0,
                     1.0, 1.0);
  EXPECT_NEAR(arrhenius_rate(2, 0.5, rm), 1.0, 1e-15);
}

TEST(Arrhenius, OverflowNamesTheClusterSize) {
  const RateModel rm(EnergyProfile::volume_surface(1.0, 0.0), EnergyProfile::volume_surface(1.0, 0.0),
                     ActivationEnergy::constant(0.0), 1.0, 1.0, 1.0);
  EXPECT_NO_THROW(arrhenius_rate(700, 1.0, rm));
  try {
    arrhenius_rate(701, 1.0, rm);
    FAIL() << "expected overflow";
  } catch (const RateOverflowError& e) {
    EXPECT_EQ(e.alpha(), 701u);
  }
}

TEST(Arrhenius, AlwaysPositive) {
  const auto rm = lattice_model();
  bdtest::Gen g(11);
  for (int i = 0; i < 100; ++i) EXPECT_GT(arrhenius_rate(g.index(1, 50), g.uniform(0, 1), rm), 0.0);
}

TEST(SelfConsistentK, TwoEqualSpecies) {
  EXPECT_DOUBLE_EQ(self_consistent_K(ClusterState(std::vector<double>{1.0, 1.0}), 0.3, flat()), 0.5);
}

TEST(SelfConsistentK, AllMonomers) {
  EXPECT_DOUBLE_EQ(self_consistent_K(ClusterState(std::vector<double>{2.5, 0.0, 0.0}), 0.3, flat()), 1.0);
}

TEST(SelfConsistentK, HandEvaluation) {
  // b = 1, R_1 = e (E = 2, E_A = 1), so K = (2e/3) e.
  const RateModel rm(EnergyProfile::constant(2.0), EnergyProfile::constant(2.0), ActivationEnergy::constant(1.0),
                     1.0, 1.0, 1.0);
  EXPECT_NEAR(self_consistent_K(ClusterState(std::vector<double>{2.0, 1.0}), 0.5, rm), 4.926037399287099, 1e-14);
}

TEST(SelfConsistentK, DegenerateStates) {
  EXPECT_THROW(self_consistent_K(ClusterState(std::vector<double>{0.0, 0.0}), 0.5, flat()), DegenerateStateError);
  EXPECT_THROW(self_consistent_K(ClusterState(std::vector<double>{0.0, 1.0}), 0.5, flat()), DegenerateStateError);
}

TEST(Fluxes, HandEvaluatedPair) {
  const auto j = fluxes(ClusterState(std::vector<double>{1.0, 1.0}), 0.5, 2.0, flat());
  ASSERT_EQ(j.size(), 3u);
  EXPECT_EQ(j[0], -1.0);
  EXPECT_EQ(j[1], 1.0);
  EXPECT_EQ(j[2], 0.0);
}

TEST(Fluxes, ZeroState) {
  const auto j = fluxes(ClusterState(6), 0.5, 1.3, lattice_model());
  for (double v : j.j) EXPECT_EQ(v, 0.0);
}

TEST(Fluxes, DetailedBalanceGivesZero) {
  const auto rm = lattice_model();
  const double chi = 0.37, K = 0.8;
  std::vector<double> z{1.0};
  for (std::size_t a = 1; a < 30; ++a) {
    z.push_back(K * rm.evaporation_rate(a, chi) * z.back() / rm.evaporation_rate(a + 1, chi));
  }
  const auto j = fluxes(ClusterState(z), chi, K, rm);
  for (double v : j.j) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(Fluxes, ClosureAndMonomerBookkeeping) {
  const auto rm = lattice_model();
  for (auto seed : bdtest::kSeeds) {
    bdtest::Gen g(seed);
    SCOPED_TRACE(g.label());
    const std::size_t n = g.index(2, 120);
    const auto z = g.sparse_state(n);
    const auto j = fluxes(ClusterState(z), g.uniform(0, 1), g.uniform(0.1, 3.0), rm);
    EXPECT_EQ(j[n], 0.0);
    double sum = 0.0;
    for (std::size_t a = 1; a <= n; ++a) sum += j[a];
    EXPECT_EQ(j[0] + sum, 0.0);
  }
}

TEST(Fluxes, RejectNonPositiveK) {
  EXPECT_THROW(fluxes(ClusterState(std::vector<double>{1.0, 1.0}), 0.5, 0.0, flat()), DomainError);
}

TEST(Rhs, HandEvaluatedPair) {
  const auto dz = rhs(ClusterState(std::vector<double>{1.0, 1.0}), 0.5, flat(), KSetting::fixed(2.0));
  ASSERT_EQ(dz.size(), 2u);
  EXPECT_EQ(dz[0], -2.0);
  EXPECT_EQ(dz[1], 1.0);
  EXPECT_EQ(1.0 * dz[0] + 2.0 * dz[1], 0.0);
}

TEST(Rhs, ZeroState) {
  for (double v : rhs(ClusterState(4), 0.5, flat(), KSetting::fixed(1.0))) EXPECT_EQ(v, 0.0);
}

TEST(Rhs, EquilibriumStateIsStationary) {
  const auto rm = flat();
  EquilibriumProblem p;
  p.rhoBar = 4.0;
  p.chiBar = 0.5;
  p.rm = &rm;
  const auto sol = solve_equilibrium(p);
  const auto dz = rhs(ClusterState(sol.zBar), 0.5, rm, KSetting::fixed(sol.kBar));
  for (double v : dz) EXPECT_LE(std::abs(v), 1e-12);
}

TEST(Rhs, MatchesDirectDefinition) {
  // Constant rates g with s = 1: compare against the loop written from the
  // definitions in the test support.
  const RateModel rm(EnergyProfile::constant(0.4), EnergyProfile::constant(0.4), ActivationEnergy::constant(0.0),
                     1.0, 1.0, 1.0);
  const bdtest::ConstantRateSystem ref{std::exp(0.4), 1.0, 0.0};
  for (auto seed : bdtest::kSeeds) {
    bdtest::Gen g(seed);
    SCOPED_TRACE(g.label());
    const auto z = g.positive_state(g.index(2, 40));
    const auto got = rhs(ClusterState(z), g.uniform(0, 1), rm);
    const auto want = ref(z);
    for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-13 * (1.0 + std::abs(want[i])));
  }
}

TEST(Rhs, MassConservedToRoundOff) {
  const auto rm = lattice_model();
  for (auto seed : bdtest::kSeeds) {
    bdtest::Gen g(seed);
    SCOPED_TRACE(g.label());
    for (int rep = 0; rep < 25; ++rep) {
      const std::size_t n = g.index(1, 200);
      const auto z = g.sparse_state(n);
      const bool fixed = g.coin();
      const auto dz = rhs(ClusterState(z), g.uniform(0, 1), rm,
                          fixed ? KSetting::fixed(g.uniform(0.1, 2.0)) : KSetting::self_consistent());
      double m = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        m += static_cast<double>(i + 1) * dz[i];
        scale += static_cast<double>(i + 1) * std::abs(dz[i]);
      }
      EXPECT_LE(std::abs(m), static_cast<double>(n) * std::numeric_limits<double>::epsilon() * scale);
    }
  }
}

TEST(Rhs, ChiIndependentRatesDecoupleBitwise) {
  const RateModel rm(EnergyProfile::constant(1.3), EnergyProfile::constant(1.3), ActivationEnergy::constant(0.4),
                     1.0, 1.0, 1.0);
  for (auto seed : bdtest::kSeeds) {
    bdtest::Gen g(seed);
    SCOPED_TRACE(g.label());
    const ClusterState z(g.positive_state(g.index(2, 60)));
    const auto a = rhs(z, g.uniform(0, 1), rm);
    const auto b = rhs(z, g.uniform(0, 1), rm);
    EXPECT_EQ(a, b);
  }
}

TEST(Rhs, DetailedBalanceFixedPointRandom) {
  const auto rm = lattice_model();
  for (auto seed : bdtest::kSeeds) {
    bdtest::Gen g(seed);
    SCOPED_TRACE(g.label());
    const double chi = g.uniform(0, 1), K = g.uniform(0.2, 1.5);
    std::vector<double> z{g.uniform(0.5, 2.0)};
    const std::size_t n = g.index(2, 50);
    for (std::size_t a = 1; a < n; ++a) {
      z.push_back(K * rm.evaporation_rate(a, chi) * z.back() / rm.evaporation_rate(a + 1, chi));
    }
    double scale = 0.0;
    for (std::size_t a = 1; a <= n; ++a) scale = std::max(scale, K * rm.evaporation_rate(a, chi) * z[a - 1]);
    for (double v : rhs(ClusterState(z), chi, rm, KSetting::fixed(K))) EXPECT_NEAR(v, 0.0, 1e-14 * scale);
  }
}

TEST(Rhs, SingleSpeciesIsStationary) {
  const auto dz = rhs(ClusterState(std::vector<double>{3.0}), 0.2, lattice_model());
  ASSERT_EQ(dz.size(), 1u);
  EXPECT_EQ(dz[0], 0.0);
}
