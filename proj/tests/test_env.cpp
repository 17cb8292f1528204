#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mott/env.hpp"
#include "mott/stats.hpp"

using namespace mott;

namespace {
Environment constant_gaps(double alpha, std::int64_t hw) { return Environment::lattice(alpha, hw); }
}  // namespace

TEST(Environment, LatticeInjectionGivesIntegers) {
  auto e = constant_gaps(2.0, 5);
  for (std::int64_t i = -5; i <= 5; ++i) EXPECT_DOUBLE_EQ(e.pos(i), static_cast<double>(i));
}

TEST(Environment, OriginIsExactlyZero) {
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_EQ(Environment::sample(10, 1.5, s).pos(0), 0.0);
}

TEST(Environment, RegenerationIsBitIdentical) {
  auto a = Environment::sample(500, 1.5, 77), b = Environment::sample(500, 1.5, 77);
  for (std::int64_t i = -500; i <= 500; ++i) EXPECT_EQ(a.pos(i), b.pos(i));
}

TEST(Environment, ExtensionNeverPerturbsExistingAtoms) {
  auto a = Environment::sample(10, 2.0, 5);
  std::vector<double> before;
  for (std::int64_t i = -10; i <= 10; ++i) before.push_back(a.pos(i));
  a.ensure(-5000, 3000);
  for (std::int64_t i = -10; i <= 10; ++i) EXPECT_EQ(a.pos(i), before[static_cast<std::size_t>(i + 10)]);
  auto b = Environment::sample(5000, 2.0, 5);
  for (std::int64_t i = -3000; i <= 3000; ++i) EXPECT_EQ(a.pos(i), b.pos(i));
}

TEST(Environment, StrictlyIncreasing) {
  auto e = Environment::sample(2000, 1.5, 3);
  for (std::int64_t i = e.lo(); i < e.hi(); ++i) EXPECT_GT(e.pos(i + 1), e.pos(i));
}

TEST(Environment, MeanGapLawOfLargeNumbers) {
  auto e = Environment::sample(500'000, 1.5, 11);
  const double n = 1'000'000;
  const double mean = (e.pos(500'000) - e.pos(-500'000)) / n;
  // Exp(1) gaps: sd of the mean is 1/sqrt(n); 3 sigma band
  EXPECT_NEAR(mean, 1.0, 3.0 / std::sqrt(n));
  EXPECT_NEAR(mean, 1.0, 0.01);
}

TEST(Environment, InvalidParameters) {
  EXPECT_THROW(Environment::sample(0, 1.5, 1), ParameterError);
  EXPECT_THROW(Environment::sample(10, 1.0, 1), ParameterError);
}

TEST(Environment, FrozenWindowThrows) {
  auto e = Environment::lattice(2.0, 5, false);
  EXPECT_GE(e.hi(), 5);
  EXPECT_THROW(e.at(e.hi() + 1), WindowExhausted);
  EXPECT_THROW(e.ensure(e.lo() - 1, 0), WindowExhausted);
}

TEST(Environment, CsvRoundTrip) {
  auto e = Environment::sample(50, 1.5, 9);
  std::stringstream ss;
  e.write_csv(ss);
  auto f = Environment::read_csv(ss, 1.5);
  for (std::int64_t i = -50; i <= 50; ++i) EXPECT_EQ(e.pos(i), f.pos(i));
}

TEST(Environment, MirrorMapsIndices) {
  auto e = Environment::sample(30, 1.5, 4);
  auto m = e.mirrored();
  for (std::int64_t i = -30; i <= 30; ++i) EXPECT_EQ(m.pos(i), -e.pos(-i));
  m.ensure(-100, 100);
  e.ensure(-100, 100);
  for (std::int64_t i = -100; i <= 100; ++i) EXPECT_EQ(m.pos(i), -e.pos(-i));
}

TEST(Conductance, DirectFormula) {
  auto e = Environment::finite({-1.0, 0.0, 1.0, 2.0}, 2.0);
  EXPECT_NEAR(conductance(e, 0, 1, 0.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(conductance(e, 0, 1, 0.0), 0.3678794, 1e-7);
  auto f = Environment::finite({0.0, 1.0, 2.0}, 1.5);
  EXPECT_NEAR(conductance(f, 1, 2, 0.1), std::exp(-0.7), 1e-15);
}

TEST(Conductance, Symmetric) {
  auto e = Environment::sample(50, 1.7, 2);
  for (std::int64_t i = -10; i <= 10; ++i)
    for (std::int64_t j = -10; j <= 10; ++j)
      if (i != j) EXPECT_EQ(conductance(e, i, j, 0.3), conductance(e, j, i, 0.3));
}

TEST(Conductance, SelfIsDomainError) {
  auto e = Environment::lattice(2.0, 3);
  EXPECT_THROW(conductance(e, 1, 1, 0.0), DomainError);
}

TEST(Resistance, NearestNeighbour) {
  auto e = Environment::finite({0.0, 1.0, 1.5}, 2.0);
  EXPECT_NEAR(resistance_nn(e, 0), std::exp(1.0), 1e-14);
  EXPECT_NEAR(resistance_nn(e, 1), std::exp(0.25), 1e-14);
}

TEST(Resistance, SlowlyVaryingTail) {
  // L(r) = e^gap, so P(L(r) > 10) = 1/10 exactly.
  auto e = Environment::sample(500'000, 2.0, 21);
  double hits = 0, n = 0;
  for (std::int64_t j = -500'000; j < 500'000; ++j, ++n) hits += slow_vary_L(resistance_nn(e, j), 2.0) > 10.0;
  const auto band = stats::binomial_band(0.1, n, 3.0);
  EXPECT_TRUE(band.contains(hits / n)) << hits / n;
}

TEST(TotalConductance, LatticeSeries) {
  auto e = Environment::lattice(2.0, 10);
  // oracle: direct series 2 sum_k e^{-k^2}, summed to machine precision
  double s = 0;
  for (int k = 1; k < 40; ++k) s += 2 * std::exp(-double(k) * k);
  EXPECT_NEAR(total_conductance(e, 0, 0.0), s, 1e-15);
  EXPECT_NEAR(total_conductance(e, 0, 0.0), 0.772637, 1e-6);
}

TEST(TotalConductance, TwoAtoms) {
  auto e = Environment::finite({0.0, 1.7}, 1.5);
  EXPECT_NEAR(total_conductance(e, 0, 0.0), std::exp(-std::pow(1.7, 1.5)), 1e-15);
}

TEST(TotalConductance, MirrorConsistency) {
  auto e = Environment::sample(100, 1.5, 8);
  auto m = e.mirrored();
  for (std::int64_t i = -20; i <= 20; ++i)
    EXPECT_NEAR(total_conductance(e, i, 0.2), total_conductance(m, -i, -0.2), 1e-13 * total_conductance(e, i, 0.2));
}

TEST(TotalConductance, CertificateAgainstWideSum) {
  for (double lam : {0.0, 0.05, -0.3}) {
    auto e = Environment::sample(300, 1.3, 17);
    for (std::int64_t i = -50; i <= 50; i += 7) {
      const auto nb = certified_neighbourhood(e, i, lam, 1e-12);
      double wide = 0;
      for (std::int64_t j = i - 200; j <= i + 200; ++j)
        if (j != i) wide += conductance(e, i, j, lam);
      EXPECT_LE(std::abs(wide - nb.retained), 1e-12 * nb.retained + 1e-15 * wide);
      EXPECT_LE(nb.tail_bound, 1e-12 * nb.retained);
    }
  }
}

TEST(TotalConductance, FrozenWindowExhausted) {
  auto e = Environment::lattice(1.1, 3, false);
  EXPECT_THROW(total_conductance(e, 0, 0.0, 1e-12), WindowExhausted);
}

TEST(ScalingFunctions, Identities) {
  for (double a : {1.2, 2.0, 3.5}) {
    EXPECT_EQ(slow_vary_L(1.0, a), 1.0);
    EXPECT_EQ(slow_vary_Linv(1.0, a), 1.0);
    for (double u : {0.5, 1.0, 7.0, 30.0}) EXPECT_NEAR(slow_vary_L(slow_vary_Linv(u, a), a), u, 1e-12 * u);
  }
  EXPECT_NEAR(slow_vary_L(std::exp(4.0), 2.0), std::exp(2.0), 1e-12);
}

TEST(ScalingFunctions, MonotoneAndContinuousAtOne) {
  for (double a : {1.5, 2.5}) {
    double prev = -1;
    for (double u = 0; u < 50; u += 0.01) {
      const double v = slow_vary_L(u, a);
      EXPECT_GT(v, prev);
      prev = v;
    }
    // continuous but not Lipschitz at 1: L(1 + h) - 1 ~ h^{1/alpha}
    EXPECT_NEAR(slow_vary_L(1 - 1e-12, a), slow_vary_L(1 + 1e-12, a), 2 * std::pow(1e-12, 1 / a));
    EXPECT_NEAR(slow_vary_Linv(1 - 1e-12, a), slow_vary_Linv(1 + 1e-12, a), 1e-11);
  }
}

TEST(IteratedLog, Values) {
  EXPECT_NEAR(iterated_log(1, std::exp(1.0)), 1.0, 1e-15);
  EXPECT_NEAR(iterated_log(2, std::exp(std::exp(1.0))), 1.0, 1e-15);
  EXPECT_NEAR(iterated_log(3, 20.0), std::log(std::log(std::log(20.0))), 1e-15);
  EXPECT_NEAR(iterated_log(3, 20.0), 0.0927512, 1e-7);  // frozen direct evaluation
  EXPECT_THROW(iterated_log(3, 19.0), DomainError);
  EXPECT_THROW(iterated_log(2, 1.0), DomainError);
}

TEST(InvariantMeasure, MeanTotalConductance) {
  EXPECT_NEAR(mean_total_conductance(2.0), std::sqrt(M_PI), 1e-14);
  EXPECT_NEAR(mean_total_conductance(2.0), 1.772454, 1e-6);
  // quadrature cross-check of 2 int_0^inf e^{-x^1.5} dx (midpoint rule)
  double q = 0;
  const double h = 1e-4;
  for (double x = h / 2; x < 30; x += h) q += 2 * std::exp(-std::pow(x, 1.5)) * h;
  EXPECT_NEAR(mean_total_conductance(1.5), q, 1e-6);
}

TEST(InvariantMeasure, LatticeExactSum) {
  auto e = Environment::lattice(2.0, 100);
  const double n = 10;
  auto mu = empirical_invariant_measure(e, n, 0.0, -20, 20);
  double c0 = 0;
  for (int k = 1; k < 40; ++k) c0 += 2 * std::exp(-double(k) * k);
  EXPECT_NEAR(mu.total(), 41 * c0 / n, 1e-12);
}

TEST(InvariantMeasure, TotalMassNearLimit) {
  auto e = Environment::sample(10, 2.0, 123);
  const double n = 2000;
  auto mu = empirical_invariant_measure_on(e, n, 0.0, -1.0, 1.0);
  EXPECT_NEAR(mu.total(), 2 * std::sqrt(M_PI), 0.15);
}
