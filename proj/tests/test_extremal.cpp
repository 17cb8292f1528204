#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mott/extremal.hpp"
#include "mott/stats.hpp"

using namespace mott;

namespace {
PointMeasure hand_measure(std::vector<PointAtom> atoms) {
  PointMeasure m;
  m.x_min = -1;
  m.x_max = 1;
  m.v_floor = 0.1;
  std::sort(atoms.begin(), atoms.end(), [](auto& a, auto& b) { return a.v > b.v; });
  m.atoms = std::move(atoms);
  return m;
}
}  // namespace

TEST(PoissonMeasure, MeanAtomCount) {
  // range length 2, floor 0.5: mean count 2 / 0.5 = 4
  const int R = 10000;
  double s = 0;
  for (int r = 0; r < R; ++r) s += static_cast<double>(sample_poisson_measure(-1, 1, 0.5, static_cast<std::uint64_t>(r)).atoms.size());
  EXPECT_NEAR(s / R, 4.0, 3 * std::sqrt(4.0 / R));
}

TEST(PoissonMeasure, AtomsInsideWindow) {
  auto m = sample_poisson_measure(-3, 2, 0.01, 7);
  ASSERT_FALSE(m.atoms.empty());
  for (const auto& a : m.atoms) {
    EXPECT_GT(a.v, 0.01);
    EXPECT_GE(a.x, -3);
    EXPECT_LE(a.x, 2);
  }
  for (std::size_t k = 1; k < m.atoms.size(); ++k) EXPECT_LT(m.atoms[k].v, m.atoms[k - 1].v);
}

TEST(PoissonMeasure, LoweringTheFloorOnlyAppends) {
  auto hi = sample_poisson_measure(-2, 2, 0.5, 3), lo = sample_poisson_measure(-2, 2, 0.05, 3);
  ASSERT_LE(hi.atoms.size(), lo.atoms.size());
  for (std::size_t k = 0; k < hi.atoms.size(); ++k) EXPECT_EQ(hi.atoms[k], lo.atoms[k]);
}

TEST(PoissonMeasure, VoidProbability) {
  // P(no atom in [0, x] x (v, inf)) = exp(-x / v)
  const int R = 10000;
  double hits = 0;
  for (int r = 0; r < R; ++r) {
    auto m = sample_poisson_measure(0, 1, 0.2, 1000 + static_cast<std::uint64_t>(r));
    bool none = true;
    for (const auto& a : m.atoms) none &= !(a.x <= 0.6 && a.v > 0.5);
    hits += none;
  }
  const double p = std::exp(-0.6 / 0.5);
  EXPECT_TRUE(stats::binomial_band(p, R, 3).contains(hits / R));
}

TEST(PoissonMeasure, InvalidArguments) {
  EXPECT_THROW(sample_poisson_measure(0, 1, 0, 1), ParameterError);
  EXPECT_THROW(sample_poisson_measure(1, 1, 0.5, 1), ParameterError);
}

TEST(ExtremalProcess, SingleAtom) {
  auto m = hand_measure({{0.5, 3.0}});
  auto f = extremal_process(m, true);
  EXPECT_EQ(f(1.0), 3.0);
  EXPECT_EQ(f(0.4), 0.1);  // censored floor
  auto g = extremal_process(m, false);
  EXPECT_EQ(g(1.0), 0.1);
}

TEST(ExtremalProcess, MarginalLaw) {
  // P(m_+(1) <= 2) = exp(-1/2)
  const int R = 10000;
  double hits = 0;
  for (int r = 0; r < R; ++r) {
    auto m = sample_poisson_measure(-1, 2, 0.1, 5000 + static_cast<std::uint64_t>(r));
    auto f = extremal_process(m, true);
    EXPECT_TRUE(f.nondecreasing());
    hits += f(1.0) <= 2.0;
  }
  EXPECT_TRUE(stats::binomial_band(std::exp(-0.5), R, 3).contains(hits / R)) << hits / R;
  EXPECT_NEAR(std::exp(-0.5), 0.6065, 1e-4);
}

TEST(ExtremalProcess, RightContinuousRunningMax) {
  auto m = sample_poisson_measure(-2, 2, 0.02, 9);
  auto f = extremal_process(m, false);
  for (double x = 0; x <= 2; x += 0.01) {
    double best = 0.02;
    for (const auto& a : m.atoms)
      if (a.x <= 0 && a.x >= -x) best = std::max(best, a.v);
    EXPECT_EQ(f(x), best);
  }
  for (std::size_t k = 0; k < f.jumps.size(); ++k) EXPECT_EQ(f(f.jumps[k]), f.values[k]);
}

TEST(LimitRecords, HandExample) {
  auto m = hand_measure({{0.2, 1.0}, {0.7, 5.0}});
  auto t = records_from_measure(m, 0.5, 1);
  ASSERT_EQ(t.plus.rec.size(), 2u);
  EXPECT_EQ(t.plus.rec[0].k, 0);
  EXPECT_EQ(t.plus.rec[0].a, 0.2);
  EXPECT_EQ(t.plus.rec[0].g, 1.0);
  EXPECT_EQ(t.plus.rec[1].a, 0.7);
  EXPECT_EQ(t.plus.rec[1].g, 5.0);
  EXPECT_FALSE(t.plus.partial);
  EXPECT_TRUE(t.minus.partial);
}

TEST(LimitRecords, BruteForceOnSamples) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto m = sample_poisson_measure(-30, 30, 1e-3, s);
    auto t = records_from_measure(m, 1.0, 3);
    for (bool plus : {true, false}) {
      const auto& side = plus ? t.plus : t.minus;
      // brute force: running max over atoms sorted by |x|, all strict increases
      std::vector<PointAtom> a;
      for (const auto& p : m.atoms)
        if (plus ? p.x >= 0 : p.x <= 0) a.push_back({std::abs(p.x), p.v});
      std::sort(a.begin(), a.end(), [](auto& l, auto& r) { return l.x < r.x; });
      std::vector<PointAtom> recs;
      for (const auto& p : a)
        if (recs.empty() || p.v > recs.back().v) recs.push_back(p);
      std::size_t i0 = 0;
      for (std::size_t i = 0; i < recs.size() && recs[i].x <= 1.0; ++i) i0 = i;
      const int kmin = side.rec.front().k;
      EXPECT_EQ(static_cast<std::size_t>(-kmin), i0);
      for (const auto& r : side.rec) {
        const auto& b = recs[static_cast<std::size_t>(static_cast<int>(i0) + r.k)];
        EXPECT_EQ(std::abs(r.a), b.x);
        EXPECT_EQ(r.g, b.v);
      }
      for (std::size_t k = 1; k < side.rec.size(); ++k) {
        EXPECT_GT(side.rec[k].g, side.rec[k - 1].g);
        EXPECT_GT(std::abs(side.rec[k].a), std::abs(side.rec[k - 1].a));
      }
    }
  }
}

TEST(LimitRecords, WindowTooShort) {
  auto m = sample_poisson_measure(-0.5, 0.5, 0.1, 1);
  EXPECT_THROW(records_from_measure(m, 1.0, 1), ParameterError);
}

TEST(LimitRecords, CsvHeader) {
  auto t = records_from_measure(sample_poisson_measure(-10, 10, 0.01, 2), 1.0, 2);
  std::stringstream ss;
  t.write_csv(ss);
  std::string h;
  std::getline(ss, h);
  EXPECT_EQ(h, "side,k,a,g,censored_flag");
}

TEST(InverseStep, Examples) {
  StepFunction c(1.0);
  EXPECT_TRUE(std::isinf(inverse_step(c, 3.0)));
  StepFunction f(0.0, {2.0}, {5.0});
  EXPECT_EQ(inverse_step(f, 3.0), 2.0);
  StepFunction bad(0.0, {1.0, 2.0}, {3.0, 1.0});
  EXPECT_THROW(inverse_step(bad, 0.5), DomainError);
  auto m = sample_poisson_measure(-5, 5, 0.01, 4);
  auto g = extremal_process(m, true);
  for (double t = 0; t < 3; t += 0.01) {
    const double x = inverse_step(g, t);
    if (std::isfinite(x)) EXPECT_GT(g(x), t);
  }
}

TEST(ULambda, UniformCase) {
  Rng rng(1);
  std::vector<double> x;
  for (int i = 0; i < 10000; ++i) x.push_back(sample_U_lambda(0, 1, 0, rng));
  auto ks = stats::ks_one_sample(x, [](double u) { return std::clamp(u, 0.0, 1.0); });
  EXPECT_GT(ks.p_value, 0.01);
}

TEST(ULambda, ExponentialTiltMean) {
  EXPECT_NEAR(U_lambda_mean(0, 1, 0.5), 1 / (M_E - 1), 1e-14);
  EXPECT_NEAR(U_lambda_mean(0, 1, 0.5), 0.581977, 1e-6);
  Rng rng(2);
  const int R = 100000;
  std::vector<double> x;
  for (int i = 0; i < R; ++i) x.push_back(sample_U_lambda(0, 1, 0.5, rng));
  EXPECT_NEAR(stats::mean(x), 1 / (M_E - 1), 3 * std::sqrt(stats::variance(x) / R));
  for (double v : x) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(ULambda, ContinuityAtZero) {
  EXPECT_LE(std::abs(U_lambda_mean(0, 1, 1e-6) - 0.5), 1e-4);
  EXPECT_LE(std::abs(U_lambda_from_uniform(0, 1, 1e-9, 0.3) - 0.3), 1e-8);
  EXPECT_THROW(U_lambda_from_uniform(1, 1, 0.0, 0.5), DomainError);
}

TEST(ULambda, ClosedFormMatches) {
  for (double lam : {-1.0, 0.3, 2.0})
    for (double u : {0.1, 0.5, 0.9}) {
      const double a = -0.4, b = 1.3;
      const double direct = std::log(std::exp(2 * lam * a) + u * (std::exp(2 * lam * b) - std::exp(2 * lam * a))) / (2 * lam);
      EXPECT_NEAR(U_lambda_from_uniform(a, b, lam, u), direct, 1e-12);
    }
}
