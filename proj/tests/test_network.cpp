#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "mott/network.hpp"
#include "mott/walk.hpp"

using namespace mott;

namespace {

WeightedNetwork from_edges(int n, const std::vector<std::tuple<int, int, double>>& edges) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  for (auto [u, v, c] : edges) {
    C(u, v) += c;
    C(v, u) += c;
  }
  return WeightedNetwork::with_row_sum_measure(std::move(C));
}

}  // namespace

TEST(EffectiveResistance, SmallExamples) {
  EXPECT_NEAR(effective_resistance(from_edges(2, {{0, 1, 2.0}}), {0}, {1}).value(), 0.5, 1e-14);
  auto path = from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  EXPECT_NEAR(effective_resistance(path, {0}, {2}).value(), 2.0, 1e-14);
  auto tri = from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}});
  for (auto [a, b] : {std::pair{0, 1}, {1, 2}, {0, 2}}) {
    EXPECT_NEAR(effective_resistance(tri, {a}, {b}).value(), 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(effective_resistance_current(tri, {a}, {b}).value(), 2.0 / 3.0, 1e-12);
  }
}

TEST(EffectiveResistance, SetToSet) {
  // square 0-1-2-3-0: from {0} to {1, 3} is two unit edges in parallel
  auto sq = from_edges(4, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 0, 1.0}});
  EXPECT_NEAR(effective_resistance(sq, {0}, {1, 3}).value(), 0.5, 1e-12);
  EXPECT_NEAR(effective_resistance_current(sq, {0, 2}, {1, 3}).value(), 0.25, 1e-12);
}

TEST(EffectiveResistance, DisconnectedIsInfinite) {
  auto g = from_edges(4, {{0, 1, 1.0}, {2, 3, 1.0}});
  auto r = effective_resistance(g, {0}, {3});
  EXPECT_TRUE(r.is_infinite());
  EXPECT_THROW(r.value(), DomainError);
  EXPECT_TRUE(effective_resistance_current(g, {0}, {3}).is_infinite());
  EXPECT_NEAR(effective_resistance(g, {0}, {1}).value(), 1.0, 1e-14);
}

TEST(EffectiveResistance, SeriesParallelReduction) {
  Rng rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    SeriesParallel g = random_series_parallel(rng, 5);
    auto net = g.network();
    EXPECT_NEAR(effective_resistance(net, {g.s}, {g.t}).value(), g.R, 1e-10 * g.R);
    EXPECT_NEAR(effective_resistance_current(net, {g.s}, {g.t}).value(), g.R, 1e-10 * g.R);
  }
}

TEST(EffectiveResistance, EnergyAndCurrentAgree) {
  Rng rng(9);
  for (int rep = 0; rep < 100; ++rep) {
    auto net = random_network(3 + rep % 10, rng);
    const auto n = static_cast<std::int64_t>(net.size());
    const double a = effective_resistance(net, {0}, {n - 1}).value();
    const double b = effective_resistance_current(net, {0}, {n - 1}).value();
    EXPECT_NEAR(a, b, 1e-10 * a);
  }
}

TEST(EffectiveResistance, RayleighMonotonicity) {
  Rng rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    auto net = random_network(3 + rep % 10, rng);
    const Eigen::MatrixXd R0 = resistance_matrix(net);
    for (int p = 0; p < 20; ++p) {
      auto up = net;
      const auto i = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(net.size()));
      auto j = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(net.size() - 1));
      if (j >= i) ++j;
      const double add = std::exp(4 * rng.uniform() - 2);
      up.C(i, j) += add;
      up.C(j, i) += add;
      const Eigen::MatrixXd R1 = resistance_matrix(up);
      EXPECT_LE((R1 - R0).maxCoeff(), 1e-10 * R0.maxCoeff());
    }
  }
}

TEST(EffectiveResistance, TriangleInequality) {
  Rng rng(12);
  for (int rep = 0; rep < 200; ++rep) {
    auto net = random_network(3 + rep % 10, rng);
    const Eigen::MatrixXd R = resistance_matrix(net);
    const auto n = net.size();
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b)
        for (Eigen::Index c = 0; c < n; ++c) EXPECT_LE(R(a, c), R(a, b) + R(b, c) + 1e-12 * R.maxCoeff());
  }
}

TEST(EffectiveResistance, ResistanceMatrixMatchesDirichlet) {
  Rng rng(13);
  auto net = random_network(9, rng);
  const Eigen::MatrixXd R = resistance_matrix(net);
  for (std::int64_t a = 0; a < 9; ++a)
    for (std::int64_t b = a + 1; b < 9; ++b)
      EXPECT_NEAR(R(a, b), effective_resistance(net, {a}, {b}).value(), 1e-10 * R(a, b));
}

TEST(Network, ValidationRejectsBadInput) {
  Eigen::MatrixXd C(2, 2);
  C << 0, 1, 2, 0;
  EXPECT_THROW(WeightedNetwork::with_row_sum_measure(C), ParameterError);
  C << 1, 1, 1, 0;
  EXPECT_THROW(WeightedNetwork::with_row_sum_measure(C), ParameterError);
  auto g = from_edges(2, {{0, 1, 1.0}});
  EXPECT_THROW(effective_resistance(g, {0}, {}), ParameterError);
  EXPECT_THROW(g.find(7), ParameterError);
}

TEST(Stationary, TwoVertices) {
  Eigen::MatrixXd C(2, 2);
  C << 0, 1, 1, 0;
  Eigen::VectorXd mu(2);
  mu << 1, 3;
  WeightedNetwork net({0, 1}, C, mu);
  auto pi = stationary_vector(net);
  EXPECT_NEAR(pi(0), 0.25, 1e-15);
  EXPECT_NEAR(pi(1), 0.75, 1e-15);
}

TEST(Stationary, InvariantForTheChain) {
  Rng rng(21);
  for (int rep = 0; rep < 50; ++rep) {
    auto net = random_network(3 + rep % 10, rng);
    // arbitrary measure, not just row sums
    for (Eigen::Index i = 0; i < net.size(); ++i) net.mu(i) = std::exp(2 * rng.uniform() - 1);
    const Eigen::VectorXd pi = stationary_vector(net);
    EXPECT_NEAR(pi.sum(), 1.0, 1e-14);
    EXPECT_LE((pi.transpose() * net.generator()).cwiseAbs().maxCoeff(), 1e-12);
    // jump chain is stationary for pi weighted by the holding rates
    Eigen::VectorXd w = pi.cwiseProduct(net.C.rowwise().sum().cwiseQuotient(net.mu));
    w /= w.sum();
    EXPECT_LE((w.transpose() * net.jump_matrix() - w.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Hitting, ThreeAtomOneStep) {
  auto e = Environment::finite({-1.0, 0.0, 1.0}, 2.0);
  auto net = network_from_environment(e, 0.0);
  auto h = hitting_quantities(net, 0, {-1, 1});
  EXPECT_NEAR(h.expected_time, 1.0, 1e-14);
  auto p = hitting_quantities(net, 0, {1}, std::vector<std::int64_t>{-1});
  EXPECT_NEAR(*p.prob_A_before_B, 0.5, 1e-14);
}

TEST(Hitting, StartInTarget) {
  auto net = from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  auto h = hitting_quantities(net, 2, {2}, std::vector<std::int64_t>{0});
  EXPECT_EQ(h.expected_time, 0.0);
  EXPECT_EQ(*h.prob_A_before_B, 1.0);
  EXPECT_THROW(hitting_quantities(net, 0, {1}, std::vector<std::int64_t>{1}), ParameterError);
}

TEST(Hitting, UnreachableTargetIsNumericalFailure) {
  auto g = from_edges(4, {{0, 1, 1.0}, {2, 3, 1.0}});
  EXPECT_THROW(hitting_quantities(g, 0, {3}), NumericalFailure);
}

TEST(Hitting, MonteCarloWalkMatchesLinearSolve) {
  auto e = Environment::finite({-2.1, -1.3, -0.4, 0.0, 0.7, 1.1, 2.5}, 1.5);
  auto net = network_from_environment(e, 0.1);
  const std::vector<std::int64_t> A{3}, B{-3};
  auto h = hitting_quantities(net, 0, {3, -3}, std::nullopt);
  auto p = hitting_quantities(net, 0, A, B);
  const int R = 20000;
  double s = 0, s2 = 0, wins = 0;
  WalkConfig c;
  c.lambda_eff = 0.1;
  KernelCache cache(0.1, c.tail_tol);
  for (int r = 0; r < R; ++r) {
    c.seed = mix64(99, static_cast<std::uint64_t>(r));
    auto o = simulate(e, cache, c, NoObserver{}, [](double, std::int64_t i) { return i == 3 || i == -3; });
    s += o.end_time;
    s2 += o.end_time * o.end_time;
    wins += o.final_index == 3;
  }
  const double m = s / R, sd = std::sqrt((s2 / R - m * m) / R);
  EXPECT_NEAR(m, h.expected_time, 3 * sd);
  const double q = *p.prob_A_before_B;
  EXPECT_NEAR(wins / R, q, 3 * std::sqrt(q * (1 - q) / R));
}

TEST(Commute, UnitPath) {
  auto path = from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  auto c = commute_time_check(path, 0, 2);
  EXPECT_NEAR(c.lhs, 8.0, 1e-12);
  EXPECT_NEAR(c.rhs, 8.0, 1e-12);
  EXPECT_THROW(commute_time_check(path, 1, 1), ParameterError);
}

TEST(Commute, RandomNetworksAndRelabelling) {
  Rng rng(31);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 3 + rep % 10;
    auto net = random_network(n, rng);
    auto c = commute_time_check(net, 0, n - 1);
    EXPECT_LE(c.rel_err, 1e-8);
    // reversing the labels leaves the answer unchanged
    auto rev = net;
    std::reverse(rev.labels.begin(), rev.labels.end());
    auto d = commute_time_check(rev, n - 1, 0);
    EXPECT_NEAR(d.lhs, c.lhs, 1e-12 * c.lhs);
  }
}

TEST(Trace, KeepAllIsIdentity) {
  Rng rng(41);
  auto net = random_network(6, rng);
  auto t = trace_network(net, net.labels);
  EXPECT_LE((t.C - net.C).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Trace, PathSeriesReduction) {
  auto path = from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  auto t = trace_network(path, {0, 2});
  ASSERT_EQ(t.size(), 2);
  EXPECT_NEAR(t.C(0, 1), 0.5, 1e-15);
  EXPECT_EQ(t.labels, (std::vector<std::int64_t>{0, 2}));
}

TEST(Trace, ResistanceInvariant) {
  Rng rng(42);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 4 + rep % 9;
    auto net = random_network(n, rng);
    std::vector<std::int64_t> keep;
    for (std::int64_t i = 0; i < n; ++i)
      if (i == 0 || i == 1 || rng.uniform() < 0.5) keep.push_back(i);
    auto t = trace_network(net, keep);
    for (std::size_t a = 0; a < keep.size(); ++a)
      for (std::size_t b = a + 1; b < keep.size(); ++b) {
        const double r0 = effective_resistance(net, {keep[a]}, {keep[b]}).value();
        const double r1 = effective_resistance(t, {keep[a]}, {keep[b]}).value();
        EXPECT_NEAR(r0, r1, 1e-10 * r0);
      }
    for (Eigen::Index i = 0; i < t.size(); ++i)
      for (Eigen::Index j = 0; j < t.size(); ++j) EXPECT_GE(t.C(i, j), 0.0);
  }
}

TEST(SpectralGap, TwoState) {
  // rates q01 = c/mu0, q10 = c/mu1: relaxation rate is their sum
  Eigen::MatrixXd C(2, 2);
  C << 0, 0.3, 0.3, 0;
  Eigen::VectorXd mu(2);
  mu << 0.7, 0.2;
  WeightedNetwork net({0, 1}, C, mu);
  EXPECT_NEAR(spectral_gap(net), 0.3 / 0.7 + 0.3 / 0.2, 1e-13);
}

TEST(SpectralGap, RelabellingAndResistanceBound) {
  Rng rng(51);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 2 + rep % 11;
    auto net = random_network(n, rng);
    const double gap = spectral_gap(net);
    EXPECT_GT(gap, 0.0);
    EXPECT_GE(gap * net.mu.sum() * resistance_diameter(net), 1.0 - 1e-10);
    // permuting vertices permutes the matrix only
    Eigen::PermutationMatrix<Eigen::Dynamic> P(n);
    P.setIdentity();
    std::reverse(P.indices().data(), P.indices().data() + n);
    WeightedNetwork perm(net.labels, P * net.C * P.transpose(), P * net.mu);
    EXPECT_NEAR(spectral_gap(perm), gap, 1e-12 * gap);
  }
}

TEST(Mixing, TimeZeroAndLargeTime) {
  Rng rng(61);
  auto net = random_network(8, rng);
  const Eigen::VectorXd pi = stationary_vector(net);
  auto m0 = mixing_bound_check(net, 3, 0.0);
  EXPECT_NEAR(m0.exact_tv, 1 - pi(3), 1e-12);
  const double tmix = 60.0 / spectral_gap(net);
  EXPECT_LE(mixing_bound_check(net, 3, tmix).exact_tv, 1e-8);
}

TEST(Mixing, BoundHoldsOnGrid) {
  Rng rng(62);
  for (int rep = 0; rep < 100; ++rep) {
    auto net = random_network(2 + rep % 12, rng);
    const double scale = net.mu.sum() * resistance_diameter(net);
    for (int k = 0; k < 10; ++k) {
      const double t = scale * 0.25 * k;
      auto m = mixing_bound_check(net, 0, t);
      EXPECT_TRUE(m.holds) << rep << " " << t << " " << m.exact_tv << " " << m.bound;
    }
  }
}

TEST(Mixing, DistributionIsAProbability) {
  Rng rng(63);
  auto net = random_network(10, rng);
  for (double t : {0.0, 0.1, 1.0, 10.0}) {
    auto p = distribution_at(net, 4, t);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_GE(p.minCoeff(), -1e-14);
  }
}

TEST(AuxNetwork, InteriorBlockAndBoundarySums) {
  int checked = 0;
  for (std::uint64_t s = 0; s < 20 && checked < 5; ++s) {
    auto e = Environment::sample(3000, 1.5, s);
    RecordTable t;
    try {
      t = extract_records(e, 20, 1, 1);
    } catch (const InsufficientRecords&) {
      continue;
    }
    const double lam = 0.02;
    auto net = build_aux_network(e, t, 1, lam);
    const std::int64_t lo = t.a_tilde(1), hi = t.plus(1).index;
    ASSERT_EQ(net.size(), hi - lo + 3);
    EXPECT_EQ(net.labels.front(), kLeftLabel);
    EXPECT_EQ(net.labels.back(), kRightLabel);
    for (std::int64_t i = lo; i <= hi; ++i)
      for (std::int64_t j = lo; j <= hi; ++j)
        if (i != j) EXPECT_EQ(net.C(i - lo + 1, j - lo + 1), conductance(e, i, j, lam));
    // boundary rows against wide direct sums
    const auto R = net.size() - 1;
    for (std::int64_t i = lo; i <= hi; ++i) {
      double right = 0, left = 0;
      for (std::int64_t j = hi + 1; j <= hi + 400; ++j) right += conductance(e, i, j, lam);
      for (std::int64_t j = lo - 1; j >= lo - 400; --j) left += conductance(e, i, j, lam);
      EXPECT_NEAR(net.C(i - lo + 1, R), right, 1e-11 * right);
      EXPECT_NEAR(net.C(i - lo + 1, 0), left, 1e-11 * left);
    }
    double both = 0;
    for (std::int64_t l = lo - 1; l >= lo - 200; --l)
      for (std::int64_t r = hi + 1; r <= hi + 200; ++r) both += conductance(e, l, r, lam);
    EXPECT_NEAR(net.C(0, R), both, 1e-11 * both);
    EXPECT_EQ(net.mu(0), 1.0);
    EXPECT_EQ(net.mu(R), 1.0);
    ++checked;
  }
  EXPECT_GE(checked, 3);
}

TEST(AuxNetwork, FarMassNegligible) {
  // huge gaps just outside the window: the aggregates reduce to the nearest external atom
  std::vector<double> right{0.5, 0.4, 1.2, 0.3, 1.6};
  auto r = std::make_shared<std::vector<double>>(right);
  auto k = std::make_shared<std::size_t>(0);
  auto src = [r, k] { return *k < r->size() ? (*r)[(*k)++] : 6.0 + 0.5 * static_cast<double>((*k)++ - r->size()); };
  auto left = [j = 0]() mutable { return j == 0 ? (++j, 2.0) : 6.0 + 0.5 * j++; };
  auto e = Environment::from_gaps(src, left, 2.0, 5);
  auto t = extract_records(e, 1, 2, 1);
  ASSERT_EQ(t.plus(0).index, 2);
  ASSERT_EQ(t.plus(1).index, 4);
  ASSERT_EQ(t.a_tilde(1), 0);
  auto net = build_aux_network(e, t, 1, 0.0);
  const auto R = net.size() - 1;
  for (std::int64_t i = 0; i <= 4; ++i) {
    EXPECT_NEAR(net.C(i + 1, R), conductance(e, i, 5, 0.0), 1e-12 * conductance(e, i, 5, 0.0));
    EXPECT_NEAR(net.C(i + 1, 0), conductance(e, i, -1, 0.0), 1e-12 * conductance(e, i, -1, 0.0));
  }
}

TEST(AuxNetwork, ResistanceBoundRatiosFinite) {
  int checked = 0;
  for (std::uint64_t s = 0; s < 20 && checked < 5; ++s) {
    auto e = Environment::sample(3000, 1.5, s);
    RecordTable t;
    try {
      t = extract_records(e, 30, 1, 2);
    } catch (const InsufficientRecords&) {
      continue;
    }
    auto r = resistance_bounds_check(e, t, 1, 0.0);
    for (double v : {r.ratio_i, r.ratio_ii, r.ratio_iii}) {
      EXPECT_GT(v, 0.0);
      EXPECT_TRUE(std::isfinite(v));
    }
    ++checked;
  }
  EXPECT_GE(checked, 3);
}

TEST(SimulateNetwork, HittingProbabilityMatchesSolve) {
  Rng g(71);
  auto net = random_network(7, g, 0.4);
  auto p = hitting_quantities(net, 3, {0}, std::vector<std::int64_t>{6});
  Rng rng(72);
  std::vector<double> times;
  std::vector<std::int64_t> labels;
  const int R = 20000;
  double wins = 0, tsum = 0, t2 = 0;
  for (int r = 0; r < R; ++r) {
    simulate_network(net, 3, rng, 1'000'000, times, labels, [](Eigen::Index x) { return x == 0 || x == 6; });
    wins += labels.back() == 0;
    tsum += times.back();
    t2 += times.back() * times.back();
  }
  const double q = *p.prob_A_before_B;
  EXPECT_NEAR(wins / R, q, 3 * std::sqrt(q * (1 - q) / R));
  const double m = tsum / R, sd = std::sqrt((t2 / R - m * m) / R);
  EXPECT_NEAR(m, p.expected_time, 3 * sd);
}

TEST(NetworkExport, CsvHeaders) {
  auto g = from_edges(3, {{0, 1, 1.0}, {1, 2, 0.5}});
  std::stringstream a, b;
  g.write_edges_csv(a);
  g.write_vertices_csv(b);
  std::string h;
  std::getline(a, h);
  EXPECT_EQ(h, "u,v,conductance");
  std::getline(b, h);
  EXPECT_EQ(h, "label,mu");
  int rows = 0;
  while (std::getline(a, h)) ++rows;
  EXPECT_EQ(rows, 2);
}
