#pragma once

// Property suites: tail laws, analytic identities, network identities, the
// limiting extremal objects, the walk against linear algebra, and the
// invariant-measure comparison. Each returns a JSON report with its gated
// checks and raw statistics.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "../env.hpp"
#include "../extremal.hpp"
#include "../network.hpp"
#include "../records.hpp"
#include "../walk.hpp"
#include "common.hpp"

namespace mott::exp {

// ---------------------------------------------------------------------------
// Tails of r and L(r); finite-n law of the barrier process

/// P(m_{n,+}(x) <= v) for finite n: one edge at the origin plus Poisson(xn)
/// further edges, each exceeding with probability p = min(1, 1/(nv)).
inline double barrier_cdf_finite(double n, double x, double v) {
  const double p = std::min(1.0, 1.0 / (n * v));
  return (1.0 - p) * std::exp(-x * n * p);
}

inline json run_tail_and_records(const json& cfg, const RunContext& ctx) {
  Report rep("tail_and_records", cfg, ctx.seed);
  const double alpha = opt(cfg, "alpha", 1.5);
  const auto gaps = opt<std::int64_t>(cfg, "gaps", 1'000'000);
  const auto levels = opt(cfg, "levels", std::vector<double>{2, 5, 10, 100});
  const double z = opt(cfg, "z", 4.0);

  auto env = Environment::sample(gaps / 2, alpha, mix64(ctx.seed, kTail));
  const std::int64_t lo = -gaps / 2, hi = lo + gaps;  // gaps j = lo..hi-1
  std::vector<double> logr, Lr;
  logr.reserve(static_cast<std::size_t>(gaps));
  Lr.reserve(static_cast<std::size_t>(gaps));
  for (std::int64_t j = lo; j < hi; ++j) {
    env.ensure_index(j + 1);
    const double lr = log_resistance_nn(env, j);
    logr.push_back(lr);
    Lr.push_back(L_of_log(lr, alpha));
  }
  const double N = static_cast<double>(gaps);
  json rows = json::array();
  for (double u : levels) {
    double cL = 0, cr = 0;
    const double logu = std::log(u);
    for (std::size_t k = 0; k < Lr.size(); ++k) {
      cL += Lr[k] > u;
      cr += logr[k] > logu;
    }
    const double pL = 1.0 / u, pr = 1.0 / slow_vary_L(u, alpha);
    const auto bL = stats::binomial_band(pL, N, z), br = stats::binomial_band(pr, N, z);
    rep.check_true("L_tail_u=" + io::fmt(u), bL.contains(cL / N),
                   {{"empirical", cL / N}, {"expected", pL}, {"band", band_json(bL)}});
    rep.check_true("r_tail_u=" + io::fmt(u), br.contains(cr / N),
                   {{"empirical", cr / N}, {"expected", pr}, {"band", band_json(br)}});
    rows.push_back({{"u", u}, {"L_tail", cL / N}, {"L_expected", pL}, {"r_tail", cr / N}, {"r_expected", pr}});
  }
  rep.stats()["tails"] = rows;

  // Barrier process at a grid of (x, v): informational, compared with both
  // the exact finite-n law and the limit exp(-x/v).
  const auto ns = opt(cfg, "barrier_n", std::vector<double>{1e2, 1e4});
  const auto xs = opt(cfg, "barrier_x", std::vector<double>{0.5, 1.0, 2.0});
  const auto vs = opt(cfg, "barrier_v", std::vector<double>{0.5, 1.0, 2.0});
  const int R = opt(cfg, "barrier_replicates", 2000);
  const double xmax = *std::max_element(xs.begin(), xs.end());
  json brows = json::array(), ks = json::object();
  for (double n : ns) {
    auto samples = parallel_map(static_cast<std::size_t>(R), ctx.workers, [&](std::size_t r) {
      auto e = Environment::sample(static_cast<std::int64_t>(n * xmax) + 16, alpha,
                                   mix64(mix64(ctx.seed, kTail, static_cast<std::uint64_t>(n)), r));
      const StepFunction m = barrier_step(e, n, xmax, Side::plus);
      std::vector<double> out;
      for (double x : xs) out.push_back(m(x));
      return out;
    });
    for (std::size_t ix = 0; ix < xs.size(); ++ix) {
      for (double v : vs) {
        double c = 0;
        for (const auto& s : samples) c += s[ix] <= v;
        const double exact = barrier_cdf_finite(n, xs[ix], v);
        brows.push_back({{"n", n},
                         {"x", xs[ix]},
                         {"v", v},
                         {"empirical", c / R},
                         {"finite_n", exact},
                         {"limit", std::exp(-xs[ix] / v)},
                         {"within_band", stats::binomial_band(exact, R, z).contains(c / R)}});
      }
      if (xs[ix] == 1.0) {
        std::vector<double> m1;
        for (const auto& s : samples) m1.push_back(s[ix]);
        ks[io::fmt(n)] = stats::ks_distance(m1, [](double v) { return v > 0 ? std::exp(-1.0 / v) : 0.0; });
      }
    }
  }
  rep.stats()["barrier_cdf"] = brows;
  rep.stats()["barrier_ks_vs_limit_x1"] = ks;

  if (!ctx.out_dir.empty()) {
    auto f = io::open_out(ctx.out_dir / "tail.csv");
    io::CsvWriter w(f);
    w.header({"u", "L_tail", "L_expected", "r_tail", "r_expected"});
    for (const auto& r : rows) w.row(r["u"].get<double>(), r["L_tail"].get<double>(), r["L_expected"].get<double>(),
                                     r["r_tail"].get<double>(), r["r_expected"].get<double>());
    auto g = io::open_out(ctx.out_dir / "barrier_cdf.csv");
    io::CsvWriter wb(g);
    wb.header({"n", "x", "v", "empirical", "finite_n", "limit"});
    for (const auto& r : brows)
      wb.row(r["n"].get<double>(), r["x"].get<double>(), r["v"].get<double>(), r["empirical"].get<double>(),
             r["finite_n"].get<double>(), r["limit"].get<double>());
  }
  return rep.finish();
}

// ---------------------------------------------------------------------------
// Analytic identities

inline json run_identities(const json& cfg, const RunContext& ctx) {
  Report rep("identities", cfg, ctx.seed);
  const auto alphas = opt(cfg, "alphas", std::vector<double>{1.5, 2.5, 3.5});
  const int points = opt(cfg, "grid_points", 100);
  const double u_lo = opt(cfg, "u_min", 1e-3), u_hi = opt(cfg, "u_max", 1e8);
  const double tol = opt(cfg, "tolerance", 1e-12);

  double worst_LLinv = 0, worst_LinvL = 0;
  for (double a : alphas)
    for (int k = 0; k < points; ++k) {
      const double u = u_lo * std::pow(u_hi / u_lo, static_cast<double>(k) / (points - 1));
      worst_LLinv = std::max(worst_LLinv, std::abs(L_of_log(log_Linv(u, a), a) - u) / u);
      worst_LinvL = std::max(worst_LinvL, std::abs(slow_vary_Linv(slow_vary_L(u, a), a) - u) / u);
    }
  rep.check("L_of_Linv_rel_err", worst_LLinv, "<=", tol);
  rep.check("Linv_of_L_rel_err", worst_LinvL, "<=", tol);

  // Conductance symmetry, bit for bit.
  Rng rng(mix64(ctx.seed, kIdentities));
  std::size_t asym = 0, pairs = 0;
  for (double a : alphas) {
    auto env = Environment::sample(200, a, mix64(ctx.seed, kIdentities, static_cast<std::uint64_t>(a * 10)));
    for (int p = 0; p < 1000; ++p) {
      const auto i = static_cast<std::int64_t>(rng.uniform() * 400) - 200;
      auto j = static_cast<std::int64_t>(rng.uniform() * 400) - 200;
      if (j == i) ++j;
      for (double lam : {0.0, 0.3, -0.2}) {
        ++pairs;
        asym += conductance(env, i, j, lam) != conductance(env, j, i, lam);
      }
    }
  }
  rep.check("conductance_asymmetric_pairs", static_cast<double>(asym), "<=", 0);
  rep.stats()["conductance_pairs"] = pairs;

  // Truncation certificates against a much wider window.
  const double cert_tol = opt(cfg, "certificate_tail_tol", 1e-12);
  double worst_vs_bound = 0, worst_rel = 0;
  std::size_t sites = 0;
  for (double a : alphas) {
    auto env = Environment::sample(400, a, mix64(ctx.seed, kIdentities, 1000 + static_cast<std::uint64_t>(a * 10)));
    for (double lam : {0.0, 0.3}) {
      for (std::int64_t i = -100; i <= 100; i += 2) {
        const Neighbourhood nb = certified_neighbourhood(env, i, lam, cert_tol);
        const std::int64_t W = 4 * std::max(nb.left_radius, nb.right_radius) + 100;
        env.ensure(i - W, i + W);
        double omitted = 0;
        for (std::int64_t j = i - W; j <= i + W; ++j)
          if (j < i - nb.left_radius || j > i + nb.right_radius) omitted += conductance(env, i, j, lam);
        worst_vs_bound = std::max(worst_vs_bound, omitted / std::max(nb.tail_bound, 1e-300));
        worst_rel = std::max(worst_rel, omitted / nb.retained);
        ++sites;
      }
    }
  }
  rep.check("omitted_over_certified_bound", worst_vs_bound, "<=", 1.0);
  rep.check("omitted_relative_mass", worst_rel, "<=", cert_tol);
  rep.stats()["certificate_sites"] = sites;
  return rep.finish();
}

// ---------------------------------------------------------------------------
// Network identities

inline json run_network_suite(const json& cfg, const RunContext& ctx) {
  Report rep("network_suite", cfg, ctx.seed);
  const int nets = opt(cfg, "networks", 200);
  const int perturb = opt(cfg, "perturbations", 20);
  const int max_v = opt(cfg, "max_vertices", 12);
  const int tv_nets = opt(cfg, "tv_networks", 100), tv_times = opt(cfg, "tv_times", 10);
  auto size_of = [&](int rep_i, int min_v) { return min_v + rep_i % (max_v - min_v + 1); };
  auto edges = [](int n, const std::vector<std::tuple<int, int, double>>& es) {
    SeriesParallel g;
    g.nodes = n;
    g.edges = es;
    return g.network();
  };

  // exact small values
  double exact_err = 0;
  exact_err = std::max(exact_err, std::abs(effective_resistance(edges(3, {{0, 1, 1}, {1, 2, 1}}), {0}, {2}).value() - 2.0));
  exact_err = std::max(exact_err, std::abs(effective_resistance(edges(2, {{0, 1, 1}, {0, 1, 1}}), {0}, {1}).value() - 0.5));
  exact_err = std::max(exact_err, std::abs(effective_resistance(edges(3, {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}}), {0}, {1}).value() - 2.0 / 3.0));
  Rng rng(mix64(ctx.seed, kNetworks, 1));
  double sp_err = 0;
  for (int r = 0; r < nets; ++r) {
    SeriesParallel g = random_series_parallel(rng, 5);
    sp_err = std::max(sp_err, std::abs(effective_resistance(g.network(), {g.s}, {g.t}).value() - g.R) / g.R);
  }
  rep.check("exact_small_networks_abs_err", exact_err, "<=", 1e-10);
  rep.check("series_parallel_rel_err", sp_err, "<=", 1e-10);

  // Rayleigh monotonicity and the triangle inequality
  rng.reseed(mix64(ctx.seed, kNetworks, 2));
  std::size_t rayleigh_bad = 0, triangle_bad = 0, triples = 0;
  for (int r = 0; r < nets; ++r) {
    auto net = random_network(size_of(r, 3), rng);
    const Eigen::MatrixXd R0 = resistance_matrix(net);
    const auto n = net.size();
    for (int p = 0; p < perturb; ++p) {
      auto up = net;
      const auto i = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(n));
      auto j = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(n - 1));
      if (j >= i) ++j;
      const double add = std::exp(4 * rng.uniform() - 2);
      up.C(i, j) += add;
      up.C(j, i) += add;
      rayleigh_bad += (resistance_matrix(up) - R0).maxCoeff() > 1e-10 * R0.maxCoeff();
    }
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b)
        for (Eigen::Index c = 0; c < n; ++c) {
          ++triples;
          triangle_bad += R0(a, c) > R0(a, b) + R0(b, c) + 1e-12 * R0.maxCoeff();
        }
  }
  rep.check("rayleigh_violations", static_cast<double>(rayleigh_bad), "<=", 0);
  rep.check("triangle_violations", static_cast<double>(triangle_bad), "<=", 0);
  rep.stats()["triangle_triples"] = triples;

  // trace invariance, commute identity, spectral gap bound
  rng.reseed(mix64(ctx.seed, kNetworks, 3));
  double trace_err = 0, commute_err = 0, gap_min = kInf;
  for (int r = 0; r < nets; ++r) {
    const int n = size_of(r, 4);
    auto net = random_network(n, rng);
    std::vector<std::int64_t> keep;
    for (std::int64_t i = 0; i < n; ++i)
      if (i < 2 || rng.uniform() < 0.5) keep.push_back(i);
    auto t = trace_network(net, keep);
    for (std::size_t a = 0; a < keep.size(); ++a)
      for (std::size_t b = a + 1; b < keep.size(); ++b) {
        const double r0 = effective_resistance(net, {keep[a]}, {keep[b]}).value();
        trace_err = std::max(trace_err, std::abs(effective_resistance(t, {keep[a]}, {keep[b]}).value() - r0) / r0);
      }
    commute_err = std::max(commute_err, commute_time_check(net, 0, n - 1).rel_err);
    const auto g = random_network(size_of(r, 2), rng);
    gap_min = std::min(gap_min, spectral_gap(g) * g.mu.sum() * resistance_diameter(g));
  }
  rep.check("trace_resistance_rel_err", trace_err, "<=", 1e-10);
  rep.check("commute_identity_rel_err", commute_err, "<=", 1e-8);
  rep.check("min_gap_mu_diam", gap_min, ">=", 1.0 - 1e-10);

  // total-variation bound against the matrix exponential
  rng.reseed(mix64(ctx.seed, kNetworks, 4));
  std::size_t tv_bad = 0;
  double spectral_vs_expm = 0, tightest = 0;
  for (int r = 0; r < tv_nets; ++r) {
    auto net = random_network(size_of(r, 2), rng);
    const Eigen::VectorXd pi = stationary_vector(net);
    const double scale = net.mu.sum() * resistance_diameter(net);
    const Eigen::MatrixXd Q = net.generator();
    for (int k = 0; k < tv_times; ++k) {
      const double t = scale * 0.25 * k;
      const Eigen::MatrixXd P = (Q * t).exp();
      const Eigen::VectorXd p = P.row(0).transpose();
      const double tv = 0.5 * (p - pi).cwiseAbs().sum();
      const double bound = 0.5 * std::exp(-t / scale) / std::sqrt(pi.minCoeff());
      tv_bad += tv > bound * (1 + 1e-12) + 1e-15;
      tightest = std::max(tightest, tv / bound);
      spectral_vs_expm = std::max(spectral_vs_expm, (distribution_at(net, net.labels[0], t) - p).cwiseAbs().maxCoeff());
    }
  }
  rep.check("tv_bound_violations", static_cast<double>(tv_bad), "<=", 0);
  rep.stats()["tv_max_ratio_to_bound"] = tightest;
  rep.stats()["spectral_vs_expm_max_abs"] = spectral_vs_expm;
  return rep.finish();
}

// ---------------------------------------------------------------------------
// Limiting extremal objects

inline json run_extremal_suite(const json& cfg, const RunContext& ctx) {
  Report rep("extremal_suite", cfg, ctx.seed);
  const int R = opt(cfg, "samples", 10000);
  const auto xs = opt(cfg, "x_grid", std::vector<double>{0.5, 1.0, 2.0});
  const auto vs = opt(cfg, "v_grid", std::vector<double>{0.5, 1.0, 2.0});
  const double z = opt(cfg, "z", 4.0);
  const double floor = opt(cfg, "v_floor", 0.01);
  const double xmax = *std::max_element(xs.begin(), xs.end());

  // atom count: mean |x-range| / v_floor
  {
    const double lo = -1, hi = 1, vf = 0.5, mean = (hi - lo) / vf;
    double s = 0;
    for (int r = 0; r < R; ++r)
      s += static_cast<double>(sample_poisson_measure(lo, hi, vf, mix64(ctx.seed, kExtremal, 1, static_cast<std::uint64_t>(r))).atoms.size());
    const double m = s / R, sd = std::sqrt(mean / R);
    rep.check("poisson_count_z", std::abs(m - mean) / sd, "<=", z);
  }

  // m_+(x) has CDF exp(-x/v)
  std::vector<std::vector<double>> mx(xs.size());
  for (int r = 0; r < R; ++r) {
    auto m = sample_poisson_measure(-xmax, xmax, floor, mix64(ctx.seed, kExtremal, 2, static_cast<std::uint64_t>(r)));
    auto f = extremal_process(m, true);
    for (std::size_t i = 0; i < xs.size(); ++i) mx[i].push_back(f(xs[i]));
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = xs[i];
    auto ks = stats::ks_one_sample(mx[i], [x](double v) { return v > 0 ? std::exp(-x / v) : 0.0; });
    rep.check("void_ks_p_x=" + io::fmt(x), ks.p_value, ">", 0.01);
    for (double v : vs) {
      double c = 0;
      for (double s : mx[i]) c += s <= v;
      const auto b = stats::binomial_band(std::exp(-x / v), R, z);
      rep.check_true("void_prob_x=" + io::fmt(x) + "_v=" + io::fmt(v), b.contains(c / R),
                     {{"empirical", c / R}, {"expected", std::exp(-x / v)}, {"band", band_json(b)}});
    }
  }

  // record extraction vs brute force
  const int measures = opt(cfg, "record_measures", 1000);
  std::size_t rec_bad = 0;
  for (int s = 0; s < measures; ++s) {
    auto m = sample_poisson_measure(-30, 30, 1e-3, mix64(ctx.seed, kExtremal, 3, static_cast<std::uint64_t>(s)));
    LimitRecordTable t;
    try {
      t = records_from_measure(m, 1.0, 3);
    } catch (const ParameterError&) {
      continue;  // window too short for three forward records; nothing to compare
    }
    for (bool plus : {true, false}) {
      const auto& side = plus ? t.plus : t.minus;
      std::vector<PointAtom> a;
      for (const auto& p : m.atoms)
        if (plus ? p.x >= 0 : p.x <= 0) a.push_back({std::abs(p.x), p.v});
      std::sort(a.begin(), a.end(), [](auto& l, auto& r) { return l.x < r.x; });
      std::vector<PointAtom> recs;
      for (const auto& p : a)
        if (recs.empty() || p.v > recs.back().v) recs.push_back(p);
      std::size_t i0 = 0;
      for (std::size_t i = 0; i < recs.size() && recs[i].x <= 1.0; ++i) i0 = i;
      bool ok = !side.rec.empty() && static_cast<std::size_t>(-side.rec.front().k) == i0;
      for (const auto& r : side.rec) {
        const auto idx = static_cast<std::size_t>(static_cast<int>(i0) + r.k);
        ok = ok && idx < recs.size() && std::abs(r.a) == recs[idx].x && r.g == recs[idx].v;
      }
      rec_bad += !ok;
    }
  }
  rep.check("record_mismatches", static_cast<double>(rec_bad), "<=", 0);

  // tilted uniform sampler
  {
    Rng rng(mix64(ctx.seed, kExtremal, 4));
    const int M = opt(cfg, "u_lambda_samples", 100000);
    std::vector<double> x;
    for (int i = 0; i < M; ++i) x.push_back(sample_U_lambda(0, 1, 0.5, rng));
    const double target = 1.0 / (std::numbers::e - 1.0);
    rep.check("u_lambda_mean_z", std::abs(stats::mean(x) - target) / std::sqrt(stats::variance(x) / M), "<=", z);
  }
  return rep.finish();
}

// ---------------------------------------------------------------------------
// Walk against first-step analysis

inline json run_walk_oracle(const json& cfg, const RunContext& ctx) {
  Report rep("walk_oracle", cfg, ctx.seed);
  const int envs = opt(cfg, "environments", 20);
  const int R = opt(cfg, "replicates", 100000);
  const int max_atoms = opt(cfg, "max_atoms", 15);
  const double alpha = opt(cfg, "alpha", 1.5);
  const double z = opt(cfg, "z", 3.0);

  struct Row {
    double et = 0, et_mc = 0, et_sd = 0, p = 0, p_mc = 0, p_sd = 0, lambda = 0;
    int atoms = 0;
  };
  auto rows = parallel_map(static_cast<std::size_t>(envs), ctx.workers, [&](std::size_t e) {
    Rng rng(mix64(ctx.seed, kWalkOracle, e));
    const int m = 5 + static_cast<int>(rng.uniform() * (max_atoms - 4));  // 5..max_atoms
    const int left = 1 + static_cast<int>(rng.uniform() * (m - 2));       // >= 1 atom on each side of 0
    std::vector<double> pos{0.0};
    for (int k = 0; k < left; ++k) pos.insert(pos.begin(), pos.front() - 0.3 - rng.exponential());
    for (int k = left + 1; k < m; ++k) pos.push_back(pos.back() + 0.3 + rng.exponential());
    Row row;
    row.atoms = m;
    row.lambda = 0.4 * rng.uniform() - 0.2;
    auto env = Environment::finite(pos, alpha);
    const std::int64_t A = env.hi(), B = env.lo();
    auto net = network_from_environment(env, row.lambda);
    row.et = hitting_quantities(net, 0, {A, B}).expected_time;
    row.p = *hitting_quantities(net, 0, {A}, std::vector<std::int64_t>{B}).prob_A_before_B;
    WalkConfig c;
    c.lambda_eff = row.lambda;
    KernelCache cache(c.lambda_eff, c.tail_tol);
    double s = 0, s2 = 0, wins = 0;
    for (int r = 0; r < R; ++r) {
      c.seed = mix64(mix64(ctx.seed, kWalkOracle, 1000 + e), static_cast<std::uint64_t>(r));
      auto o = simulate(env, cache, c, NoObserver{}, [&](double, std::int64_t i) { return i == A || i == B; });
      s += o.end_time;
      s2 += o.end_time * o.end_time;
      wins += o.final_index == A;
    }
    row.et_mc = s / R;
    row.et_sd = std::sqrt((s2 / R - row.et_mc * row.et_mc) / R);
    row.p_mc = wins / R;
    row.p_sd = std::sqrt(row.p * (1 - row.p) / R);
    return row;
  });
  json jr = json::array();
  double zt = 0, zp = 0;
  for (const auto& r : rows) {
    const double a = std::abs(r.et_mc - r.et) / r.et_sd, b = r.p_sd > 0 ? std::abs(r.p_mc - r.p) / r.p_sd : 0.0;
    zt = std::max(zt, a);
    zp = std::max(zp, b);
    jr.push_back({{"atoms", r.atoms}, {"lambda_eff", r.lambda}, {"hitting_time", r.et}, {"hitting_time_mc", r.et_mc},
                  {"z_time", a}, {"prob_A_first", r.p}, {"prob_A_first_mc", r.p_mc}, {"z_prob", b}});
  }
  rep.check("max_z_hitting_time", zt, "<=", z);
  rep.check("max_z_hit_probability", zp, "<=", z);
  rep.stats()["environments"] = jr;
  return rep.finish();
}

// ---------------------------------------------------------------------------
// Invariant measure on the barrier interval

/// Test functions for the invariant-measure comparison.
inline const std::vector<std::pair<std::string, std::function<double(double)>>>& test_functions() {
  static const std::vector<std::pair<std::string, std::function<double(double)>>> f{
      {"one", [](double) { return 1.0; }},
      {"x", [](double x) { return x; }},
      {"x2", [](double x) { return x * x; }},
      {"sin_pi_x", [](double x) { return std::sin(std::numbers::pi * x); }},
      {"cos_pi_x", [](double x) { return std::cos(std::numbers::pi * x); }},
  };
  return f;
}

/// 2 Gamma(1 + 1/alpha) int_a^b e^{2 lambda x} f(x) dx.
inline double limit_integral(double a, double b, double alpha, double lambda, const std::function<double(double)>& f) {
  if (!(b > a)) return 0.0;
  auto g = [&](double x) { return std::exp(2 * lambda * x) * f(x); };
  return mean_total_conductance(alpha) * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, a, b, 10, 1e-13);
}

inline json run_invariant_measure(const json& cfg, const RunContext& ctx) {
  Report rep("invariant_measure", cfg, ctx.seed);
  const double alpha = opt(cfg, "alpha", 1.5), lambda = opt(cfg, "lambda", 0.0), t = opt(cfg, "t", 0.5);
  const auto ns = opt(cfg, "n_grid", std::vector<double>{25, 50, 100, 200});
  const int R = opt(cfg, "replicates", 200);
  json per_n = json::array();
  std::vector<std::vector<double>> err_one;
  for (double n : ns) {
    auto errs = parallel_map(static_cast<std::size_t>(R), ctx.workers, [&](std::size_t r) {
      auto env = Environment::sample(static_cast<std::int64_t>(4 * n), alpha,
                                     mix64(mix64(ctx.seed, kInvariant, static_cast<std::uint64_t>(n)), r));
      const double a = barrier_inverse(env, n, t, Side::minus), b = barrier_inverse(env, n, t, Side::plus);
      const DiscreteMeasure mu = empirical_invariant_measure_on(env, n, lambda / n, a, b);
      std::vector<double> e;
      for (const auto& [name, f] : test_functions()) {
        double s = 0;
        for (std::size_t k = 0; k < mu.x.size(); ++k) s += f(mu.x[k]) * mu.mass[k];
        e.push_back(std::abs(s - limit_integral(a, b, alpha, lambda, f)));
      }
      return e;
    });
    json row{{"n", n}};
    for (std::size_t k = 0; k < test_functions().size(); ++k) {
      std::vector<double> col;
      for (const auto& e : errs) col.push_back(e[k]);
      row["median_abs_err_" + test_functions()[k].first] = stats::median(col);
      if (k == 0) err_one.push_back(col);
    }
    per_n.push_back(row);
  }
  rep.stats()["per_n"] = per_n;
  json trend = json::array();
  for (std::size_t i = 0; i + 1 < err_one.size(); ++i) {
    const auto ci = bootstrap_median_diff_ci(err_one[i], err_one[i + 1], 0.9, 2000, mix64(ctx.seed, kInvariant, 7, i));
    trend.push_back({{"from_n", ns[i]}, {"to_n", ns[i + 1]}, {"median_diff_ci90", band_json(ci)}, {"decrease", ci.hi < 0}});
  }
  rep.stats()["trend_f_one"] = trend;
  return rep.finish();
}

}  // namespace mott::exp
