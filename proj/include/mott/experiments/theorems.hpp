#pragma once

// Statistical checks of the scaling results at desk scale: exceedance
// processes against the barrier processes, one-site localisation, the law of
// the position inside the barrier interval, and the crossing-time events.

#include <algorithm>
#include <cmath>
#include <optional>

#include "../env.hpp"
#include "../extremal.hpp"
#include "../metrics.hpp"
#include "../network.hpp"
#include "../records.hpp"
#include "../walk.hpp"
#include "common.hpp"

namespace mott::exp {

/// n L^{-1}(n t): the time at which the rescaled clock n^{-1} L(s/n) reads t.
inline double horizon(double n, double t, double alpha) { return n * slow_vary_Linv(n * t, alpha); }

/// Rescaled clock n^{-1} L(s/n).
inline double rescaled_time(double s, double n, double alpha) { return slow_vary_L(s / n, alpha) / n; }

inline std::uint64_t step_budget(double H, double factor) {
  return static_cast<std::uint64_t>(std::ceil(factor * H)) + 10000;
}

// ---------------------------------------------------------------------------
// Exceedance processes

/// x -> min(t0, n^{-1} L(n^{-1} Delta^s_{nx})) on the recorded extrema. On
/// [p_k/n, p_{k+1}/n) the exceedance time is that of extremum record k+1; an
/// exceedance that never happened is capped at t0 (the horizon).
inline StepFunction rescaled_exceedance(const ExtremaRecorder& ex, const Environment& env, double n, double t0,
                                        Side s) {
  const auto& ts = s == Side::plus ? ex.max_time : ex.min_time;
  const auto& is = s == Side::plus ? ex.max_index : ex.min_index;
  auto T = [&](std::size_t k) { return k < ts.size() ? std::min(t0, rescaled_time(ts[k], n, env.alpha())) : t0; };
  StepFunction f(T(1));
  for (std::size_t k = 1; k < ts.size(); ++k) f.push(std::abs(env.pos(is[k])) / n, T(k + 1));
  return f;
}

/// t -> n^{-1} X-bar (plus) or n^{-1} X-underbar (minus) at time n L^{-1}(nt), t <= t0.
inline StepFunction rescaled_extremum(const ExtremaRecorder& ex, const Environment& env, double n, double t0, Side s) {
  const auto& ts = s == Side::plus ? ex.max_time : ex.min_time;
  const auto& is = s == Side::plus ? ex.max_index : ex.min_index;
  StepFunction f(env.pos(is[0]) / n);
  for (std::size_t k = 1; k < ts.size(); ++k) {
    const double t = rescaled_time(ts[k], n, env.alpha());
    if (t > t0) break;
    f.push(t, env.pos(is[k]) / n);
  }
  return f;
}

struct ExceedanceSample {
  double dU = 0, dU_plus = 0, dU_minus = 0, dM1 = 0;
  bool censored = false;
};

inline ExceedanceSample exceedance_replicate(double n, double alpha, double lambda, double t0, double x0,
                                             double budget_factor, int m1_points, std::uint64_t seed) {
  auto env = Environment::sample(static_cast<std::int64_t>(n * (x0 + 1)), alpha, seed);
  const double H = horizon(n, t0, alpha);
  WalkConfig c;
  c.lambda_eff = lambda / n;
  c.max_time = H;
  c.max_steps = step_budget(H, budget_factor);
  c.seed = mix64(seed, 0xC0FFEE);
  KernelCache cache(c.lambda_eff, c.tail_tol);
  ExtremaRecorder ex;
  const WalkOutcome o = simulate(env, cache, c, ex);
  ExceedanceSample s;
  s.censored = o.reason == Terminal::step_budget;
  auto cap = [t0](double v) { return std::min(v, t0); };
  const StepFunction fp = rescaled_exceedance(ex, env, n, t0, Side::plus);
  const StepFunction fm = rescaled_exceedance(ex, env, n, t0, Side::minus);
  const StepFunction mp = barrier_step(env, n, x0, Side::plus).map(cap);
  const StepFunction mm = barrier_step(env, n, x0, Side::minus).map(cap);
  s.dU_plus = d_U(fp, mp, x0);
  s.dU_minus = d_U(fm, mm, x0);
  s.dU = s.dU_plus + s.dU_minus;

  const StepFunction xp = rescaled_extremum(ex, env, n, t0, Side::plus);
  const StepFunction xm = rescaled_extremum(ex, env, n, t0, Side::minus);
  const StepFunction ip = barrier_inverse_path(env, n, t0, Side::plus);
  const StepFunction im = barrier_inverse_path(env, n, t0, Side::minus);
  auto range = [](const StepFunction& f) {
    double lo = f.t0_value, hi = f.t0_value;
    for (double v : f.values) lo = std::min(lo, v), hi = std::max(hi, v);
    return hi - lo;
  };
  const double hp = (t0 + range(xp) + range(ip)) / m1_points, hm = (t0 + range(xm) + range(im)) / m1_points;
  s.dM1 = d_M1_T(xp, ip, t0, hp, false) + d_M1_T(xm, im, t0, hm, false);
  return s;
}

inline json run_exceedance_scaling(const json& cfg, const RunContext& ctx) {
  Report rep("exceedance_scaling", cfg, ctx.seed);
  const double alpha = opt(cfg, "alpha", 1.5), lambda = opt(cfg, "lambda", 0.0);
  const auto ns = opt(cfg, "n_grid", std::vector<double>{25, 50, 100});
  const int R = opt(cfg, "replicates", 200);
  const double t0 = opt(cfg, "t0", 1.0), x0 = opt(cfg, "x0", 2.0);
  const double budget = opt(cfg, "step_budget_factor", 3.0);
  const int m1_points = opt(cfg, "m1_points", 400);
  const double max_censored = opt(cfg, "max_censored_fraction", 0.2);
  const double level = opt(cfg, "ci_level", 0.9);
  const int resamples = opt(cfg, "bootstrap_resamples", 2000);

  std::vector<std::vector<double>> dU;
  json per_n = json::array();
  std::vector<double> plus_all, minus_all;
  for (double n : ns) {
    auto samples = parallel_map(static_cast<std::size_t>(R), ctx.workers, [&](std::size_t r) {
      return exceedance_replicate(n, alpha, lambda, t0, x0, budget, m1_points,
                                  mix64(mix64(ctx.seed, kExceedance, static_cast<std::uint64_t>(n)), r));
    });
    Tally tally;
    std::vector<double> d, m1;
    for (const auto& s : samples) {
      (s.censored ? tally.censored : tally.completed)++;
      d.push_back(s.dU);
      m1.push_back(s.dM1);
      plus_all.push_back(s.dU_plus);
      minus_all.push_back(s.dU_minus);
    }
    const double frac = static_cast<double>(tally.censored) / R;
    rep.check("censored_fraction_n=" + io::fmt(n), frac, "<=", max_censored);
    const auto ci = stats::bootstrap_median_ci(d, level, resamples, mix64(ctx.seed, kExceedance, 1, static_cast<std::uint64_t>(n)));
    per_n.push_back({{"n", n},
                     {"horizon", horizon(n, t0, alpha)},
                     {"tally", tally.to_json()},
                     {"median_dU", stats::median(d)},
                     {"median_dU_ci", band_json(ci)},
                     {"q25_dU", stats::quantile(d, 0.25)},
                     {"q75_dU", stats::quantile(d, 0.75)},
                     {"median_dM1", stats::median(m1)},
                     {"q25_dM1", stats::quantile(m1, 0.25)},
                     {"q75_dM1", stats::quantile(m1, 0.75)}});
    dU.push_back(std::move(d));
  }
  for (std::size_t i = 0; i + 1 < dU.size(); ++i) {
    const auto ci = bootstrap_median_diff_ci(dU[i], dU[i + 1], level, resamples, mix64(ctx.seed, kExceedance, 2, i));
    rep.check_true("median_dU_decreases_" + io::fmt(ns[i]) + "_to_" + io::fmt(ns[i + 1]), ci.hi < 0,
                   {{"median_diff_ci", band_json(ci)}});
  }
  rep.stats()["per_n"] = per_n;
  // the two sides have the same law by reflection symmetry
  const auto ks = stats::ks_two_sample(plus_all, minus_all);
  rep.stats()["plus_vs_minus_ks"] = {{"D", ks.D}, {"p_value", ks.p_value}};
  return rep.finish();
}

// ---------------------------------------------------------------------------
// One-site localisation

struct LocalisationSample {
  bool coincide = false, censored = false, e_event = false;
  int short_of_barrier = 0, beyond_barrier = 0;  // sides where the extremum fell short of / passed the barrier
};

inline LocalisationSample localisation_replicate(double n, double alpha, double lambda, double t, double budget_factor,
                                                 const json& ecfg, std::uint64_t seed) {
  auto env = Environment::sample(static_cast<std::int64_t>(2 * n), alpha, seed);
  const double H = horizon(n, t, alpha);
  WalkConfig c;
  c.lambda_eff = lambda / n;
  c.max_time = H;
  c.max_steps = step_budget(H, budget_factor);
  c.seed = mix64(seed, 0xC0FFEE);
  KernelCache cache(c.lambda_eff, c.tail_tol);
  ExtremaRecorder ex;
  const WalkOutcome o = simulate(env, cache, c, ex);
  LocalisationSample s;
  s.censored = o.reason == Terminal::step_budget;
  const std::int64_t mp = barrier_inverse_edge(env, n, t, Side::plus);
  const std::int64_t mm = barrier_inverse_edge(env, n, t, Side::minus);
  s.coincide = ex.max_index.back() == inner_index(Side::plus, mp) && ex.min_index.back() == inner_index(Side::minus, mm);
  s.short_of_barrier = (ex.max_index.back() < mp) + (ex.min_index.back() > -mm);
  s.beyond_barrier = (ex.max_index.back() > mp) + (ex.min_index.back() < -mm);
  if (n >= 20) {
    const double delta = opt(ecfg, "delta", 0.1), eta = opt(ecfg, "eta", 0.05);
    const int K = opt(ecfg, "K", 4);
    if (t > eta) {
      try {
        s.e_event = check_E_event(env, n, delta, eta, K, t, c.lambda_eff).holds ||
                    check_E_event_mirrored(env, n, delta, eta, K, t, c.lambda_eff).holds;
      } catch (const InsufficientRecords&) {
        s.e_event = false;
      }
    }
  }
  return s;
}

inline json run_localisation(const json& cfg, const RunContext& ctx) {
  Report rep("localisation", cfg, ctx.seed);
  const double alpha = opt(cfg, "alpha", 1.5), lambda = opt(cfg, "lambda", 0.0), t = opt(cfg, "t", 0.5);
  const auto ns = opt(cfg, "n_grid", std::vector<double>{25, 50, 100});
  const int R = opt(cfg, "replicates", 400);
  const double budget = opt(cfg, "step_budget_factor", 3.0);
  const double floor_n = opt(cfg, "gate_n", 50.0), floor = opt(cfg, "frequency_floor", 0.6);
  const double z = opt(cfg, "ci_z", 1.6448536269514722);  // two-sided 90%
  const json ecfg = cfg.value("e_event", json::object());

  json per_n = json::array();
  std::vector<double> freq, hi_ci;
  for (double n : ns) {
    auto samples = parallel_map(static_cast<std::size_t>(R), ctx.workers, [&](std::size_t r) {
      return localisation_replicate(n, alpha, lambda, t, budget, ecfg,
                                    mix64(mix64(ctx.seed, kLocalisation, static_cast<std::uint64_t>(n)), r));
    });
    Tally tally;
    double hits = 0, e_n = 0, e_hits = 0, ne_hits = 0, short_sides = 0, beyond_sides = 0;
    for (const auto& s : samples) {
      if (s.censored) {
        ++tally.censored;  // pessimistic: a censored run counts as a miss
        continue;
      }
      ++tally.completed;
      hits += s.coincide;
      short_sides += s.short_of_barrier;
      beyond_sides += s.beyond_barrier;
      e_n += s.e_event;
      (s.e_event ? e_hits : ne_hits) += s.coincide;
    }
    const double f = hits / R;
    const auto ci = stats::wilson_interval(hits, R, z);
    freq.push_back(f);
    hi_ci.push_back(ci.hi);
    per_n.push_back({{"n", n},
                     {"horizon", horizon(n, t, alpha)},
                     {"tally", tally.to_json()},
                     {"frequency", f},
                     {"frequency_ci", band_json(ci)},
                     {"sides_short_of_barrier", short_sides},
                     {"sides_beyond_barrier", beyond_sides},
                     {"e_event_count", e_n},
                     {"frequency_given_e", e_n > 0 ? json(e_hits / e_n) : json(nullptr)},
                     {"frequency_given_not_e", e_n < R ? json(ne_hits / (R - e_n)) : json(nullptr)}});
    if (n == floor_n) rep.check("frequency_n=" + io::fmt(n), f, ">=", floor);
  }
  // no significant decrease: the next frequency's upper CI bound reaches the current value
  for (std::size_t i = 0; i + 1 < freq.size(); ++i)
    rep.check("upper_ci_n=" + io::fmt(ns[i + 1]) + "_vs_freq_n=" + io::fmt(ns[i]), hi_ci[i + 1], ">=", freq[i]);
  rep.stats()["per_n"] = per_n;
  return rep.finish();
}

// ---------------------------------------------------------------------------
// Position inside the barrier interval

/// CDF of the density proportional to e^{2 lambda x} on [a, b].
inline double tilted_cdf(double a, double b, double lambda, double x) {
  if (x <= a) return 0.0;
  if (x >= b) return 1.0;
  if (lambda == 0.0) return (x - a) / (b - a);
  const double c = 2 * lambda;
  return std::expm1(c * (x - a)) / std::expm1(c * (b - a));
}

struct PositionEnvSample {
  std::vector<double> ks;                  // per time
  std::vector<double> ks_invariant;        // per time, against mu restricted to the interval
  stats::ChiSquareResult independence;     // median-split table across the first two times
  std::vector<double> first_time_positions;
  double phi = 0;                          // effect size of the median-split table
  Tally tally;
};

/// sup |F_emp - F_mu| for samples sitting on the atoms of a discrete measure.
inline double ks_discrete(std::vector<double> x, const DiscreteMeasure& m) {
  if (x.empty() || m.x.empty()) throw ParameterError("ks_discrete: empty input");
  std::sort(x.begin(), x.end());
  const double total = m.total(), N = static_cast<double>(x.size());
  double cum = 0, d = 0;
  std::size_t j = 0;
  for (std::size_t k = 0; k < m.x.size(); ++k) {
    cum += m.mass[k];
    while (j < x.size() && x[j] <= m.x[k]) ++j;
    d = std::max(d, std::abs(static_cast<double>(j) / N - cum / total));
  }
  return std::max(d, 1.0 - static_cast<double>(j) / N);  // samples beyond the last atom
}

/// Rescaled positions at the horizons of `times` for W walks on one environment.
inline std::vector<std::vector<double>> walk_positions(Environment& env, double n, double lambda_eff,
                                                       const std::vector<double>& H, int W, double budget_factor,
                                                       std::uint64_t seed, bool negate, Tally& tally) {
  std::vector<std::vector<double>> pos(H.size());
  KernelCache cache(lambda_eff, 1e-12);
  for (int w = 0; w < W; ++w) {
    WalkConfig c;
    c.lambda_eff = lambda_eff;
    c.max_time = H.back();
    c.max_steps = step_budget(H.back(), budget_factor);
    c.seed = mix64(seed, static_cast<std::uint64_t>(w));
    PositionSampler ps(H);
    const WalkOutcome o = simulate(env, cache, c, ps);
    ps.finish(o.end_time);
    if (!ps.complete()) {
      ++tally.censored;
      continue;
    }
    ++tally.completed;
    for (std::size_t k = 0; k < H.size(); ++k) pos[k].push_back((negate ? -1.0 : 1.0) * env.pos(ps.index[k]) / n);
  }
  return pos;
}

inline json run_position_law(const json& cfg, const RunContext& ctx) {
  Report rep("position_law", cfg, ctx.seed);
  const double alpha = opt(cfg, "alpha", 1.5), n = opt(cfg, "n", 50.0);
  const auto times = opt(cfg, "times", std::vector<double>{0.5, 1.0});
  const int envs = opt(cfg, "environments", 100), W = opt(cfg, "walks", 500);
  const double budget = opt(cfg, "step_budget_factor", 3.0);
  const double ks_ceiling = opt(cfg, "mean_ks_ceiling", 0.15);
  const double p_min = opt(cfg, "p_value_min", 0.01);
  if (times.size() < 2 || !std::is_sorted(times.begin(), times.end())) throw ParameterError("position_law: need two sorted times");
  std::vector<double> H;
  for (double t : times) H.push_back(horizon(n, t, alpha));

  // lambda = 0: uniformity and independence
  auto samples = parallel_map(static_cast<std::size_t>(envs), ctx.workers, [&](std::size_t r) {
    const std::uint64_t seed = mix64(mix64(ctx.seed, kPositionLaw, 1), r);
    auto env = Environment::sample(static_cast<std::int64_t>(3 * n), alpha, seed);
    PositionEnvSample s;
    auto pos = walk_positions(env, n, 0.0, H, W, budget, mix64(seed, 0xC0FFEE), false, s.tally);
    if (pos[0].empty()) return s;
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double a = barrier_inverse(env, n, times[k], Side::minus), b = barrier_inverse(env, n, times[k], Side::plus);
      s.ks.push_back(stats::ks_distance(pos[k], [&](double x) { return tilted_cdf(a, b, 0.0, x); }));
      s.ks_invariant.push_back(ks_discrete(pos[k], empirical_invariant_measure_on(env, n, 0.0, a, b)));
    }
    const double m0 = stats::median(pos[0]), m1 = stats::median(pos[1]);
    std::vector<std::vector<double>> tab(2, std::vector<double>(2, 0.0));
    for (std::size_t w = 0; w < pos[0].size(); ++w) tab[pos[0][w] > m0][pos[1][w] > m1] += 1;
    s.independence = stats::chi_square_independence(tab);
    s.phi = std::sqrt(s.independence.statistic / static_cast<double>(pos[0].size()));
    return s;
  });
  Tally tally;
  std::vector<double> ks_all, ks_first, ks_inv, phis;
  double chi = 0, df = 0;
  std::size_t envs_used = 0;
  for (const auto& s : samples) {
    tally.completed += s.tally.completed;
    tally.censored += s.tally.censored;
    if (s.ks.empty()) continue;
    ++envs_used;
    for (double v : s.ks) ks_all.push_back(v);
    for (double v : s.ks_invariant) ks_inv.push_back(v);
    ks_first.push_back(s.ks[0]);
    phis.push_back(s.phi);
    chi += s.independence.statistic;
    df += s.independence.df;
  }
  if (ks_all.empty()) throw NumericalFailure("position_law: no completed walks");
  const double mean_ks = stats::mean(ks_all);
  rep.check("mean_ks_uniform", mean_ks, "<=", ks_ceiling);
  const double p_ind = stats::chi2_sf(chi, df);
  rep.check("independence_p_value", p_ind, ">", p_min);
  rep.stats()["walk_tally"] = tally.to_json();
  rep.stats()["environments_used"] = envs_used;
  rep.stats()["mean_ks_first_time"] = stats::mean(ks_first);
  // same positions against the finite-n stationary law on the interval
  rep.stats()["mean_ks_invariant"] = stats::mean(ks_inv);
  rep.stats()["independence"] = {{"chi2", chi}, {"df", df}, {"p_value", p_ind}, {"mean_phi", stats::mean(phis)}};
  // KS of W samples from the target itself has mean about 0.87/sqrt(W)
  rep.stats()["ks_sampling_floor"] = 0.8687 / std::sqrt(static_cast<double>(W));

  // drift: (omega, lambda) against (mirror of omega, -lambda), positions negated
  const double lam = opt(cfg, "reflection_lambda", 1.0);
  const int renvs = opt(cfg, "reflection_environments", 40), rW = opt(cfg, "reflection_walks", 200);
  auto arms = parallel_map(static_cast<std::size_t>(renvs), ctx.workers, [&](std::size_t r) {
    const std::uint64_t seed = mix64(mix64(ctx.seed, kPositionLaw, 2), r);
    auto env = Environment::sample(static_cast<std::int64_t>(3 * n), alpha, seed);
    auto mir = env.mirrored();
    Tally t;
    const std::vector<double> H1{H[0]};
    auto a = walk_positions(env, n, lam / n, H1, rW, budget, mix64(seed, 1), false, t);
    auto b = walk_positions(mir, n, -lam / n, H1, rW, budget, mix64(seed, 2), true, t);
    // tilted law on the barrier interval, for the record
    const double lo = barrier_inverse(env, n, times[0], Side::minus), hi = barrier_inverse(env, n, times[0], Side::plus);
    const double ks = a[0].empty() ? 1.0 : stats::ks_distance(a[0], [&](double x) { return tilted_cdf(lo, hi, lam, x); });
    return std::make_tuple(a[0], b[0], ks);
  });
  std::vector<double> pa, pb, ks_tilted;
  for (auto& [a, b, k] : arms) {
    pa.insert(pa.end(), a.begin(), a.end());
    pb.insert(pb.end(), b.begin(), b.end());
    ks_tilted.push_back(k);
  }
  const auto refl = stats::ks_two_sample(pa, pb);
  rep.check("reflection_ks_p_value", refl.p_value, ">", p_min);
  rep.stats()["reflection"] = {{"lambda", lam}, {"D", refl.D}, {"samples", pa.size()}, {"mean_position", stats::mean(pa)},
                               {"mean_ks_tilted", stats::mean(ks_tilted)}};
  return rep.finish();
}

// ---------------------------------------------------------------------------
// Crossing-time events

struct CrossingSample {
  bool excluded = true;           // environment outside the typical event
  double late = 0, early = 0;     // event counts over walks
  double late_censored = 0;       // arrivals not seen before the threshold
  double walks = 0;
};

/// For record k: "late" is alpha_k >= (g_{k-1} + g~_k) n l1^4 and "early" is
/// beta_k <= n g_k / l1^16. A walk that has not arrived by the threshold is a
/// late event, so censoring is counted pessimistically.
inline CrossingSample crossing_replicate(double n, double alpha, double lambda, double delta, int K, int W,
                                         std::uint64_t seed) {
  CrossingSample s;
  auto env = Environment::sample(static_cast<std::int64_t>(3 * n), alpha, seed);
  RecordTable tab;
  try {
    tab = extract_records(env, n, delta, K);
    if (!check_A_event(env, tab, lambda / n).holds) return s;
  } catch (const InsufficientRecords&) {
    return s;
  }
  s.excluded = false;
  const double l1 = iterated_log(1, n);
  KernelCache cache(lambda / n, 1e-12);
  for (int k = 1; k <= K; ++k) {
    const double late_T = (tab.g_plus(k - 1) + tab.gtt(k)) * n * std::pow(l1, 4);
    const double early_T = n * tab.g_plus(k) / std::pow(l1, 16);
    const std::int64_t a = tab.plus(k).index, b = a + 1;
    for (int w = 0; w < W; ++w) {
      WalkConfig c;
      c.lambda_eff = lambda / n;
      c.seed = mix64(seed, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(w));
      c.max_time = late_T;
      auto o = simulate(env, cache, c, NoObserver{}, [a](double, std::int64_t i) { return i >= a; });
      if (o.reason != Terminal::stop_condition) {
        s.late += 1;
        s.late_censored += 1;
      }
      c.seed = mix64(seed, 1000 + static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(w));
      c.max_time = early_T;
      o = simulate(env, cache, c, NoObserver{}, [b](double, std::int64_t i) { return i >= b; });
      if (o.reason == Terminal::stop_condition) s.early += 1;
      s.walks += 1;
    }
  }
  return s;
}

struct ExcursionSample {
  bool used = false;
  double mean = 0, var = 0;  // geometric prediction
  double exit_time = 0;      // expected time to leave the network from the origin
  std::vector<double> G;
  double partial = 0;
};

/// Number of bottom-to-top excursions before leaving the auxiliary network,
/// against P(G >= i) = p0 q^{i-1}, q = P_top(hit bottom) P_bottom(hit top).
/// Environments whose expected exit time exceeds max_exit are skipped so that
/// every walk runs to completion within its step cap.
inline ExcursionSample excursion_replicate(double n, double alpha, double lambda, double delta, int k, int W,
                                           double max_mean, double max_exit, std::uint64_t seed) {
  ExcursionSample s;
  auto env = Environment::sample(static_cast<std::int64_t>(3 * n), alpha, seed);
  RecordTable tab;
  try {
    tab = extract_records(env, n, delta, k);
  } catch (const InsufficientRecords&) {
    return s;
  }
  const std::int64_t top = tab.plus(k).index, bottom = tab.a_tilde(k);
  if (top - bottom + 3 > 400) return s;  // dense solves beyond this get slow
  const WeightedNetwork net = build_aux_network(env, tab, k, lambda / n);
  if (top == 0 || bottom == top) return s;
  const std::vector<std::int64_t> out{kLeftLabel, kRightLabel};
  const double p0 = *hitting_quantities(net, 0, {top}, out).prob_A_before_B;
  const double q1 = *hitting_quantities(net, top, {bottom}, out).prob_A_before_B;
  const double q2 = *hitting_quantities(net, bottom, {top}, out).prob_A_before_B;
  const double q = q1 * q2;
  s.mean = p0 / (1 - q);
  const double m2 = p0 * (2.0 / ((1 - q) * (1 - q)) - 1.0 / (1 - q));
  s.var = m2 - s.mean * s.mean;
  if (!(s.mean <= max_mean) || !(q < 1)) return s;
  s.exit_time = hitting_quantities(net, 0, out).expected_time;
  if (!(s.exit_time <= max_exit)) return s;
  s.used = true;
  const auto cap = static_cast<std::uint64_t>(1000 * max_exit);
  std::vector<double> ts;
  std::vector<std::int64_t> ls;
  for (int w = 0; w < W; ++w) {
    Rng rng(mix64(seed, 0xE7C, static_cast<std::uint64_t>(w)));
    simulate_network(net, 0, rng, cap, ts, ls,
                     [&](Eigen::Index i) { return net.labels[static_cast<std::size_t>(i)] == kLeftLabel ||
                                                  net.labels[static_cast<std::size_t>(i)] == kRightLabel; });
    const ExcursionReport e = excursion_decomposition(ts, ls, bottom, top, kLeftLabel, kRightLabel);
    if (e.partial) {
      s.partial += 1;
      continue;
    }
    s.G.push_back(e.G);
  }
  return s;
}

inline json run_crossing_events(const json& cfg, const RunContext& ctx) {
  Report rep("crossing_events", cfg, ctx.seed);
  const double alpha = opt(cfg, "alpha", 1.5), lambda = opt(cfg, "lambda", 0.0), delta = opt(cfg, "delta", 0.1);
  const int K = opt(cfg, "K", 1);
  const auto ns = opt(cfg, "n_grid", std::vector<double>{50, 100, 200});
  const int envs = opt(cfg, "environments", 200), W = opt(cfg, "walks", 10);
  const double gate_n = opt(cfg, "gate_n", 100.0);
  const double late_ceiling = opt(cfg, "late_ceiling", 0.1), early_ceiling = opt(cfg, "early_ceiling", 0.1);
  const double z = opt(cfg, "ci_z", 1.6448536269514722);

  json per_n = json::array();
  std::vector<double> late_f, early_f, late_hi, early_hi;
  for (double n : ns) {
    auto samples = parallel_map(static_cast<std::size_t>(envs), ctx.workers, [&](std::size_t r) {
      return crossing_replicate(n, alpha, lambda, delta, K, W,
                                mix64(mix64(ctx.seed, kCrossing, static_cast<std::uint64_t>(n)), r));
    });
    Tally tally;
    double late = 0, early = 0, cens = 0, walks = 0;
    for (const auto& s : samples) {
      if (s.excluded) {
        ++tally.excluded;
        continue;
      }
      ++tally.completed;
      late += s.late;
      early += s.early;
      cens += s.late_censored;
      walks += s.walks;
    }
    const double lf = walks > 0 ? late / walks : 1.0, ef = walks > 0 ? early / walks : 1.0;
    const auto lci = stats::wilson_interval(late, walks, z), eci = stats::wilson_interval(early, walks, z);
    late_f.push_back(lf);
    early_f.push_back(ef);
    late_hi.push_back(lci.hi);
    early_hi.push_back(eci.hi);
    per_n.push_back({{"n", n},
                     {"tally", tally.to_json()},
                     {"walks", walks},
                     {"late_frequency", lf},
                     {"late_ci", band_json(lci)},
                     {"late_censored", cens},
                     {"early_frequency", ef},
                     {"early_ci", band_json(eci)}});
    if (n == gate_n) {
      rep.check("late_arrival_frequency_n=" + io::fmt(n), lf, "<=", late_ceiling);
      rep.check("early_crossing_frequency_n=" + io::fmt(n), ef, "<=", early_ceiling);
      rep.check("typical_environments_n=" + io::fmt(n), static_cast<double>(tally.completed), ">=", 1);
    }
  }
  // no significant increase: the next frequency stays below the current upper CI bound
  for (std::size_t i = 0; i + 1 < ns.size(); ++i) {
    const std::string tag = io::fmt(ns[i]) + "_to_" + io::fmt(ns[i + 1]);
    rep.check("late_nonincreasing_" + tag, late_f[i + 1], "<=", late_hi[i]);
    rep.check("early_nonincreasing_" + tag, early_f[i + 1], "<=", early_hi[i]);
  }
  rep.stats()["per_n"] = per_n;

  // excursion count against the network prediction
  const double gn = opt(cfg, "excursion_n", 20.0);
  const int genvs = opt(cfg, "excursion_environments", 60), gW = opt(cfg, "excursion_walks", 200);
  const double gmax = opt(cfg, "excursion_max_mean", 20.0);
  const double gexit = opt(cfg, "excursion_max_exit_time", 1e5);
  auto ex = parallel_map(static_cast<std::size_t>(genvs), ctx.workers, [&](std::size_t r) {
    return excursion_replicate(gn, alpha, lambda, delta, 1, gW, gmax, gexit, mix64(mix64(ctx.seed, kCrossing, 0xE7C), r));
  });
  double num = 0, var = 0, used = 0, walks = 0, partial = 0, maxz = 0, slow = 0;
  for (const auto& s : ex) {
    slow += s.exit_time > gexit;
    if (!s.used) continue;
    ++used;
    partial += s.partial;
    double d = 0;
    for (double g : s.G) d += g - s.mean;
    num += d;
    var += s.var * static_cast<double>(s.G.size());
    walks += static_cast<double>(s.G.size());
    if (!s.G.empty()) maxz = std::max(maxz, std::abs(d) / std::sqrt(s.var * static_cast<double>(s.G.size())));
  }
  const double zG = var > 0 ? num / std::sqrt(var) : kInf;
  rep.check("excursion_count_abs_z", std::abs(zG), "<=", 3.0);
  rep.stats()["excursions"] = {{"environments_used", used}, {"skipped_slow_exit", slow}, {"walks", walks}, {"partial", partial},
                               {"pooled_z", zG}, {"max_abs_z_single_env", maxz}};
  return rep.finish();
}

}  // namespace mott::exp
