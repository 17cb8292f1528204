#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "env.hpp"
#include "step_function.hpp"

namespace mott {

enum class Side { plus, minus };

inline const char* side_name(Side s) { return s == Side::plus ? "+" : "-"; }

// Edges on each side are numbered outward by m = 0, 1, 2, ...
//   plus:  edge m is (omega_m, omega_{m+1}),    inner endpoint index  m
//   minus: edge m is (omega_{-m-1}, omega_{-m}), inner endpoint index -m
// Record comparisons only ever involve r^{alpha,0} = exp(gap^alpha), which is
// monotone in the gap, so everything below compares gaps.

inline std::int64_t inner_index(Side s, std::int64_t m) { return s == Side::plus ? m : -m; }

inline double side_gap(Environment& env, Side s, std::int64_t m) {
  if (s == Side::plus) {
    env.ensure(0, m + 1);
    return env.pos(m + 1) - env.pos(m);
  }
  env.ensure(-m - 1, 0);
  return env.pos(-m) - env.pos(-m - 1);
}

struct Record {
  std::int64_t m = 0;      // edge number along the side
  std::int64_t index = 0;  // environment index of the inner endpoint (a_k^+ or the mirrored a_k^-)
  double gap = 0.0;
  double position = 0.0;   // omega_index

  double log_g(double alpha) const { return std::pow(gap, alpha); }
  double g(double alpha) const { return std::exp(log_g(alpha)); }
  /// n^{-1} L(g) = e^{gap} / n.
  double L_over_n(double n) const { return std::exp(gap) / n; }
};

struct SideRecords {
  int k_min = 0;  // smallest stored k; its record sits at edge 0
  std::vector<Record> rec;  // rec[k - k_min], k = k_min..K

  int k_max() const { return k_min + static_cast<int>(rec.size()) - 1; }
  /// a_k, g_k; below k_min the convention a_{k-1} := 0 applies.
  const Record& operator()(int k) const {
    if (k > k_max()) throw DomainError("record index beyond K");
    return rec[static_cast<std::size_t>(std::max(k, k_min) - k_min)];
  }
};

struct RecordTable {
  double n = 1;
  double delta = 1;
  int K = 1;
  double alpha = 2;
  SideRecords plus, minus;
  // k = 0..K: first left edge (scanning outward) with r >= g_k^+, stored as its
  // inner endpoint index (<= 0), and g~_k as the largest gap strictly inside,
  // or -1 when there is none (g~_k = 0).
  std::vector<std::int64_t> exceed_index;
  std::vector<double> gtt_gap;
  int N_const = 2;

  double g_plus(int k) const { return plus(k).g(alpha); }
  double log_g_plus(int k) const { return plus(k).log_g(alpha); }
  double gtt(int k) const {
    const double gp = gtt_gap.at(static_cast<std::size_t>(k));
    return gp < 0 ? 0.0 : std::exp(std::pow(gp, alpha));
  }
  double log_gtt(int k) const {
    const double gp = gtt_gap.at(static_cast<std::size_t>(k));
    return gp < 0 ? -kInf : std::pow(gp, alpha);
  }
  /// n^{-1} L(g~_k), with L(0) = 0.
  double gtt_L_over_n(int k) const {
    const double gp = gtt_gap.at(static_cast<std::size_t>(k));
    return gp < 0 ? 0.0 : std::exp(gp) / n;
  }
  std::int64_t a_tilde(int k) const { return exceed_index.at(static_cast<std::size_t>(k)); }
  std::int64_t b_tilde(int k) const { return a_tilde(k) - 1; }

  void write_csv(std::ostream& os, const Environment& env) const {
    io::CsvWriter w(os);
    w.header({"side", "k", "a_index", "atom_position", "g_value", "L_g_over_n"});
    for (Side s : {Side::plus, Side::minus}) {
      const SideRecords& sr = s == Side::plus ? plus : minus;
      for (int k = sr.k_min; k <= sr.k_max(); ++k) {
        const Record& r = sr(k);
        w.row(std::string(side_name(s)), k, r.index, env.pos(r.index), r.g(alpha), r.L_over_n(n));
      }
    }
  }
};

/// Edge budget for record scans in extendable environments.
inline constexpr std::int64_t kDefaultScanBudget = 200'000'000;

namespace detail {

inline SideRecords side_records(Environment& env, Side s, double n, double delta, int K, std::int64_t budget) {
  SideRecords out;
  const std::int64_t m0_hi = static_cast<std::int64_t>(std::floor(n * delta));
  auto make = [&](std::int64_t m, double gap) {
    Record r;
    r.m = m;
    r.index = inner_index(s, m);
    r.gap = gap;
    r.position = env.pos(r.index);
    return r;
  };
  auto gap_at = [&](std::int64_t m) {
    try {
      return side_gap(env, s, m);
    } catch (const WindowExhausted&) {
      return -1.0;
    }
  };

  // Collect gaps 0..m0_hi; a_0 is their argmax with ties to the smallest m.
  std::vector<double> prefix;
  prefix.reserve(static_cast<std::size_t>(m0_hi + 1));
  std::int64_t a0 = 0;
  for (std::int64_t m = 0; m <= m0_hi; ++m) {
    const double gp = gap_at(m);
    if (gp < 0) throw InsufficientRecords("window too small for a_0", 0);
    prefix.push_back(gp);
    if (gp > prefix[static_cast<std::size_t>(a0)]) a0 = m;
  }

  // Backward chain: argmax over {0, ..., a_k - 1}, down to edge 0.
  std::vector<Record> back;
  std::int64_t cur = a0;
  while (cur > 0) {
    std::int64_t best = 0;
    for (std::int64_t m = 1; m < cur; ++m)
      if (prefix[static_cast<std::size_t>(m)] > prefix[static_cast<std::size_t>(best)]) best = m;
    back.push_back(make(best, prefix[static_cast<std::size_t>(best)]));
    cur = best;
  }
  out.k_min = -static_cast<int>(back.size());
  for (auto it = back.rbegin(); it != back.rend(); ++it) out.rec.push_back(*it);
  out.rec.push_back(make(a0, prefix[static_cast<std::size_t>(a0)]));

  // Forward chain: strict first exceedance.
  std::int64_t m = a0 + 1;
  double level = prefix[static_cast<std::size_t>(a0)];
  for (int k = 1; k <= K; ++k) {
    for (;; ++m) {
      if (m > budget) throw InsufficientRecords("record scan budget exhausted", k);
      const double gp = gap_at(m);
      if (gp < 0) throw InsufficientRecords("environment window exhausted before K records", k);
      if (gp > level) break;
    }
    out.rec.push_back(make(m, side_gap(env, s, m)));
    level = out.rec.back().gap;
    ++m;
  }
  return out;
}

}  // namespace detail

/// Barrier locations and sizes for scale n: a_k^{+-}, g_k^{+-} (k = k_min..K)
/// plus the left exceedance data a~_k, g~_k for k = 0..K.
inline RecordTable extract_records(Environment& env, double n, double delta, int K,
                                   std::int64_t budget = kDefaultScanBudget) {
  if (!(n >= 1) || !(delta > 0) || K < 1) throw ParameterError("extract_records: need n >= 1, delta > 0, K >= 1");
  RecordTable t;
  t.n = n;
  t.delta = delta;
  t.K = K;
  t.alpha = env.alpha();
  t.N_const = N_const(env.alpha());
  t.plus = detail::side_records(env, Side::plus, n, delta, K, budget);
  t.minus = detail::side_records(env, Side::minus, n, delta, K, budget);

  // a~_k: first minus-side edge with gap >= g_k^+ gap. Scan once, reusing the
  // running maximum of the inner edges.
  t.exceed_index.assign(static_cast<std::size_t>(K + 1), 0);
  t.gtt_gap.assign(static_cast<std::size_t>(K + 1), -1.0);
  std::int64_t m = 0;
  double inner_max = -1.0;
  for (int k = 0; k <= K; ++k) {
    const double target = t.plus(k).gap;
    for (;; ++m) {
      if (m > budget) throw InsufficientRecords("left exceedance scan budget exhausted", k);
      double gp;
      try {
        gp = side_gap(env, Side::minus, m);
      } catch (const WindowExhausted&) {
        throw InsufficientRecords("environment window exhausted before left exceedance", k);
      }
      if (gp >= target) break;
      inner_max = std::max(inner_max, gp);
    }
    t.exceed_index[static_cast<std::size_t>(k)] = -m;
    t.gtt_gap[static_cast<std::size_t>(k)] = inner_max;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Discrete barrier processes m_{n,+-} and their inverses

/// m_{n,s}(x) = max over edges with |inner endpoint| <= x n of e^{gap}/n.
inline double barrier_process(Environment& env, double n, double x, Side s) {
  if (!(x >= 0)) throw ParameterError("barrier_process: x must be >= 0");
  double best = std::exp(side_gap(env, s, 0)) / n;
  for (std::int64_t m = 1;; ++m) {
    env.ensure_index(inner_index(s, m));
    if (std::abs(env.pos(inner_index(s, m))) > x * n) break;
    best = std::max(best, std::exp(side_gap(env, s, m)) / n);
  }
  return best;
}

/// m_{n,s} on [0, x_max] as a step function of x.
inline StepFunction barrier_step(Environment& env, double n, double x_max, Side s) {
  StepFunction f(std::exp(side_gap(env, s, 0)) / n);
  double level = side_gap(env, s, 0);
  for (std::int64_t m = 1;; ++m) {
    env.ensure_index(inner_index(s, m));
    const double x = std::abs(env.pos(inner_index(s, m))) / n;
    if (x > x_max) break;
    const double gp = side_gap(env, s, m);
    if (gp > level) {
      level = gp;
      f.push(x, std::exp(gp) / n);
    }
  }
  return f;
}

/// m^{-1}_{n,+}(t) = inf{x >= 0 : m_{n,+}(x) > t}; the minus side returns the
/// negated value, i.e. the (nonpositive) rescaled position of the blocking edge.
inline double barrier_inverse(Environment& env, double n, double t, Side s,
                              std::int64_t budget = kDefaultScanBudget) {
  if (!(t >= 0)) throw ParameterError("barrier_inverse: t must be >= 0");
  for (std::int64_t m = 0; m <= budget; ++m) {
    if (std::exp(side_gap(env, s, m)) / n > t) return env.pos(inner_index(s, m)) / n;
  }
  throw InsufficientRecords("barrier_inverse: scan budget exhausted", 0);
}

/// Edge number of the edge that blocks at level t.
inline std::int64_t barrier_inverse_edge(Environment& env, double n, double t, Side s,
                                         std::int64_t budget = kDefaultScanBudget) {
  for (std::int64_t m = 0; m <= budget; ++m)
    if (std::exp(side_gap(env, s, m)) / n > t) return m;
  throw InsufficientRecords("barrier_inverse: scan budget exhausted", 0);
}

/// t -> m^{-1}_{n,s}(t) on [0, t_max] (signed: nonincreasing on the minus side).
inline StepFunction barrier_inverse_path(Environment& env, double n, double t_max, Side s,
                                         std::int64_t budget = kDefaultScanBudget) {
  StepFunction f(0.0);
  double level = side_gap(env, s, 0);
  double v = std::exp(level) / n;  // inverse jumps at t = v to the next record
  for (std::int64_t m = 1; v <= t_max; ++m) {
    if (m > budget) throw InsufficientRecords("barrier_inverse_path: scan budget exhausted", 0);
    const double gp = side_gap(env, s, m);
    if (gp > level) {
      f.push(v, env.pos(inner_index(s, m)) / n);
      level = gp;
      v = std::exp(gp) / n;
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Typical-environment events

struct AEventConstants {
  double c1 = 0.1;
  double c2 = 10.0;
};

struct AEventReport {
  bool space_scaling = false, separation = false, nn_plus = false, nn_minus = false, pointwise = false,
       mass_control = false;
  bool holds = false;
  double ell1 = 0, ell2 = 0, ell3 = 0;
  double space_bound = 0;                     // n l3(n)
  std::vector<double> plus_position;          // omega_{a_k^+}, k = 0..K
  std::vector<double> minus_position;         // -omega_{a~_k}, k = 0..K
  double log_separation_threshold = 0;        // log^{alpha-1} n / l2(n)
  std::vector<double> log_separation_ratio;   // k = 1..K
  std::vector<double> log_nn_plus_sum;        // log sum, k = 1..K
  std::vector<double> log_nn_plus_bound;      // log(N g_{k-1})
  std::vector<double> log_nn_minus_sum;
  std::vector<double> log_nn_minus_bound;
  double c_min = 0, c_max = 0;                // over |j| <= floor(n l3)
  double pointwise_lower = 0, pointwise_upper = 0;
  std::vector<double> mass;                   // k = 1..K
  double mass_lower = 0, mass_upper = 0;
};

namespace detail {
inline double logsumexp_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}
}  // namespace detail

inline AEventReport check_A_event(Environment& env, const RecordTable& t, double lambda_eff,
                                  const AEventConstants& cst = {}, double tail_tol = 1e-12) {
  const double n = t.n, alpha = t.alpha;
  const int K = t.K;
  AEventReport r;
  r.ell1 = iterated_log(1, n);
  r.ell2 = iterated_log(2, n);
  r.ell3 = iterated_log(3, n);
  r.space_bound = n * r.ell3;

  r.space_scaling = true;
  for (int k = 0; k <= K; ++k) {
    r.plus_position.push_back(t.plus(k).position);
    r.minus_position.push_back(-env.pos(t.a_tilde(k)));
    if (!(r.plus_position.back() <= r.space_bound) || !(r.minus_position.back() <= r.space_bound))
      r.space_scaling = false;
  }

  r.log_separation_threshold = std::pow(std::log(n), alpha - 1.0) / r.ell2;
  r.separation = true;
  for (int k = 1; k <= K; ++k) {
    const double denom = detail::logsumexp_add(t.log_g_plus(k - 1), t.log_gtt(k));
    r.log_separation_ratio.push_back(t.log_g_plus(k) - denom);
    if (!(r.log_separation_ratio.back() > r.log_separation_threshold)) r.separation = false;
  }

  const double logN = std::log(static_cast<double>(t.N_const));
  r.nn_plus = r.nn_minus = true;
  for (int k = 1; k <= K; ++k) {
    double s = -kInf;
    for (std::int64_t m = 0; m < t.plus(k).m; ++m) s = detail::logsumexp_add(s, std::pow(side_gap(env, Side::plus, m), alpha));
    r.log_nn_plus_sum.push_back(s);
    r.log_nn_plus_bound.push_back(logN + t.log_g_plus(k - 1));
    if (!(s <= r.log_nn_plus_bound.back())) r.nn_plus = false;

    double sm = -kInf;
    for (std::int64_t m = 0; m < -t.a_tilde(k); ++m)
      sm = detail::logsumexp_add(sm, std::pow(side_gap(env, Side::minus, m), alpha));
    r.log_nn_minus_sum.push_back(sm);
    r.log_nn_minus_bound.push_back(logN + t.log_gtt(k));
    if (!(sm <= r.log_nn_minus_bound.back())) r.nn_minus = false;
  }

  // Total conductances over the union of index ranges needed.
  const std::int64_t jmax = static_cast<std::int64_t>(std::floor(n * r.ell3));
  std::int64_t lo = -jmax, hi = jmax;
  for (int k = 1; k <= K; ++k) {
    lo = std::min(lo, t.a_tilde(k));
    hi = std::max(hi, t.plus(k).index);
  }
  std::vector<double> c(static_cast<std::size_t>(hi - lo + 1));
  for (std::int64_t j = lo; j <= hi; ++j)
    c[static_cast<std::size_t>(j - lo)] = total_conductance(env, j, lambda_eff, tail_tol);

  r.pointwise_lower = std::exp(-std::pow(std::log(n), alpha + 1.0));
  r.pointwise_upper = r.ell1 * r.ell1;
  r.c_min = kInf;
  r.c_max = 0;
  for (std::int64_t j = -jmax; j <= jmax; ++j) {
    r.c_min = std::min(r.c_min, c[static_cast<std::size_t>(j - lo)]);
    r.c_max = std::max(r.c_max, c[static_cast<std::size_t>(j - lo)]);
  }
  r.pointwise = r.c_min >= r.pointwise_lower && r.c_max <= r.pointwise_upper;

  r.mass_lower = cst.c1 * n;
  r.mass_upper = cst.c2 * n * r.ell1 * r.ell1;
  r.mass_control = true;
  for (int k = 1; k <= K; ++k) {
    double s = 0;
    for (std::int64_t j = t.a_tilde(k); j <= t.plus(k).index; ++j) s += c[static_cast<std::size_t>(j - lo)];
    r.mass.push_back(s);
    if (!(s >= r.mass_lower && s <= r.mass_upper)) r.mass_control = false;
  }

  r.holds = r.space_scaling && r.separation && r.nn_plus && r.nn_minus && r.pointwise && r.mass_control;
  return r;
}

inline AEventReport check_A_event(Environment& env, double n, double delta, int K, double lambda_eff,
                                  const AEventConstants& cst = {}, double tail_tol = 1e-12) {
  if (!(n >= 20)) throw DomainError("check_A_event: n must be >= 20");
  RecordTable t = extract_records(env, n, delta, K);
  return check_A_event(env, t, lambda_eff, cst, tail_tol);
}

/// The event with the axes exchanged: the same check on the reflected
/// environment with the drift reversed.
inline AEventReport check_A_event_mirrored(const Environment& env, double n, double delta, int K, double lambda_eff,
                                           const AEventConstants& cst = {}, double tail_tol = 1e-12) {
  Environment m = env.mirrored();
  return check_A_event(m, n, delta, K, -lambda_eff, cst, tail_tol);
}

/// Smallest k in 1..K with n^{-1}L(g~_k), n^{-1}L(g_{k-1}^+) <= t - eta and
/// n^{-1}L(g_k^+) >= t + eta. Inputs indexed by k = 0..K.
inline std::optional<int> find_E_witness(const std::vector<double>& Lg_over_n, const std::vector<double>& Lgtt_over_n,
                                         double t, double eta) {
  if (Lg_over_n.size() != Lgtt_over_n.size()) throw ParameterError("find_E_witness: size mismatch");
  const int K = static_cast<int>(Lg_over_n.size()) - 1;
  for (int k = 1; k <= K; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    if (Lgtt_over_n[kk] <= t - eta && Lg_over_n[kk - 1] <= t - eta && Lg_over_n[kk] >= t + eta) return k;
  }
  return std::nullopt;
}

struct EEventReport {
  AEventReport a;
  std::optional<int> witness;
  bool holds = false;
};

inline EEventReport check_E_event(Environment& env, double n, double delta, double eta, int K, double t,
                                  double lambda_eff, const AEventConstants& cst = {}, double tail_tol = 1e-12) {
  if (!(eta > 0) || !(t > eta)) throw ParameterError("check_E_event: need eta > 0 and t > eta");
  if (!(n >= 20)) throw DomainError("check_E_event: n must be >= 20");
  RecordTable tab = extract_records(env, n, delta, K);
  EEventReport r;
  r.a = check_A_event(env, tab, lambda_eff, cst, tail_tol);
  std::vector<double> lg, lgt;
  for (int k = 0; k <= K; ++k) {
    lg.push_back(tab.plus(k).L_over_n(n));
    lgt.push_back(tab.gtt_L_over_n(k));
  }
  r.witness = find_E_witness(lg, lgt, t, eta);
  r.holds = r.a.holds && r.witness.has_value();
  return r;
}

inline EEventReport check_E_event_mirrored(const Environment& env, double n, double delta, double eta, int K, double t,
                                           double lambda_eff, const AEventConstants& cst = {},
                                           double tail_tol = 1e-12) {
  Environment m = env.mirrored();
  return check_E_event(m, n, delta, eta, K, t, -lambda_eff, cst, tail_tol);
}

}  // namespace mott
