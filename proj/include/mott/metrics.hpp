#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "errors.hpp"
#include "step_function.hpp"

namespace mott {

namespace detail {

/// Breakpoints of f and g in (0, T], merged, with 0 in front.
inline std::vector<double> merged_breaks(const StepFunction& f, const StepFunction& g, double T) {
  std::vector<double> s{0.0};
  for (double t : f.jumps)
    if (t > 0 && t <= T) s.push_back(t);
  for (double t : g.jumps)
    if (t > 0 && t <= T) s.push_back(t);
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

/// Integral of e^{-T} min(1, h(T)) over [0, T_max] for a nondecreasing step
/// function h given by breakpoints s (s[0] = 0) and values h[i] on [s_i, s_{i+1}).
inline double exp_weighted_integral(const std::vector<double>& s, const std::vector<double>& h, double T_max) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size() && s[i] < T_max; ++i) {
    const double b = i + 1 < s.size() ? std::min(s[i + 1], T_max) : T_max;
    const double w = std::isinf(b) ? std::exp(-s[i]) : std::exp(-s[i]) - std::exp(-b);
    acc += std::min(1.0, h[i]) * w;
  }
  return acc;
}

}  // namespace detail

/// sup over [0, T] of |f - g|.
inline double d_U_T(const StepFunction& f, const StepFunction& g, double T) {
  if (!(T >= 0)) throw ParameterError("d_U_T: T must be >= 0");
  double m = 0.0;
  for (double s : detail::merged_breaks(f, g, T)) m = std::max(m, std::abs(f(s) - g(s)));
  return m;
}

/// Integral of e^{-T} min(1, d_U^T) over [0, T_max] (T_max = inf gives the
/// full metric). T -> d_U^T is a step function, so the integral is exact.
inline double d_U(const StepFunction& f, const StepFunction& g, double T_max = std::numeric_limits<double>::infinity()) {
  const auto s = detail::merged_breaks(f, g, std::numeric_limits<double>::max());
  std::vector<double> h;
  double m = 0.0;
  for (double t : s) {
    m = std::max(m, std::abs(f(t) - g(t)));
    h.push_back(m);
  }
  return detail::exp_weighted_integral(s, h, T_max);
}

namespace detail {

struct Anchor {
  double s, t;  // time in f, matched time in g
  std::size_t fi, gi;  // number of f / g jumps up to and including the anchor
};

/// sup |f(lambda(t)) - g(t)| over t in [a.t, b.t) (or [a.t, b.t] when
/// closed), lambda linear from (a.t -> a.s) to (b.t -> b.s).
inline double segment_mismatch(const StepFunction& f, const StepFunction& g, const Anchor& a, const Anchor& b,
                               bool closed) {
  double fv = a.fi == 0 ? f.t0_value : f.values[a.fi - 1];
  double gv = a.gi == 0 ? g.t0_value : g.values[a.gi - 1];
  double m = std::abs(fv - gv);
  std::size_t i = a.fi, j = a.gi;
  const double scale = (b.t - a.t) / (b.s - a.s);
  auto f_time = [&](std::size_t k) { return a.t + (f.jumps[k] - a.s) * scale; };
  const std::size_t fe = b.fi - (closed ? 0 : 1), ge = b.gi - (closed ? 0 : 1);
  // Interior jumps only: anchors at b are themselves matched jumps unless closed.
  while (i < fe || j < ge) {
    const double tf = i < fe ? f_time(i) : std::numeric_limits<double>::infinity();
    const double tg = j < ge ? g.jumps[j] : std::numeric_limits<double>::infinity();
    const double t = std::min(tf, tg);
    while (i < fe && f_time(i) <= t) fv = f.values[i++];
    while (j < ge && g.jumps[j] <= t) gv = g.values[j++];
    m = std::max(m, std::abs(fv - gv));
  }
  return m;
}

inline std::size_t count_upto(const std::vector<double>& v, double x) {
  return static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), x) - v.begin());
}

}  // namespace detail

/// Skorohod J1 distance on [0, T] in the sum form
///   inf_lambda ( sup|f o lambda - g| + sup|lambda - id| ),
/// over piecewise-linear warps anchored at order-preserving matchings of jumps
/// in (0, T). For every displacement level eps (sorted candidate values) a
/// bottleneck DP over anchor pairs finds the least value mismatch; the answer
/// is the best eps + mismatch. The identity warp is included, so the result
/// never exceeds d_U^T. Cost grows like (jumps)^4, which is fine for the short
/// paths this is used on.
inline double d_J1_T(const StepFunction& f, const StepFunction& g, double T) {
  if (!(T > 0)) throw ParameterError("d_J1_T: T must be > 0");
  std::vector<std::size_t> fi, gi;  // jumps strictly inside (0, T)
  for (std::size_t k = 0; k < f.jumps.size(); ++k)
    if (f.jumps[k] > 0 && f.jumps[k] < T) fi.push_back(k);
  for (std::size_t k = 0; k < g.jumps.size(); ++k)
    if (g.jumps[k] > 0 && g.jumps[k] < T) gi.push_back(k);
  const std::size_t nf = fi.size(), ng = gi.size();
  const detail::Anchor start{0.0, 0.0, detail::count_upto(f.jumps, 0.0), detail::count_upto(g.jumps, 0.0)};
  const detail::Anchor end{T, T, detail::count_upto(f.jumps, T), detail::count_upto(g.jumps, T)};
  auto anchor = [&](std::size_t a, std::size_t b) {
    return detail::Anchor{f.jumps[fi[a]], g.jumps[gi[b]], fi[a] + 1, gi[b] + 1};
  };
  double best = detail::segment_mismatch(f, g, start, end, true);  // identity warp
  std::vector<double> eps;
  for (std::size_t a = 0; a < nf; ++a)
    for (std::size_t b = 0; b < ng; ++b) eps.push_back(std::abs(f.jumps[fi[a]] - g.jumps[gi[b]]));
  std::sort(eps.begin(), eps.end());
  eps.erase(std::unique(eps.begin(), eps.end()), eps.end());
  const double inf = std::numeric_limits<double>::infinity();
  // Segment costs do not depend on eps; memoise them lazily.
  const std::size_t na = nf * ng;
  std::vector<double> seg_from_start(na, -1), seg_to_end(na, -1), seg(na * na, -1);
  for (double e : eps) {
    if (e >= best) break;
    std::vector<double> dp(na, inf);
    double fin = inf;
    for (std::size_t a = 0; a < nf; ++a)
      for (std::size_t b = 0; b < ng; ++b) {
        const std::size_t id = a * ng + b;
        if (std::abs(f.jumps[fi[a]] - g.jumps[gi[b]]) > e) continue;
        const auto A = anchor(a, b);
        if (seg_from_start[id] < 0) seg_from_start[id] = detail::segment_mismatch(f, g, start, A, false);
        double v = seg_from_start[id];
        for (std::size_t pa = 0; pa < a; ++pa)
          for (std::size_t pb = 0; pb < b; ++pb) {
            const std::size_t pid = pa * ng + pb;
            if (dp[pid] >= v) continue;
            double& c = seg[pid * na + id];
            if (c < 0) c = detail::segment_mismatch(f, g, anchor(pa, pb), A, false);
            v = std::min(v, std::max(dp[pid], c));
          }
        dp[id] = v;
        if (v < fin) {
          if (seg_to_end[id] < 0) seg_to_end[id] = detail::segment_mismatch(f, g, A, end, true);
          fin = std::min(fin, std::max(v, seg_to_end[id]));
        }
      }
    best = std::min(best, e + fin);
  }
  return best;
}

inline double d_J1(const StepFunction& f, const StepFunction& g, double T_max, int grid = 64) {
  // T -> d_J1^T is not a step function in general; the outer integral is a
  // right-endpoint Riemann sum on a uniform grid.
  double acc = 0.0;
  for (int i = 0; i < grid; ++i) {
    const double a = T_max * i / grid, b = T_max * (i + 1) / grid;
    acc += std::min(1.0, d_J1_T(f, g, b)) * (std::exp(-a) - std::exp(-b));
  }
  return acc;
}

namespace detail {

/// Sample points along the completed graph of a monotone step function on
/// [0, T]: horizontal runs and vertical jump segments, spacing at most h in
/// each coordinate, all vertices included.
inline std::vector<std::pair<double, double>> completed_graph(const StepFunction& f, double T, double h) {
  std::vector<std::pair<double, double>> p;
  auto add_segment = [&](double t0, double x0, double t1, double x1) {
    const double span = std::max(std::abs(t1 - t0), std::abs(x1 - x0));
    const int m = std::max(1, static_cast<int>(std::ceil(span / h)));
    for (int i = 1; i <= m; ++i) {
      const double r = static_cast<double>(i) / m;
      p.emplace_back(t0 + r * (t1 - t0), x0 + r * (x1 - x0));
    }
  };
  double t = 0.0, x = f.t0_value;
  p.emplace_back(t, x);
  for (std::size_t k = 0; k < f.jumps.size() && f.jumps[k] <= T; ++k) {
    const double tj = f.jumps[k];
    if (tj > t) add_segment(t, x, tj, x);
    add_segment(tj, x, tj, f.values[k]);
    t = tj;
    x = f.values[k];
  }
  if (T > t) add_segment(t, x, T, x);
  return p;
}

}  // namespace detail

/// M1 distance on [0, T] for monotone step functions, as an upper-bound
/// surrogate: both completed graphs are discretised at resolution h (default
/// 1e-3 T), coupled by a discrete Frechet sweep minimising the largest
/// |du| + |dv|, and the coupling is scored with sup|du| + sup|dv| as in the
/// definition. The J1 and uniform values are also admissible couplings, so the
/// minimum of the three is returned.
inline double d_M1_T(const StepFunction& f, const StepFunction& g, double T, double resolution = 0.0,
                     bool with_j1 = true) {
  if (!f.monotone() || !g.monotone()) throw DomainError("d_M1_T: inputs must be monotone");
  if (!(T > 0)) throw ParameterError("d_M1_T: T must be > 0");
  const double h = resolution > 0 ? resolution : 1e-3 * T;
  const auto P = detail::completed_graph(f, T, h), Q = detail::completed_graph(g, T, h);
  const std::size_t n = P.size(), m = Q.size();
  auto cost = [&](std::size_t i, std::size_t j) {
    return std::abs(P[i].first - Q[j].first) + std::abs(P[i].second - Q[j].second);
  };
  // Frechet DP with back-pointers to recover the coupling.
  std::vector<float> D(n * m);
  std::vector<unsigned char> from(n * m, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double c = cost(i, j);
      double best;
      unsigned char fr = 0;
      if (i == 0 && j == 0) {
        best = c;
      } else {
        best = std::numeric_limits<double>::infinity();
        if (i > 0 && D[(i - 1) * m + j] < best) best = D[(i - 1) * m + j], fr = 1;
        if (j > 0 && D[i * m + j - 1] < best) best = D[i * m + j - 1], fr = 2;
        if (i > 0 && j > 0 && D[(i - 1) * m + j - 1] <= best) best = D[(i - 1) * m + j - 1], fr = 3;
        best = std::max(best, c);
      }
      D[i * m + j] = static_cast<float>(best);
      from[i * m + j] = fr;
    }
  double su = 0, sv = 0;
  for (std::size_t i = n - 1, j = m - 1;;) {
    su = std::max(su, std::abs(P[i].first - Q[j].first));
    sv = std::max(sv, std::abs(P[i].second - Q[j].second));
    const auto fr = from[i * m + j];
    if (fr == 0) break;
    if (fr == 1) --i;
    else if (fr == 2) --j;
    else --i, --j;
  }
  double r = std::min(su + sv, d_U_T(f, g, T));
  if (with_j1) r = std::min(r, d_J1_T(f, g, T));
  return r;
}

template <class Metric>
double d_vector(Metric&& metric, const std::vector<StepFunction>& f, const std::vector<StepFunction>& g) {
  if (f.size() != g.size()) throw ParameterError("d_vector: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += metric(f[i], g[i]);
  return s;
}

}  // namespace mott
