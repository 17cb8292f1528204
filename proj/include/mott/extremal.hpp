#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "errors.hpp"
#include "io.hpp"
#include "rng.hpp"
#include "step_function.hpp"

namespace mott {

struct PointAtom {
  double x = 0, v = 0;
  bool operator==(const PointAtom&) const = default;
};

/// Atoms of the Poisson measure with intensity v^-2 dx dv on
/// [x_min, x_max] x (v_floor, inf).
struct PointMeasure {
  std::vector<PointAtom> atoms;  // in decreasing v
  double x_min = 0, x_max = 0, v_floor = 0;
  std::uint64_t seed = 0;

  void write_csv(std::ostream& os) const {
    io::CsvWriter w(os);
    w.header({"x", "v"});
    for (const auto& a : atoms) w.row(a.x, a.v);
  }
};

/// With w = 1/v the intensity becomes Lebesgue measure dx dw, so the atoms are
/// generated in increasing w as a Poisson process of rate |x-range| with
/// uniform marks. Lowering v_floor on the same seed only appends atoms.
inline PointMeasure sample_poisson_measure(double x_min, double x_max, double v_floor, std::uint64_t seed) {
  if (!(v_floor > 0)) throw ParameterError("v_floor must be positive");
  if (!(x_max > x_min)) throw ParameterError("empty x range");
  PointMeasure m;
  m.x_min = x_min;
  m.x_max = x_max;
  m.v_floor = v_floor;
  m.seed = seed;
  Rng rng(seed);
  const double len = x_max - x_min, w_max = 1.0 / v_floor;
  double w = 0.0;
  for (;;) {
    w += rng.exponential() / len;
    const double x = x_min + len * rng.uniform();
    if (w >= w_max) break;
    m.atoms.push_back({x, 1.0 / w});
  }
  return m;
}

/// m_+(x) = sup{v : 0 <= x_i <= x}, m_-(x) = sup{v : -x <= x_i <= 0}, as step
/// functions of x >= 0. The value v_floor stands for "no atom above the floor"
/// (censored).
inline StepFunction extremal_process(const PointMeasure& m, bool plus) {
  std::vector<PointAtom> a;
  for (const auto& p : m.atoms)
    if (plus ? p.x >= 0 : p.x <= 0) a.push_back({std::abs(p.x), p.v});
  std::sort(a.begin(), a.end(), [](const PointAtom& l, const PointAtom& r) { return l.x < r.x; });
  StepFunction f(m.v_floor);
  double cur = m.v_floor;
  for (const auto& p : a)
    if (p.v > cur) {
      cur = p.v;
      f.push(p.x, cur);
    }
  return f;
}

struct LimitRecord {
  int k = 0;
  double a = 0, g = 0;  // location (signed) and value
  bool operator==(const LimitRecord&) const = default;
};

struct LimitSideRecords {
  std::vector<LimitRecord> rec;  // increasing k, starting at the lowest k found
  bool censored = false;         // backward chain stopped at v_floor
  bool partial = false;          // forward chain ran out of window before K
};

struct LimitRecordTable {
  double delta = 0;
  int K = 0;
  LimitSideRecords plus, minus;

  void write_csv(std::ostream& os) const {
    io::CsvWriter w(os);
    w.header({"side", "k", "a", "g", "censored_flag"});
    for (int s = 0; s < 2; ++s) {
      const auto& side = s == 0 ? plus : minus;
      for (const auto& r : side.rec)
        w.row(s == 0 ? "+" : "-", r.k, r.a, r.g, side.censored && &r == &side.rec.front());
    }
  }
};

namespace detail {
inline LimitSideRecords limit_side(const PointMeasure& m, bool plus, double delta, int K) {
  std::vector<PointAtom> a;  // |x| on the chosen half line, sorted by distance
  for (const auto& p : m.atoms)
    if (plus ? p.x >= 0 : p.x <= 0) a.push_back({std::abs(p.x), p.v});
  std::sort(a.begin(), a.end(), [](const PointAtom& l, const PointAtom& r) { return l.x < r.x; });
  LimitSideRecords out;
  const double reach = plus ? m.x_max : -m.x_min;
  if (reach < delta) throw ParameterError("records_from_measure: window does not cover [0, delta]");
  std::optional<std::size_t> a0;
  for (std::size_t i = 0; i < a.size() && a[i].x <= delta; ++i)
    if (!a0 || a[i].v > a[*a0].v) a0 = i;
  const double sgn = plus ? 1.0 : -1.0;
  if (!a0) {
    out.censored = true;
    out.partial = true;
    return out;
  }
  std::vector<LimitRecord> back;
  std::size_t cur = *a0;
  for (int k = -1;; --k) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < cur; ++i)
      if (!best || a[i].v > a[*best].v) best = i;
    if (!best) break;
    back.push_back({k, sgn * a[*best].x, a[*best].v});
    cur = *best;
  }
  out.censored = true;  // infinitely many backward records exist below any floor
  std::reverse(back.begin(), back.end());
  out.rec = back;
  out.rec.push_back({0, sgn * a[*a0].x, a[*a0].v});
  cur = *a0;
  for (int k = 1; k <= K; ++k) {
    std::size_t i = cur + 1;
    while (i < a.size() && !(a[i].v > a[cur].v)) ++i;
    if (i == a.size()) {
      out.partial = true;
      break;
    }
    out.rec.push_back({k, sgn * a[i].x, a[i].v});
    cur = i;
  }
  return out;
}
}  // namespace detail

/// a_0 = argmax{v : 0 <= x <= delta}, forward records by first exceedance,
/// backward records by argmax over the shorter prefix, on both half lines.
inline LimitRecordTable records_from_measure(const PointMeasure& m, double delta, int K) {
  if (!(delta > 0)) throw ParameterError("delta must be positive");
  LimitRecordTable t;
  t.delta = delta;
  t.K = K;
  t.plus = detail::limit_side(m, true, delta, K);
  t.minus = detail::limit_side(m, false, delta, K);
  return t;
}

/// Density proportional to exp(2 lambda x) on (a, b), by inverse CDF.
inline double U_lambda_from_uniform(double a, double b, double lambda, double u) {
  if (!(a < b)) throw DomainError("sample_U_lambda: need a < b");
  if (lambda == 0.0) return a + u * (b - a);
  const double c = 2.0 * lambda;
  // x = a + log(1 + u (e^{c(b-a)} - 1)) / c, stable form of the closed formula
  double x = a + std::log1p(u * std::expm1(c * (b - a))) / c;
  return std::clamp(x, a, b);
}

inline double sample_U_lambda(double a, double b, double lambda, Rng& rng) {
  return U_lambda_from_uniform(a, b, lambda, rng.uniform_open());
}

/// Mean of the e^{2 lambda x} density on (a, b).
inline double U_lambda_mean(double a, double b, double lambda) {
  if (lambda == 0.0) return 0.5 * (a + b);
  const double c = 2.0 * lambda, w = b - a;
  // E[x - a] = w e^{cw}/(e^{cw}-1) - 1/c
  return a + w / -std::expm1(-c * w) - 1.0 / c;
}

}  // namespace mott
