#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "errors.hpp"

namespace mott {

/// Right-continuous piecewise-constant path on [0, inf):
///   f(t) = t0_value for t < jumps[0], f(t) = values[k] on [jumps[k], jumps[k+1]).
/// Jump times strictly increase. Jumps to an equal value are allowed (they
/// are harmless for every metric) but the builders below never emit them.
struct StepFunction {
  double t0_value = 0.0;
  std::vector<double> jumps;
  std::vector<double> values;

  StepFunction() = default;
  explicit StepFunction(double v0) : t0_value(v0) {}
  StepFunction(double v0, std::vector<double> t, std::vector<double> v)
      : t0_value(v0), jumps(std::move(t)), values(std::move(v)) {
    validate();
  }

  void validate() const {
    if (jumps.size() != values.size()) throw ParameterError("StepFunction: jumps/values size mismatch");
    for (std::size_t k = 1; k < jumps.size(); ++k)
      if (!(jumps[k] > jumps[k - 1])) throw ParameterError("StepFunction: jump times must strictly increase");
    if (!jumps.empty() && !(jumps[0] >= 0.0)) throw ParameterError("StepFunction: negative jump time");
  }

  /// Append a jump; drops it if the value does not change, merges equal times.
  void push(double t, double v) {
    const double last = values.empty() ? t0_value : values.back();
    if (!jumps.empty() && t == jumps.back()) {
      values.back() = v;
      if (values.size() >= 2 ? values[values.size() - 2] == v : t0_value == v) {
        jumps.pop_back();
        values.pop_back();
      }
      return;
    }
    if (v == last) return;
    jumps.push_back(t);
    values.push_back(v);
  }

  double operator()(double t) const {
    auto it = std::upper_bound(jumps.begin(), jumps.end(), t);
    if (it == jumps.begin()) return t0_value;
    return values[static_cast<std::size_t>(it - jumps.begin()) - 1];
  }

  /// Value just before t.
  double left_limit(double t) const {
    auto it = std::lower_bound(jumps.begin(), jumps.end(), t);
    if (it == jumps.begin()) return t0_value;
    return values[static_cast<std::size_t>(it - jumps.begin()) - 1];
  }

  std::size_t size() const noexcept { return jumps.size(); }
  double final_value() const noexcept { return values.empty() ? t0_value : values.back(); }

  bool nondecreasing() const noexcept {
    double prev = t0_value;
    for (double v : values) {
      if (v < prev) return false;
      prev = v;
    }
    return true;
  }
  bool nonincreasing() const noexcept {
    double prev = t0_value;
    for (double v : values) {
      if (v > prev) return false;
      prev = v;
    }
    return true;
  }
  bool monotone() const noexcept { return nondecreasing() || nonincreasing(); }

  /// The path restricted to [0, T] (jumps after T dropped).
  StepFunction truncated(double T) const {
    StepFunction g(t0_value);
    for (std::size_t k = 0; k < jumps.size() && jumps[k] <= T; ++k) {
      g.jumps.push_back(jumps[k]);
      g.values.push_back(values[k]);
    }
    return g;
  }

  /// Pointwise map of values.
  template <class F>
  StepFunction map(F&& f) const {
    StepFunction g(f(t0_value));
    g.jumps = jumps;
    g.values.reserve(values.size());
    for (double v : values) g.values.push_back(f(v));
    return g;
  }

  bool operator==(const StepFunction&) const = default;
};

/// Right-continuous inverse inf{x >= 0 : f(x) > t} of a nondecreasing step
/// function; +inf when f never exceeds t.
inline double inverse_step(const StepFunction& f, double t) {
  if (!f.nondecreasing()) throw DomainError("inverse_step: input is not nondecreasing");
  if (f.t0_value > t) return 0.0;
  auto it = std::upper_bound(f.values.begin(), f.values.end(), t);
  if (it == f.values.end()) return std::numeric_limits<double>::infinity();
  return f.jumps[static_cast<std::size_t>(it - f.values.begin())];
}

/// The whole inverse t -> inf{x : f(x) > t} as a step function of t (valid
/// for t >= 0; t0_value is the inverse at t = 0). Values beyond the last level
/// of f are +inf, so callers usually truncate at a horizon first.
inline StepFunction inverse_path(const StepFunction& f) {
  if (!f.nondecreasing()) throw DomainError("inverse_path: input is not nondecreasing");
  // Levels where f takes a value; the inverse jumps exactly at those values.
  StepFunction g(inverse_step(f, 0.0));
  std::vector<double> levels;
  levels.push_back(f.t0_value);
  for (double v : f.values) levels.push_back(v);
  for (double lv : levels) {
    if (lv < 0.0) continue;
    const double x = inverse_step(f, lv);
    g.push(lv, x);
  }
  return g;
}

}  // namespace mott
