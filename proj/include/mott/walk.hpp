#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <bit>
#include <cstring>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "env.hpp"
#include "records.hpp"
#include "rng.hpp"
#include "step_function.hpp"

namespace mott {

struct WalkConfig {
  double alpha = 0.0;  // 0: take it from the environment; otherwise must match
  double lambda_eff = 0.0;
  double tail_tol = 1e-12;
  std::uint64_t max_steps = std::numeric_limits<std::uint64_t>::max();
  double max_time = kInf;
  std::uint64_t seed = 0;
  std::int64_t start = 0;

  void validate(const Environment& env) const {
    if (alpha != 0.0 && alpha != env.alpha()) throw ParameterError("WalkConfig.alpha differs from the environment");
    if (!(tail_tol > 0.0 && tail_tol <= 1e-6)) throw ParameterError("tail_tol must lie in (0, 1e-6]");
    if (max_steps == 0) throw ParameterError("max_steps must be positive");
    if (!(max_time > 0.0)) throw ParameterError("max_time must be positive");
  }
};

enum class Terminal { time_budget, step_budget, stop_condition };

inline const char* terminal_name(Terminal t) {
  switch (t) {
    case Terminal::time_budget: return "time-budget";
    case Terminal::step_budget: return "step-budget";
    default: return "stop-condition";
  }
}

struct JumpDistribution {
  std::vector<std::int64_t> targets;
  std::vector<double> probs;
  double omitted_bound = 0.0;  // certified bound on the truncated relative mass
};

/// Per-site inverse-CDF tables, built on first visit. The environment never
/// changes under a cache, so tables are never rebuilt. One cache belongs to
/// one (environment, lambda_eff, tail_tol) triple and one thread at a time.
class KernelCache {
 public:
  KernelCache(double lambda_eff = 0.0, double tail_tol = 1e-12) : lambda_(lambda_eff), tol_(tail_tol) {}

  double lambda_eff() const noexcept { return lambda_; }
  double tail_tol() const noexcept { return tol_; }
  std::size_t sites() const noexcept { return slots_.size(); }

  /// Next site from i given a uniform u in [0, 1).
  std::int64_t sample(Environment& env, std::int64_t i, double u) {
    const Slot& s = slot(env, i);
    const double* first = cdf_.data() + s.offset;
    const double* hit = std::upper_bound(first, first + s.length, u);
    if (hit == first + s.length) --hit;  // u rounding against a last entry of exactly 1
    return i + delta_[s.offset + static_cast<std::size_t>(hit - first)];
  }

  JumpDistribution distribution(Environment& env, std::int64_t i) {
    const Slot& s = slot(env, i);
    JumpDistribution d;
    double prev = 0.0;
    for (std::uint32_t k = 0; k < s.length; ++k) {
      d.targets.push_back(i + delta_[s.offset + k]);
      d.probs.push_back(cdf_[s.offset + k] - prev);
      prev = cdf_[s.offset + k];
    }
    d.omitted_bound = s.omitted;
    return d;
  }

 private:
  struct Slot {
    std::size_t offset = 0;
    std::uint32_t length = 0;
    double omitted = 0.0;
  };

  const Slot& slot(Environment& env, std::int64_t i) {
    std::vector<std::int32_t>& table = i >= 0 ? right_ : left_;
    const auto key = static_cast<std::size_t>(i >= 0 ? i : -i);
    if (key < table.size() && table[key] >= 0) return slots_[static_cast<std::size_t>(table[key])];
    return build(env, i, table, key);
  }

  const Slot& build(Environment& env, std::int64_t i, std::vector<std::int32_t>& table, std::size_t key) {
    const Neighbourhood nb = certified_neighbourhood(env, i, lambda_, tol_);
    if (nb.left_radius + nb.right_radius == 0) throw DomainError("isolated atom: no jump targets");
    const double alpha = env.alpha(), xi = env.pos(i);
    Slot s;
    s.offset = cdf_.size();
    s.omitted = nb.tail_bound / nb.retained;
    double acc = 0.0;
    for (std::int64_t j = i - nb.left_radius; j <= i + nb.right_radius; ++j) {
      if (j == i) continue;
      const double x = env.pos(j);
      acc += std::exp(-std::pow(std::abs(x - xi), alpha) + lambda_ * (x + xi));
      cdf_.push_back(acc);
      delta_.push_back(static_cast<std::int32_t>(j - i));
    }
    s.length = static_cast<std::uint32_t>(cdf_.size() - s.offset);
    for (std::size_t k = s.offset; k < cdf_.size(); ++k) cdf_[k] /= acc;
    cdf_.back() = 1.0;
    if (key >= table.size()) table.resize(std::max(key + 1, table.size() * 2), -1);
    table[key] = static_cast<std::int32_t>(slots_.size());
    slots_.push_back(s);
    return slots_.back();
  }

  double lambda_;
  double tol_;
  std::vector<double> cdf_;
  std::vector<std::int32_t> delta_;
  std::vector<std::int32_t> right_, left_;
  std::vector<Slot> slots_;
};

/// Transition probabilities c(omega_i, omega_j) / c(omega_i) over the certified window.
inline JumpDistribution jump_distribution(Environment& env, std::int64_t i, const WalkConfig& cfg) {
  cfg.validate(env);
  KernelCache k(cfg.lambda_eff, cfg.tail_tol);
  return k.distribution(env, i);
}

struct WalkOutcome {
  Terminal reason = Terminal::stop_condition;
  double end_time = 0.0;  // time at which the run stopped (max_time on a time budget)
  std::uint64_t steps = 0;
  std::int64_t final_index = 0;
};

/// Constant-speed walk: Exp(1) holding times, jumps drawn from the cached
/// kernel. obs(time, index) sees the initial state and every jump; stop(time,
/// index) is checked right after each observation. Time is accumulated with
/// compensated summation.
template <class Observer, class Stop>
WalkOutcome simulate(Environment& env, KernelCache& cache, const WalkConfig& cfg, Observer&& obs, Stop&& stop) {
  cfg.validate(env);
  if (cache.lambda_eff() != cfg.lambda_eff || cache.tail_tol() != cfg.tail_tol)
    throw ParameterError("kernel cache built for a different drift or tolerance");
  env.ensure_index(cfg.start);
  Rng rng(cfg.seed);
  double t = 0.0, comp = 0.0;
  std::int64_t i = cfg.start;
  std::uint64_t steps = 0;
  obs(0.0, i);
  if (stop(0.0, i)) return {Terminal::stop_condition, 0.0, 0, i};
  const std::uint64_t max_steps = cfg.max_steps;
  const double max_time = cfg.max_time;
  for (;;) {
    if (steps >= max_steps) return {Terminal::step_budget, t, steps, i};
    const double y = rng.exponential() - comp;
    const double tn = t + y;
    comp = (tn - t) - y;
    if (tn > max_time) return {Terminal::time_budget, max_time, steps, i};
    i = cache.sample(env, i, rng.uniform());
    t = tn;
    ++steps;
    obs(t, i);
    if (stop(t, i)) return {Terminal::stop_condition, t, steps, i};
  }
}

template <class Observer>
WalkOutcome simulate(Environment& env, KernelCache& cache, const WalkConfig& cfg, Observer&& obs) {
  return simulate(env, cache, cfg, std::forward<Observer>(obs), [](double, std::int64_t) { return false; });
}

struct NoObserver {
  void operator()(double, std::int64_t) const noexcept {}
};

// ---------------------------------------------------------------------------
// Trajectories and observers

struct Trajectory {
  std::vector<double> time;
  std::vector<std::int64_t> index;
  Terminal terminal_reason = Terminal::stop_condition;
  double end_time = 0.0;

  std::size_t size() const noexcept { return time.size(); }
  bool operator==(const Trajectory&) const = default;
};

struct TrajectoryRecorder {
  Trajectory* traj;
  void operator()(double t, std::int64_t i) const {
    traj->time.push_back(t);
    traj->index.push_back(i);
  }
};

/// Whole-trajectory convenience wrapper.
template <class Stop>
Trajectory simulate(Environment& env, const WalkConfig& cfg, Stop&& stop) {
  KernelCache cache(cfg.lambda_eff, cfg.tail_tol);
  Trajectory tr;
  WalkOutcome o = simulate(env, cache, cfg, TrajectoryRecorder{&tr}, std::forward<Stop>(stop));
  tr.terminal_reason = o.reason;
  tr.end_time = o.end_time;
  return tr;
}

inline Trajectory simulate(Environment& env, const WalkConfig& cfg) {
  return simulate(env, cfg, [](double, std::int64_t) { return false; });
}

/// Keeps only the events that set a new running maximum or minimum index.
/// This is all that exceedance times, running extrema and barrier crossings
/// depend on.
struct ExtremaRecorder {
  std::vector<double> max_time, min_time;
  std::vector<std::int64_t> max_index, min_index;

  void operator()(double t, std::int64_t i) {
    if (max_index.empty()) {
      max_time.push_back(t);
      max_index.push_back(i);
      min_time.push_back(t);
      min_index.push_back(i);
      return;
    }
    if (i > max_index.back()) {
      max_time.push_back(t);
      max_index.push_back(i);
    } else if (i < min_index.back()) {
      min_time.push_back(t);
      min_index.push_back(i);
    }
  }

  static ExtremaRecorder from(const Trajectory& tr) {
    ExtremaRecorder r;
    for (std::size_t k = 0; k < tr.size(); ++k) r(tr.time[k], tr.index[k]);
    return r;
  }
};

/// Index occupied at each of the given (sorted) times.
struct PositionSampler {
  std::vector<double> times;
  std::vector<std::int64_t> index;  // filled in order; shorter than times if the walk stopped early
  std::int64_t current = 0;

  explicit PositionSampler(std::vector<double> ts) : times(std::move(ts)) {
    if (!std::is_sorted(times.begin(), times.end())) throw ParameterError("PositionSampler: times must be sorted");
  }

  void operator()(double t, std::int64_t i) {
    while (index.size() < times.size() && times[index.size()] < t) index.push_back(current);
    current = i;
  }

  /// Flush the times up to end_time (the walk sat at `current` until then).
  void finish(double end_time) {
    while (index.size() < times.size() && times[index.size()] <= end_time) index.push_back(current);
  }

  bool complete() const { return index.size() == times.size(); }
};

/// Delta^+_x = inf{t : X_t > x} (side plus) or Delta^-_x = inf{t : X_t < -x};
/// nullopt when the trajectory ends first. Levels are actual positions.
inline std::vector<std::optional<double>> exceedance_times(const ExtremaRecorder& ex, const Environment& env,
                                                           const std::vector<double>& levels, Side side) {
  if (!std::is_sorted(levels.begin(), levels.end())) throw ParameterError("levels must be sorted");
  std::vector<std::optional<double>> out;
  const auto& ts = side == Side::plus ? ex.max_time : ex.min_time;
  const auto& is = side == Side::plus ? ex.max_index : ex.min_index;
  std::size_t k = 0;
  for (double x : levels) {
    if (x < 0) throw ParameterError("levels must be nonnegative");
    auto beyond = [&](std::size_t e) {
      const double p = env.pos(is[e]);
      return side == Side::plus ? p > x : p < -x;
    };
    while (k < ts.size() && !beyond(k)) ++k;
    out.push_back(k < ts.size() ? std::optional<double>(ts[k]) : std::nullopt);
  }
  return out;
}

inline std::vector<std::optional<double>> exceedance_times(const Trajectory& tr, const Environment& env,
                                                           const std::vector<double>& levels, Side side) {
  return exceedance_times(ExtremaRecorder::from(tr), env, levels, side);
}

/// Running supremum and infimum of the position as step functions of time.
inline std::pair<StepFunction, StepFunction> running_extrema(const ExtremaRecorder& ex, const Environment& env) {
  if (ex.max_index.empty()) throw ParameterError("running_extrema: empty trajectory");
  StepFunction hi(env.pos(ex.max_index[0])), lo(env.pos(ex.min_index[0]));
  for (std::size_t k = 1; k < ex.max_time.size(); ++k) hi.push(ex.max_time[k], env.pos(ex.max_index[k]));
  for (std::size_t k = 1; k < ex.min_time.size(); ++k) lo.push(ex.min_time[k], env.pos(ex.min_index[k]));
  return {hi, lo};
}

inline std::pair<StepFunction, StepFunction> running_extrema(const Trajectory& tr, const Environment& env) {
  return running_extrema(ExtremaRecorder::from(tr), env);
}

struct CrossingTimes {
  int k = 0;
  std::optional<double> alpha_plus, beta_plus;    // first X >= omega_{a_k^+}, X >= omega_{a_k^+ + 1}
  std::optional<double> alpha_minus, beta_minus;  // mirrored: X <= omega_{a_k^-}, X <= omega_{a_k^- - 1}
};

inline std::vector<CrossingTimes> crossing_times(const ExtremaRecorder& ex, const RecordTable& table) {
  auto first_at_least = [&](std::int64_t idx) -> std::optional<double> {
    auto it = std::lower_bound(ex.max_index.begin(), ex.max_index.end(), idx);
    if (it == ex.max_index.end()) return std::nullopt;
    return ex.max_time[static_cast<std::size_t>(it - ex.max_index.begin())];
  };
  auto first_at_most = [&](std::int64_t idx) -> std::optional<double> {
    for (std::size_t k = 0; k < ex.min_index.size(); ++k)
      if (ex.min_index[k] <= idx) return ex.min_time[k];
    return std::nullopt;
  };
  std::vector<CrossingTimes> out;
  for (int k = 1; k <= table.K; ++k) {
    CrossingTimes c;
    c.k = k;
    c.alpha_plus = first_at_least(table.plus(k).index);
    c.beta_plus = first_at_least(table.plus(k).index + 1);
    c.alpha_minus = first_at_most(table.minus(k).index);
    c.beta_minus = first_at_most(table.minus(k).index - 1);
    out.push_back(c);
  }
  return out;
}

inline std::vector<CrossingTimes> crossing_times(const Trajectory& tr, const RecordTable& table) {
  return crossing_times(ExtremaRecorder::from(tr), table);
}

// ---------------------------------------------------------------------------
// Excursions on the auxiliary network

struct ExcursionReport {
  std::vector<double> sigma, tau;  // tau[i] = inf when not reached; sigma[i] likewise
  int G = 0;
  std::optional<double> S;  // S_{G-1} = tau(G-1) - tau(0), defined for G >= 1
  double Delta = kInf;
  bool partial = false;  // trajectory ended before hitting the boundary
};

/// sigma/tau decomposition of a trajectory of vertex labels. tau(i) is the
/// first visit to `top` after sigma(i), sigma(i+1) the first visit to
/// `bottom` after tau(i), both restricted to [0, Delta] where Delta is the
/// first hit of {left, right}.
inline ExcursionReport excursion_decomposition(const std::vector<double>& time, const std::vector<std::int64_t>& label,
                                               std::int64_t bottom, std::int64_t top, std::int64_t left,
                                               std::int64_t right) {
  ExcursionReport r;
  std::size_t end = time.size();
  for (std::size_t k = 0; k < time.size(); ++k)
    if (label[k] == left || label[k] == right) {
      r.Delta = time[k];
      end = k;
      break;
    }
  r.partial = end == time.size();
  r.sigma.push_back(0.0);
  std::size_t k = 0;
  for (;;) {
    while (k < end && label[k] != top) ++k;
    if (k == end) {
      r.tau.push_back(kInf);
      break;
    }
    r.tau.push_back(time[k]);
    while (k < end && label[k] != bottom) ++k;
    if (k == end) {
      r.sigma.push_back(kInf);
      r.tau.push_back(kInf);
      break;
    }
    r.sigma.push_back(time[k]);
  }
  r.G = 0;
  while (r.tau[static_cast<std::size_t>(r.G)] != kInf) ++r.G;
  if (r.G >= 1) r.S = r.tau[static_cast<std::size_t>(r.G - 1)] - r.tau[0];
  return r;
}

// ---------------------------------------------------------------------------
// Export

/// Little-endian frame: u64 count, then (f64 time, i64 index) pairs.
inline void write_binary(std::ostream& os, const Trajectory& tr) {
  static_assert(sizeof(double) == 8);
  auto put = [&](const void* p) {
    unsigned char b[8];
    std::memcpy(b, p, 8);
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + 8);
    os.write(reinterpret_cast<const char*>(b), 8);
  };
  const std::uint64_t n = tr.size();
  put(&n);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    put(&tr.time[k]);
    put(&tr.index[k]);
  }
}

inline Trajectory read_binary(std::istream& is) {
  auto get = [&](void* p) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw ParameterError("truncated trajectory frame");
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + 8);
    std::memcpy(p, b, 8);
  };
  std::uint64_t n = 0;
  get(&n);
  Trajectory tr;
  tr.time.resize(n);
  tr.index.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    get(&tr.time[k]);
    get(&tr.index[k]);
  }
  return tr;
}

/// CSV (time, index, position). With every > 1 only every m-th event is kept,
/// plus each event that sets a new running extremum.
inline void write_csv(std::ostream& os, const Trajectory& tr, const Environment& env, std::uint64_t every = 1) {
  io::CsvWriter w(os);
  w.header({"time", "index", "position"});
  std::int64_t hi = std::numeric_limits<std::int64_t>::min(), lo = std::numeric_limits<std::int64_t>::max();
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const std::int64_t i = tr.index[k];
    const bool extreme = i > hi || i < lo;
    hi = std::max(hi, i);
    lo = std::min(lo, i);
    if (extreme || every <= 1 || k % every == 0 || k + 1 == tr.size()) w.row(tr.time[k], i, env.pos(i));
  }
}

}  // namespace mott
