#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "io.hpp"
#include "rng.hpp"

namespace mott {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Scaling functions

/// L(u) = exp(log^{1/alpha} u) for u >= 1, and L(u) = u on [0, 1).
inline double slow_vary_L(double u, double alpha) {
  if (u < 1.0) return u;
  return std::exp(std::pow(std::log(u), 1.0 / alpha));
}

/// L^{-1}(u) = exp(log^alpha u) for u >= 1, identity below.
inline double slow_vary_Linv(double u, double alpha) {
  if (u < 1.0) return u;
  return std::exp(std::pow(std::log(u), alpha));
}

/// L evaluated at e^{log_u}; avoids forming resistances that overflow.
inline double L_of_log(double log_u, double alpha) {
  if (log_u < 0.0) return std::exp(log_u);
  return std::exp(std::pow(log_u, 1.0 / alpha));
}

/// log L^{-1}(u).
inline double log_Linv(double u, double alpha) {
  if (u < 1.0) return std::log(u);
  return std::pow(std::log(u), alpha);
}

/// i-th iterate of the natural logarithm, i in {1,2,3}. The third iterate
/// requires n >= 20 so that it is positive; the first two only need to be
/// defined.
inline double iterated_log(int i, double n) {
  if (i < 1 || i > 3) throw DomainError("iterated_log: i must be 1, 2 or 3");
  if (i == 3 && !(n >= 20.0)) throw DomainError("iterated_log: n must be >= 20");
  if (!(n > (i == 1 ? 0.0 : 1.0))) throw DomainError("iterated_log: argument outside the domain");
  double x = n;
  for (int k = 0; k < i; ++k) x = std::log(x);
  return x;
}

/// 2 + floor(1/(alpha-1)).
inline int N_const(double alpha) { return 2 + static_cast<int>(std::floor(1.0 / (alpha - 1.0))); }

// ---------------------------------------------------------------------------
// Environment

/// Palm version of a unit-intensity Poisson process on the line: omega_0 = 0,
/// i.i.d. Exp(1) gaps on either side. Each side draws from its own stream so
/// extending one end never changes atoms already generated on either end.
class Environment {
 public:
  enum class Extent { extendable, frozen, finite };
  using GapSource = std::function<double()>;

  static Environment sample(std::int64_t half_window, double alpha, std::uint64_t seed) {
    check_params(half_window, alpha);
    GapSource right = [rng = Rng(mix64(seed, 1))]() mutable { return rng.exponential(); };
    GapSource left = [rng = Rng(mix64(seed, 2))]() mutable { return rng.exponential(); };
    Environment e(alpha, seed, Extent::extendable, std::move(right), std::move(left));
    e.ensure(-half_window, half_window);
    return e;
  }

  /// Injected gap streams. right() yields omega_1-omega_0, omega_2-omega_1, ...;
  /// left() yields omega_0-omega_{-1}, omega_{-1}-omega_{-2}, ...
  static Environment from_gaps(GapSource right, GapSource left, double alpha, std::int64_t half_window,
                               bool extendable = true) {
    check_params(half_window, alpha);
    Environment e(alpha, 0, Extent::extendable, std::move(right), std::move(left));
    e.ensure(-half_window, half_window);
    if (!extendable) e.freeze();
    return e;
  }

  /// Integer lattice, useful as a deterministic oracle.
  static Environment lattice(double alpha, std::int64_t half_window, bool extendable = true) {
    return from_gaps([] { return 1.0; }, [] { return 1.0; }, alpha, half_window, extendable);
  }

  /// A finite point set containing 0; nothing exists beyond its ends.
  static Environment finite(const std::vector<double>& positions, double alpha) {
    if (!(alpha > 1.0)) throw ParameterError("alpha must be > 1");
    if (positions.empty()) throw ParameterError("finite environment needs atoms");
    for (std::size_t k = 1; k < positions.size(); ++k)
      if (!(positions[k] > positions[k - 1])) throw ParameterError("atoms must be strictly increasing");
    auto zero = std::find(positions.begin(), positions.end(), 0.0);
    if (zero == positions.end()) throw ParameterError("finite environment must contain the atom 0");
    Environment e(alpha, 0, Extent::finite, nullptr, nullptr);
    for (auto it = zero + 1; it != positions.end(); ++it) e.right_.push_back(*it);
    for (auto it = std::make_reverse_iterator(zero); it != positions.rend(); ++it) e.left_.push_back(*it);
    return e;
  }

  double alpha() const noexcept { return alpha_; }
  std::uint64_t seed() const noexcept { return seed_; }
  Extent extent() const noexcept { return extent_; }
  bool extendable() const noexcept { return extent_ == Extent::extendable; }
  bool is_finite() const noexcept { return extent_ == Extent::finite; }

  std::int64_t lo() const noexcept { return 1 - static_cast<std::int64_t>(left_.size()); }
  std::int64_t hi() const noexcept { return static_cast<std::int64_t>(right_.size()) - 1; }
  bool contains(std::int64_t i) const noexcept { return i >= lo() && i <= hi(); }

  /// Unchecked position.
  double pos(std::int64_t i) const noexcept {
    return i >= 0 ? right_[static_cast<std::size_t>(i)] : left_[static_cast<std::size_t>(-i)];
  }
  double operator[](std::int64_t i) const noexcept { return pos(i); }

  double at(std::int64_t i) const {
    if (!contains(i)) throw WindowExhausted("atom outside environment window", i);
    return pos(i);
  }

  /// Make indices lo..hi available, extending if allowed.
  void ensure(std::int64_t lo_req, std::int64_t hi_req) {
    if (hi_req > hi()) grow(right_, right_src_, hi_req, +1.0);
    if (lo_req < lo()) grow(left_, left_src_, -lo_req, -1.0);
  }
  void ensure_index(std::int64_t i) { ensure(std::min<std::int64_t>(i, 0), std::max<std::int64_t>(i, 0)); }

  /// Right-edge gap omega_{j+1} - omega_j.
  double gap(std::int64_t j) const { return at(j + 1) - at(j); }

  /// Drop the generators; the current window becomes all there is to query.
  void freeze() {
    if (extent_ == Extent::extendable) extent_ = Extent::frozen;
    right_src_ = nullptr;
    left_src_ = nullptr;
  }

  /// Image under x -> -x; index i of the result is index -i of this one.
  Environment mirrored() const {
    Environment m = *this;
    std::swap(m.right_, m.left_);
    std::swap(m.right_src_, m.left_src_);
    for (auto& x : m.right_) x = -x;
    for (auto& x : m.left_) x = -x;
    m.right_[0] = 0.0;
    m.left_[0] = 0.0;
    return m;
  }

  void write_csv(std::ostream& os) const {
    io::CsvWriter w(os);
    w.header({"index", "position"});
    for (std::int64_t i = lo(); i <= hi(); ++i) w.row(i, pos(i));
  }

  /// Reads a dump produced by write_csv; the result is finite.
  static Environment read_csv(std::istream& is, double alpha) {
    std::string line;
    std::getline(is, line);
    if (line.rfind("index,position", 0) != 0) throw ParameterError("environment CSV: missing header");
    std::vector<double> xs;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      auto f = io::split(line);
      if (f.size() != 2) throw ParameterError("environment CSV: expected 2 columns");
      xs.push_back(io::parse_double(f[1]));
    }
    return finite(xs, alpha);
  }

 private:
  Environment(double alpha, std::uint64_t seed, Extent extent, GapSource right, GapSource left)
      : alpha_(alpha), seed_(seed), extent_(extent), right_src_(std::move(right)), left_src_(std::move(left)) {}

  static void check_params(std::int64_t half_window, double alpha) {
    if (half_window < 1) throw ParameterError("half_window must be >= 1");
    if (!(alpha > 1.0)) throw ParameterError("alpha must be > 1");
  }

  void grow(std::vector<double>& side, GapSource& src, std::int64_t target, double sign) {
    if (!src) throw WindowExhausted("environment window exhausted", static_cast<std::int64_t>(sign) * target);
    // Geometric growth keeps repeated one-step extensions cheap; the stream is
    // sequential so the chunking is invisible in the atoms.
    std::int64_t cur = static_cast<std::int64_t>(side.size()) - 1;
    std::int64_t goal = std::max(target, cur + cur / 2 + 16);
    side.reserve(static_cast<std::size_t>(goal + 1));
    while (cur < goal) {
      double g = src();
      if (!(g > 0.0)) throw ParameterError("gap source produced a non-positive gap");
      side.push_back(side.back() + sign * g);
      ++cur;
    }
  }

  double alpha_;
  std::uint64_t seed_;
  Extent extent_;
  std::vector<double> right_{0.0};  // right_[k] = omega_k
  std::vector<double> left_{0.0};   // left_[k] = omega_{-k}
  GapSource right_src_;
  GapSource left_src_;
};

// ---------------------------------------------------------------------------
// Conductances

/// c(omega_i, omega_j) = exp(-|omega_i - omega_j|^alpha + lambda_eff (omega_i + omega_j)).
inline double conductance(const Environment& env, std::int64_t i, std::int64_t j, double lambda_eff) {
  if (i == j) throw DomainError("conductance: i == j (self-conductance is zero by convention)");
  const double a = env.at(i), b = env.at(j);
  return std::exp(-std::pow(std::abs(a - b), env.alpha()) + lambda_eff * (a + b));
}

/// log r^{alpha,0}(omega_j, omega_{j+1}) = gap^alpha.
inline double log_resistance_nn(const Environment& env, std::int64_t j) {
  return std::pow(env.gap(j), env.alpha());
}

/// r^{alpha,0}(omega_j, omega_{j+1}) = exp(gap^alpha); may overflow to inf for
/// large alpha, use log_resistance_nn there.
inline double resistance_nn(const Environment& env, std::int64_t j) { return std::exp(log_resistance_nn(env, j)); }

/// Upper bound on int_{s0}^inf exp(-s^alpha + a s) ds from convexity of
/// h(s) = s^alpha - a s: the integral is at most exp(-h(s0)) / h'(s0).
inline double tail_integral_bound(double s0, double alpha, double abs_lambda) {
  if (!(s0 > 0.0)) return kInf;
  const double hp = alpha * std::pow(s0, alpha - 1.0) - abs_lambda;
  if (!(hp > 0.0)) return kInf;
  return std::exp(-(std::pow(s0, alpha) - abs_lambda * s0)) / hp;
}

/// Certified truncation of the neighbourhood sum around atom i.
///
/// Beyond the last retained atom at distance D the omitted weights are
/// exp(-s^alpha +- lambda s) (times the common factor exp(2 lambda omega_i)).
/// For a Poisson environment the conditional mean of that mass given the
/// retained atoms is the integral from D; for unit-spaced injections the sum is
/// dominated by the same integral. We compare against the integral from D-1,
/// which covers both with margin, and require it below tail_tol/2 of the
/// retained mass on each side.
struct Neighbourhood {
  std::int64_t left_radius = 0;
  std::int64_t right_radius = 0;
  double retained = 0.0;    // sum of c(omega_i, omega_j) over retained j
  double tail_bound = 0.0;  // certified bound on the omitted mass
};

inline Neighbourhood certified_neighbourhood(Environment& env, std::int64_t i, double lambda_eff, double tail_tol) {
  if (!(tail_tol > 0.0)) throw ParameterError("tail_tol must be > 0");
  const double alpha = env.alpha();
  const double abs_l = std::abs(lambda_eff);
  env.ensure_index(i);
  const double xi = env.pos(i);
  const double scale = std::exp(2.0 * lambda_eff * xi);

  Neighbourhood nb;
  bool right_done = false, left_done = false;
  double right_bound = kInf, left_bound = kInf;
  auto add_right = [&](std::int64_t w) {
    const std::int64_t j = i + w;
    if (!env.contains(j)) {
      if (env.is_finite()) return false;
      env.ensure_index(j);
    }
    const double x = env.pos(j);
    nb.retained += std::exp(-std::pow(x - xi, alpha) + lambda_eff * (x + xi));
    nb.right_radius = w;
    return true;
  };
  auto add_left = [&](std::int64_t w) {
    const std::int64_t j = i - w;
    if (!env.contains(j)) {
      if (env.is_finite()) return false;
      env.ensure_index(j);
    }
    const double x = env.pos(j);
    nb.retained += std::exp(-std::pow(xi - x, alpha) + lambda_eff * (x + xi));
    nb.left_radius = w;
    return true;
  };

  for (std::int64_t w = 1; w <= 2; ++w) {
    if (!right_done && !add_right(w)) right_done = true;
    if (!left_done && !add_left(w)) left_done = true;
  }
  for (;;) {
    right_bound = right_done ? 0.0
                             : scale * tail_integral_bound(env.pos(i + nb.right_radius) - xi - 1.0, alpha, abs_l);
    left_bound = left_done ? 0.0 : scale * tail_integral_bound(xi - env.pos(i - nb.left_radius) - 1.0, alpha, abs_l);
    const double budget = 0.5 * tail_tol * nb.retained;
    const bool r_ok = right_bound <= budget, l_ok = left_bound <= budget;
    if (r_ok && l_ok) break;
    if (!r_ok && !add_right(nb.right_radius + 1)) right_done = true;
    if (!l_ok && !add_left(nb.left_radius + 1)) left_done = true;
  }
  nb.tail_bound = right_bound + left_bound;
  return nb;
}

/// c(omega_i) = sum_j c(omega_i, omega_j), truncated with a certified tail.
inline double total_conductance(Environment& env, std::int64_t i, double lambda_eff, double tail_tol = 1e-12) {
  return certified_neighbourhood(env, i, lambda_eff, tail_tol).retained;
}

/// Atoms of mu_n = sum_k n^{-1} c(omega_k) delta_{omega_k / n} for k in [k_lo, k_hi].
struct DiscreteMeasure {
  std::vector<double> x;
  std::vector<double> mass;
  double total() const {
    double s = 0.0;
    for (double m : mass) s += m;
    return s;
  }
};

inline DiscreteMeasure empirical_invariant_measure(Environment& env, double n, double lambda_eff, std::int64_t k_lo,
                                                   std::int64_t k_hi, double tail_tol = 1e-12) {
  if (k_lo > k_hi) throw ParameterError("empty index range");
  DiscreteMeasure m;
  m.x.reserve(static_cast<std::size_t>(k_hi - k_lo + 1));
  m.mass.reserve(m.x.capacity());
  for (std::int64_t k = k_lo; k <= k_hi; ++k) {
    const double c = total_conductance(env, k, lambda_eff, tail_tol);
    m.x.push_back(env.pos(k) / n);
    m.mass.push_back(c / n);
  }
  return m;
}

/// The same measure restricted to rescaled positions in [a, b].
inline DiscreteMeasure empirical_invariant_measure_on(Environment& env, double n, double lambda_eff, double a,
                                                      double b, double tail_tol = 1e-12) {
  if (!(a <= b)) throw ParameterError("empty range");
  std::int64_t k_hi = 0, k_lo = 0;
  while (true) {
    env.ensure_index(k_hi + 1);
    if (env.pos(k_hi + 1) / n > b) break;
    ++k_hi;
  }
  while (true) {
    env.ensure_index(k_lo - 1);
    if (env.pos(k_lo - 1) / n < a) break;
    --k_lo;
  }
  DiscreteMeasure m = empirical_invariant_measure(env, n, lambda_eff, k_lo, k_hi, tail_tol);
  DiscreteMeasure out;
  for (std::size_t k = 0; k < m.x.size(); ++k)
    if (m.x[k] >= a && m.x[k] <= b) {
      out.x.push_back(m.x[k]);
      out.mass.push_back(m.mass[k]);
    }
  return out;
}

/// E c^{alpha,0}(omega_0) = int exp(-|x|^alpha) dx = 2 Gamma(1 + 1/alpha).
inline double mean_total_conductance(double alpha) { return 2.0 * std::tgamma(1.0 + 1.0 / alpha); }

}  // namespace mott
