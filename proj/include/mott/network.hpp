#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "env.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "records.hpp"
#include "rng.hpp"

namespace mott {

/// Labels for the aggregated boundary vertices of the auxiliary network.
inline constexpr std::int64_t kLeftLabel = std::numeric_limits<std::int64_t>::min();
inline constexpr std::int64_t kRightLabel = std::numeric_limits<std::int64_t>::max();

inline std::string label_name(std::int64_t l) {
  if (l == kLeftLabel) return "LEFT";
  if (l == kRightLabel) return "RIGHT";
  return std::to_string(l);
}

/// Finite electrical network with vertex measure. The associated chain has
/// generator Q_xy = C_xy / mu_x, reversible with respect to mu.
struct WeightedNetwork {
  std::vector<std::int64_t> labels;
  Eigen::MatrixXd C;
  Eigen::VectorXd mu;

  WeightedNetwork() = default;
  WeightedNetwork(std::vector<std::int64_t> l, Eigen::MatrixXd c, Eigen::VectorXd m)
      : labels(std::move(l)), C(std::move(c)), mu(std::move(m)) {
    validate();
  }

  /// mu = row sums of C (the walk then has unit-rate holding times).
  static WeightedNetwork with_row_sum_measure(Eigen::MatrixXd c) {
    const auto n = c.rows();
    std::vector<std::int64_t> l(static_cast<std::size_t>(n));
    std::iota(l.begin(), l.end(), 0);
    Eigen::VectorXd m = c.rowwise().sum();
    return WeightedNetwork(std::move(l), std::move(c), std::move(m));
  }

  Eigen::Index size() const { return C.rows(); }

  void validate() const {
    const auto n = C.rows();
    if (C.cols() != n || mu.size() != n || static_cast<Eigen::Index>(labels.size()) != n)
      throw ParameterError("network: inconsistent sizes");
    for (Eigen::Index i = 0; i < n; ++i) {
      if (C(i, i) != 0.0) throw ParameterError("network: nonzero diagonal");
      if (!(mu(i) > 0.0)) throw ParameterError("network: mu must be positive");
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!(C(i, j) >= 0.0)) throw ParameterError("network: negative conductance");
        if (C(i, j) != C(j, i)) throw ParameterError("network: asymmetric conductances");
      }
    }
  }

  Eigen::Index find(std::int64_t label) const {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw ParameterError("network: unknown vertex " + label_name(label));
    return static_cast<Eigen::Index>(it - labels.begin());
  }

  Eigen::MatrixXd laplacian() const {
    Eigen::MatrixXd L = -C;
    L.diagonal() = C.rowwise().sum();
    return L;
  }

  Eigen::MatrixXd generator() const {
    Eigen::MatrixXd Q = C;
    for (Eigen::Index i = 0; i < size(); ++i) {
      Q.row(i) /= mu(i);
      Q(i, i) = -C.row(i).sum() / mu(i);
    }
    return Q;
  }

  /// Embedded jump chain.
  Eigen::MatrixXd jump_matrix() const {
    Eigen::MatrixXd P = C;
    for (Eigen::Index i = 0; i < size(); ++i) {
      const double s = C.row(i).sum();
      if (s > 0) P.row(i) /= s;
    }
    return P;
  }

  void write_edges_csv(std::ostream& os) const {
    io::CsvWriter w(os);
    w.header({"u", "v", "conductance"});
    for (Eigen::Index i = 0; i < size(); ++i)
      for (Eigen::Index j = i + 1; j < size(); ++j)
        if (C(i, j) > 0) w.row(label_name(labels[static_cast<std::size_t>(i)]), label_name(labels[static_cast<std::size_t>(j)]), C(i, j));
  }
  void write_vertices_csv(std::ostream& os) const {
    io::CsvWriter w(os);
    w.header({"label", "mu"});
    for (Eigen::Index i = 0; i < size(); ++i) w.row(label_name(labels[static_cast<std::size_t>(i)]), mu(i));
  }
};

/// The constant-speed walk on a finite environment as a network: all
/// pairwise conductances, mu = c(omega_i), labels = atom indices.
inline WeightedNetwork network_from_environment(const Environment& env, double lambda_eff) {
  if (!env.is_finite()) throw ParameterError("network_from_environment: environment must be finite");
  const auto n = static_cast<Eigen::Index>(env.hi() - env.lo() + 1);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  std::vector<std::int64_t> labels;
  for (std::int64_t i = env.lo(); i <= env.hi(); ++i) {
    labels.push_back(i);
    for (std::int64_t j = i + 1; j <= env.hi(); ++j)
      C(i - env.lo(), j - env.lo()) = C(j - env.lo(), i - env.lo()) = conductance(env, i, j, lambda_eff);
  }
  Eigen::VectorXd mu = C.rowwise().sum();
  return WeightedNetwork(std::move(labels), std::move(C), std::move(mu));
}

/// Effective resistance; disconnection is a legitimate outcome, reported as
/// its own state rather than as a float sentinel.
class Resistance {
 public:
  static Resistance finite(double v) { return Resistance(v, false); }
  static Resistance infinite() { return Resistance(0.0, true); }
  bool is_infinite() const noexcept { return inf_; }
  bool is_finite() const noexcept { return !inf_; }
  double value() const {
    if (inf_) throw DomainError("effective resistance is infinite (sets are disconnected)");
    return v_;
  }

 private:
  Resistance(double v, bool inf) : v_(v), inf_(inf) {}
  double v_;
  bool inf_;
};

namespace detail {

inline std::vector<int> components(const Eigen::MatrixXd& C) {
  const auto n = C.rows();
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  int id = 0;
  for (Eigen::Index s = 0; s < n; ++s) {
    if (comp[static_cast<std::size_t>(s)] >= 0) continue;
    std::vector<Eigen::Index> stack{s};
    comp[static_cast<std::size_t>(s)] = id;
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      for (Eigen::Index v = 0; v < n; ++v)
        if (C(u, v) > 0 && comp[static_cast<std::size_t>(v)] < 0) {
          comp[static_cast<std::size_t>(v)] = id;
          stack.push_back(v);
        }
    }
    ++id;
  }
  return comp;
}

inline std::vector<Eigen::Index> resolve(const WeightedNetwork& net, const std::vector<std::int64_t>& labels) {
  std::vector<Eigen::Index> out;
  for (auto l : labels) out.push_back(net.find(l));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline Eigen::VectorXd solve_checked(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  if (A.rows() == 0) return Eigen::VectorXd(0);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd x = lu.solve(b);
  if (!x.allFinite()) throw NumericalFailure("linear solve produced non-finite values");
  const double res = (A * x - b).norm(), scale = A.norm() * x.norm() + b.norm();
  if (res > 1e-8 * std::max(scale, 1e-300)) throw NumericalFailure("linear solve is ill-conditioned");
  return x;
}

struct Partition {
  std::vector<char> in_a, in_b, active;
  bool connected = false;
};

inline Partition partition(const WeightedNetwork& net, const std::vector<Eigen::Index>& A,
                           const std::vector<Eigen::Index>& B) {
  const auto n = net.size();
  Partition p;
  p.in_a.assign(static_cast<std::size_t>(n), 0);
  p.in_b.assign(static_cast<std::size_t>(n), 0);
  p.active.assign(static_cast<std::size_t>(n), 0);
  for (auto a : A) p.in_a[static_cast<std::size_t>(a)] = 1;
  for (auto b : B) {
    if (p.in_a[static_cast<std::size_t>(b)]) throw ParameterError("effective_resistance: A and B must be disjoint");
    p.in_b[static_cast<std::size_t>(b)] = 1;
  }
  auto comp = components(net.C);
  const int ncomp = comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
  std::vector<char> has_a(static_cast<std::size_t>(ncomp), 0), has_b(static_cast<std::size_t>(ncomp), 0);
  for (auto a : A) has_a[static_cast<std::size_t>(comp[static_cast<std::size_t>(a)])] = 1;
  for (auto b : B) has_b[static_cast<std::size_t>(comp[static_cast<std::size_t>(b)])] = 1;
  for (int c = 0; c < ncomp; ++c)
    if (has_a[static_cast<std::size_t>(c)] && has_b[static_cast<std::size_t>(c)]) p.connected = true;
  // Components touching neither set carry no current and would make the
  // Dirichlet problem singular.
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = comp[static_cast<std::size_t>(i)];
    p.active[static_cast<std::size_t>(i)] = has_a[static_cast<std::size_t>(c)] || has_b[static_cast<std::size_t>(c)];
  }
  return p;
}

}  // namespace detail

/// Potential f with f = 0 on A, f = 1 on B, harmonic elsewhere (inactive
/// vertices get NaN).
inline Eigen::VectorXd dirichlet_potential(const WeightedNetwork& net, const std::vector<Eigen::Index>& A,
                                           const std::vector<Eigen::Index>& B) {
  auto p = detail::partition(net, A, B);
  const auto n = net.size();
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < n; ++i)
    if (p.active[static_cast<std::size_t>(i)] && !p.in_a[static_cast<std::size_t>(i)] && !p.in_b[static_cast<std::size_t>(i)])
      free.push_back(i);
  const auto m = static_cast<Eigen::Index>(free.size());
  const Eigen::MatrixXd L = net.laplacian();
  Eigen::MatrixXd Lff(m, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) Lff(r, c) = L(free[static_cast<std::size_t>(r)], free[static_cast<std::size_t>(c)]);
    for (Eigen::Index j = 0; j < n; ++j)
      if (p.in_b[static_cast<std::size_t>(j)]) rhs(r) -= L(free[static_cast<std::size_t>(r)], j);
  }
  Eigen::VectorXd x = detail::solve_checked(Lff, rhs);
  Eigen::VectorXd f = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (p.in_a[static_cast<std::size_t>(i)]) f(i) = 0.0;
    if (p.in_b[static_cast<std::size_t>(i)]) f(i) = 1.0;
  }
  for (Eigen::Index r = 0; r < m; ++r) f(free[static_cast<std::size_t>(r)]) = x(r);
  return f;
}

/// R_eff(A, B) = 1 / min energy, energy = sum over edges c_xy (f_x - f_y)^2.
inline Resistance effective_resistance_idx(const WeightedNetwork& net, const std::vector<Eigen::Index>& A,
                                           const std::vector<Eigen::Index>& B) {
  if (A.empty() || B.empty()) throw ParameterError("effective_resistance: empty vertex set");
  auto p = detail::partition(net, A, B);
  if (!p.connected) return Resistance::infinite();
  Eigen::VectorXd f = dirichlet_potential(net, A, B);
  double energy = 0.0;
  const auto n = net.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!p.active[static_cast<std::size_t>(i)]) continue;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (!p.active[static_cast<std::size_t>(j)] || net.C(i, j) == 0.0) continue;
      const double d = f(i) - f(j);
      energy += net.C(i, j) * d * d;
    }
  }
  if (!(energy > 0.0)) throw NumericalFailure("zero energy between connected sets");
  return Resistance::finite(1.0 / energy);
}

inline Resistance effective_resistance(const WeightedNetwork& net, const std::vector<std::int64_t>& A,
                                       const std::vector<std::int64_t>& B) {
  return effective_resistance_idx(net, detail::resolve(net, A), detail::resolve(net, B));
}

/// Same quantity via unit current flow: A and B are contracted, B grounded,
/// and R is the potential of the unit source.
inline Resistance effective_resistance_current(const WeightedNetwork& net, const std::vector<std::int64_t>& Al,
                                               const std::vector<std::int64_t>& Bl) {
  const auto A = detail::resolve(net, Al), B = detail::resolve(net, Bl);
  if (A.empty() || B.empty()) throw ParameterError("effective_resistance: empty vertex set");
  auto p = detail::partition(net, A, B);
  if (!p.connected) return Resistance::infinite();
  const auto n = net.size();
  // Contracted index map: 0 = A, then the free active vertices; B is ground.
  std::vector<Eigen::Index> map(static_cast<std::size_t>(n), -1);
  Eigen::Index m = 1;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!p.active[static_cast<std::size_t>(i)] || p.in_b[static_cast<std::size_t>(i)]) continue;
    map[static_cast<std::size_t>(i)] = p.in_a[static_cast<std::size_t>(i)] ? 0 : m++;
  }
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!p.active[static_cast<std::size_t>(i)]) continue;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double c = net.C(i, j);
      if (c == 0.0 || !p.active[static_cast<std::size_t>(j)]) continue;
      const auto u = map[static_cast<std::size_t>(i)], v = map[static_cast<std::size_t>(j)];
      if (u == v && u >= 0) continue;  // internal to the contracted A node
      if (u >= 0) L(u, u) += c;
      if (v >= 0) L(v, v) += c;
      if (u >= 0 && v >= 0) {
        L(u, v) -= c;
        L(v, u) -= c;
      }
    }
  }
  Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
  e(0) = 1.0;
  Eigen::VectorXd v = detail::solve_checked(L, e);
  return Resistance::finite(v(0));
}

inline Eigen::VectorXd stationary_vector(const WeightedNetwork& net) { return net.mu / net.mu.sum(); }

struct HittingQuantities {
  double expected_time = 0.0;                // E_start T_{A u B}
  std::optional<double> prob_A_before_B;     // P_start(T_A < T_B) when B is given
};

/// First-step analysis for the chain with generator Q: -Q_FF h = 1 on the
/// non-target set, and a harmonic solve for the competition probability.
inline HittingQuantities hitting_quantities(const WeightedNetwork& net, std::int64_t start,
                                            const std::vector<std::int64_t>& A,
                                            const std::optional<std::vector<std::int64_t>>& B = std::nullopt) {
  if (A.empty()) throw ParameterError("hitting_quantities: empty target");
  const auto n = net.size();
  std::vector<char> target(static_cast<std::size_t>(n), 0), in_a(static_cast<std::size_t>(n), 0);
  for (auto a : detail::resolve(net, A)) target[static_cast<std::size_t>(a)] = in_a[static_cast<std::size_t>(a)] = 1;
  if (B)
    for (auto b : detail::resolve(net, *B)) {
      if (in_a[static_cast<std::size_t>(b)]) throw ParameterError("hitting_quantities: A and B overlap");
      target[static_cast<std::size_t>(b)] = 1;
    }
  const auto s = net.find(start);
  HittingQuantities h;
  if (target[static_cast<std::size_t>(s)]) {
    h.expected_time = 0.0;
    if (B) h.prob_A_before_B = in_a[static_cast<std::size_t>(s)] ? 1.0 : 0.0;
    return h;
  }
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!target[static_cast<std::size_t>(i)]) free.push_back(i);
  const auto m = static_cast<Eigen::Index>(free.size());
  const Eigen::MatrixXd Q = net.generator();
  Eigen::MatrixXd M(m, m);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(m), rhs = Eigen::VectorXd::Zero(m);
  Eigen::Index srow = 0;
  for (Eigen::Index r = 0; r < m; ++r) {
    if (free[static_cast<std::size_t>(r)] == s) srow = r;
    for (Eigen::Index c = 0; c < m; ++c) M(r, c) = -Q(free[static_cast<std::size_t>(r)], free[static_cast<std::size_t>(c)]);
    for (Eigen::Index j = 0; j < n; ++j)
      if (in_a[static_cast<std::size_t>(j)]) rhs(r) += Q(free[static_cast<std::size_t>(r)], j);
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  Eigen::VectorXd t = lu.solve(ones);
  if (!t.allFinite() || (M * t - ones).norm() > 1e-8 * (M.norm() * t.norm() + 1.0))
    throw NumericalFailure("hitting time system is singular (target unreachable?)");
  h.expected_time = t(srow);
  if (B) {
    Eigen::VectorXd u = lu.solve(rhs);
    h.prob_A_before_B = u(srow);
  }
  return h;
}

struct CommuteCheck {
  double lhs = 0, rhs = 0, rel_err = 0;
};

/// E_a T_b + E_b T_a (linear solves) against R_eff(a, b) * mu(V) (Dirichlet).
inline CommuteCheck commute_time_check(const WeightedNetwork& net, std::int64_t a, std::int64_t b) {
  if (a == b) throw ParameterError("commute_time_check: a == b");
  CommuteCheck c;
  c.lhs = hitting_quantities(net, a, {b}).expected_time + hitting_quantities(net, b, {a}).expected_time;
  c.rhs = effective_resistance(net, {a}, {b}).value() * net.mu.sum();
  c.rel_err = std::abs(c.lhs - c.rhs) / std::abs(c.rhs);
  return c;
}

/// Schur complement of the Laplacian onto `keep` (the trace network).
inline WeightedNetwork trace_network(const WeightedNetwork& net, const std::vector<std::int64_t>& keep_labels) {
  const auto keep = detail::resolve(net, keep_labels);
  if (keep.empty()) throw ParameterError("trace_network: empty keep set");
  const auto n = net.size();
  std::vector<char> kept(static_cast<std::size_t>(n), 0);
  for (auto k : keep) kept[static_cast<std::size_t>(k)] = 1;
  std::vector<Eigen::Index> drop;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!kept[static_cast<std::size_t>(i)]) drop.push_back(i);
  const Eigen::MatrixXd L = net.laplacian();
  const auto k = static_cast<Eigen::Index>(keep.size()), d = static_cast<Eigen::Index>(drop.size());
  Eigen::MatrixXd Lkk(k, k), Lkd(k, d), Ldd(d, d);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < k; ++c) Lkk(r, c) = L(keep[static_cast<std::size_t>(r)], keep[static_cast<std::size_t>(c)]);
    for (Eigen::Index c = 0; c < d; ++c) Lkd(r, c) = L(keep[static_cast<std::size_t>(r)], drop[static_cast<std::size_t>(c)]);
  }
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) Ldd(r, c) = L(drop[static_cast<std::size_t>(r)], drop[static_cast<std::size_t>(c)]);
  Eigen::MatrixXd S = Lkk;
  if (d > 0) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Ldd);
    S -= Lkd * lu.solve(Lkd.transpose());
  }
  Eigen::MatrixXd C = -S;
  for (Eigen::Index i = 0; i < k; ++i) {
    C(i, i) = 0.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = std::max(0.0, 0.5 * (C(i, j) + C(j, i)));  // clamp rounding noise
      C(i, j) = C(j, i) = v;
    }
  }
  std::vector<std::int64_t> labels;
  Eigen::VectorXd mu(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    labels.push_back(net.labels[static_cast<std::size_t>(keep[static_cast<std::size_t>(r)])]);
    mu(r) = net.mu(keep[static_cast<std::size_t>(r)]);
  }
  return WeightedNetwork(std::move(labels), std::move(C), std::move(mu));
}

namespace detail {
inline Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> symmetrized_spectrum(const WeightedNetwork& net) {
  const Eigen::VectorXd s = net.mu.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd S = s.asDiagonal() * net.laplacian() * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) throw NumericalFailure("eigen solver failed");
  return es;
}
}  // namespace detail

/// Second-smallest eigenvalue of -Q, from D^{-1/2} L D^{-1/2} (D = diag(mu)).
inline double spectral_gap(const WeightedNetwork& net) {
  if (net.size() < 2) throw ParameterError("spectral_gap: need at least two vertices");
  auto es = detail::symmetrized_spectrum(net);
  return es.eigenvalues()(1);
}

/// All pairwise effective resistances from the inverse of the grounded
/// Laplacian: R(x,y) = G_xx + G_yy - 2 G_xy with vertex 0 grounded.
inline Eigen::MatrixXd resistance_matrix(const WeightedNetwork& net) {
  const auto n = net.size();
  const Eigen::MatrixXd L = net.laplacian();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  if (n > 1) {
    Eigen::MatrixXd Lr = L.bottomRightCorner(n - 1, n - 1);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Lr);
    G.bottomRightCorner(n - 1, n - 1) = lu.inverse();
    if (!G.allFinite()) throw NumericalFailure("grounded Laplacian is singular (network disconnected?)");
  }
  Eigen::MatrixXd R(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) R(i, j) = G(i, i) + G(j, j) - 2.0 * G(i, j);
  return R;
}

inline double resistance_diameter(const WeightedNetwork& net) { return resistance_matrix(net).maxCoeff(); }

/// Law of Y_t started at x, from the spectral decomposition of the
/// symmetrised generator.
inline Eigen::VectorXd distribution_at(const WeightedNetwork& net, std::int64_t x_label, double t) {
  if (!(t >= 0)) throw ParameterError("distribution_at: t must be >= 0");
  auto es = detail::symmetrized_spectrum(net);
  const auto x = net.find(x_label);
  const Eigen::VectorXd sq = net.mu.cwiseSqrt();
  const Eigen::MatrixXd& V = es.eigenvectors();
  Eigen::VectorXd decay = (-t * es.eigenvalues().array().max(0.0)).exp();
  // p_y = mu_x^{-1/2} sum_k V_xk e^{-t l_k} V_yk mu_y^{1/2}
  return (V * (decay.asDiagonal() * V.row(x).transpose())).cwiseProduct(sq) / sq(x);
}

struct MixingCheck {
  double exact_tv = 0, bound = 0;
  bool holds = false;
};

/// Total variation between P_x(Y_t in .) and pi against
/// 1/2 exp(-t/(mu(G) diam_R)) sup pi^{-1/2}.
inline MixingCheck mixing_bound_check(const WeightedNetwork& net, std::int64_t x_label, double t) {
  if (net.size() > 50) throw ParameterError("mixing_bound_check: network too large for the exact computation");
  const Eigen::VectorXd p = distribution_at(net, x_label, t);
  const Eigen::VectorXd pi = stationary_vector(net);
  MixingCheck m;
  m.exact_tv = 0.5 * (p - pi).cwiseAbs().sum();
  m.bound = 0.5 * std::exp(-t / (net.mu.sum() * resistance_diameter(net))) / std::sqrt(pi.minCoeff());
  m.holds = m.exact_tv <= m.bound * (1.0 + 1e-12) + 1e-15;
  return m;
}

// ---------------------------------------------------------------------------
// Auxiliary network around the k-th right barrier

/// Vertices b~_k, a~_k..a_k^+, b_k^+ (labels LEFT, atom indices, RIGHT).
/// Interior conductances are exact; the boundary rows are the sums over all
/// atoms beyond the cut, truncated with the certified tail bound. The double
/// sum factorises by superadditivity of s -> s^alpha, which gives its bound.
inline WeightedNetwork build_aux_network(Environment& env, const RecordTable& table, int k, double lambda_eff,
                                         double tail_tol = 1e-12) {
  if (k < 0 || k > table.K) throw ParameterError("build_aux_network: k out of range");
  const std::int64_t lo = table.a_tilde(k), hi = table.plus(k).index;
  const std::int64_t bl = lo - 1, br = hi + 1;
  const double alpha = env.alpha(), al = std::abs(lambda_eff);
  env.ensure(bl - 2, br + 2);
  const auto m = static_cast<Eigen::Index>(hi - lo + 1);
  const Eigen::Index L = 0, R = m + 1;
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(m + 2, m + 2);
  for (std::int64_t i = lo; i <= hi; ++i)
    for (std::int64_t j = i + 1; j <= hi; ++j) {
      const double c = conductance(env, i, j, lambda_eff);
      C(i - lo + 1, j - lo + 1) = C(j - lo + 1, i - lo + 1) = c;
    }

  // Outward sums from a fixed inner point x over atoms beyond the cut on one
  // side, continued until the tail bound (relative to the partial sum) is met.
  auto outward = [&](double x, std::int64_t start, int dir) {
    double s = 0.0;
    for (std::int64_t j = start;; j += dir) {
      env.ensure_index(j);
      const double y = env.pos(j);
      s += std::exp(-std::pow(std::abs(y - x), alpha) + lambda_eff * (x + y));
      if (j != start) {
        const double D = std::abs(y - x);
        const double tail = std::exp(2.0 * lambda_eff * x) * tail_integral_bound(D - 1.0, alpha, al);
        if (tail <= tail_tol * s) break;
      }
    }
    return s;
  };

  for (std::int64_t i = lo; i <= hi; ++i) {
    const double x = env.pos(i);
    const double cr = outward(x, br, +1), cl = outward(x, bl, -1);
    C(i - lo + 1, R) = C(R, i - lo + 1) = cr;
    C(i - lo + 1, L) = C(L, i - lo + 1) = cl;
  }
  // Double sum over l <= bl, r >= br. Since |y_r - y_l|^alpha >= (y_r - y_br + d)^alpha
  // with d = y_br - y_bl, inner sums are truncated with the same bound; the
  // outer loop stops once the superadditive factorised remainder is negligible.
  {
    double total = 0.0;
    const double d0 = env.pos(br) - env.pos(bl);
    for (std::int64_t l = bl;; --l) {
      env.ensure_index(l);
      const double y = env.pos(l);
      const double row = outward(y, br, +1);
      total += row;
      const double Dl = env.pos(bl) - y;
      if (l != bl) {
        // Remaining rows: atoms at distance >= Dl beyond bl; each row is at most
        // exp(-(d0 + s)^alpha ...) summed, bounded via superadditivity.
        const double rest = std::exp(-std::pow(d0, alpha) + 2.0 * al * (std::abs(env.pos(bl)) + d0)) *
                            tail_integral_bound(Dl - 1.0, alpha, 2.0 * al) *
                            (1.0 + tail_integral_bound(0.5, alpha, 2.0 * al));
        if (rest <= tail_tol * total) break;
      }
    }
    C(L, R) = C(R, L) = total;
  }

  std::vector<std::int64_t> labels;
  labels.push_back(kLeftLabel);
  for (std::int64_t i = lo; i <= hi; ++i) labels.push_back(i);
  labels.push_back(kRightLabel);
  Eigen::VectorXd mu = C.rowwise().sum();
  mu(L) = 1.0;
  mu(R) = 1.0;
  return WeightedNetwork(std::move(labels), std::move(C), std::move(mu));
}

struct ResistanceBoundsReport {
  double ratio_i = 0;    // max interior R(i,j) / ((g_{k-1} + g~_k) l1)
  double ratio_ii = 0;   // R(interior, {L, R}) / (g_k / l1^5)
  double ratio_iii = 0;  // R(a~_k, a_k) / ((g_{k-1} + g~_k) / l1^5)
  double C = 10;
  bool holds = false;  // ratio_i <= C, ratio_ii >= 1/C, ratio_iii >= 1/C
};

inline ResistanceBoundsReport resistance_bounds_check(Environment& env, const RecordTable& table, int k, double lambda_eff,
                                   double C = 10.0, double tail_tol = 1e-12) {
  if (k < 1) throw ParameterError("resistance_bounds_check: k must be >= 1");
  const double l1 = iterated_log(1, table.n);
  WeightedNetwork net = build_aux_network(env, table, k, lambda_eff, tail_tol);
  const auto m = net.size() - 2;
  const Eigen::MatrixXd Rm = resistance_matrix(net);
  double rmax = 0;
  for (Eigen::Index i = 1; i <= m; ++i)
    for (Eigen::Index j = i + 1; j <= m; ++j) rmax = std::max(rmax, Rm(i, j));
  const double base = table.g_plus(k - 1) + table.gtt(k);
  std::vector<std::int64_t> interior(net.labels.begin() + 1, net.labels.end() - 1);
  const double r2 = effective_resistance(net, interior, {kLeftLabel, kRightLabel}).value();
  const double r3 = effective_resistance(net, {table.a_tilde(k)}, {table.plus(k).index}).value();
  ResistanceBoundsReport r;
  r.C = C;
  r.ratio_i = rmax / (base * l1);
  r.ratio_ii = r2 / (table.g_plus(k) / std::pow(l1, 5));
  r.ratio_iii = r3 / (base / std::pow(l1, 5));
  r.holds = r.ratio_i <= C && r.ratio_ii >= 1.0 / C && r.ratio_iii >= 1.0 / C;
  return r;
}

// ---------------------------------------------------------------------------
// Walks on networks

/// Exact simulation of the chain with generator C/mu: holding rate
/// rowsum/mu, jumps proportional to C. Records (time, label) until stop or budget.
template <class Stop>
void simulate_network(const WeightedNetwork& net, std::int64_t start, Rng& rng, std::uint64_t max_steps,
                      std::vector<double>& times, std::vector<std::int64_t>& labels, Stop&& stop) {
  const auto n = net.size();
  const auto N = static_cast<std::size_t>(n);
  std::vector<double> cdf(N * N);  // row-major cumulative jump probabilities
  Eigen::VectorXd rate(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = net.C.row(i).sum();
    rate(i) = s / net.mu(i);
    double acc = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      acc += net.C(i, j);
      cdf[static_cast<std::size_t>(i) * N + static_cast<std::size_t>(j)] = s > 0 ? acc / s : 0.0;
    }
  }
  Eigen::Index x = net.find(start);
  double t = 0;
  times.clear();
  labels.clear();
  times.push_back(0);
  labels.push_back(start);
  if (stop(x)) return;
  for (std::uint64_t step = 0; step < max_steps; ++step) {
    if (rate(x) == 0) return;
    t += rng.exponential() / rate(x);
    const double u = rng.uniform();
    // first entry with cdf > u; it carries positive conductance
    const double* row = cdf.data() + static_cast<std::size_t>(x) * N;
    const double* hit = std::upper_bound(row, row + N, u);
    if (hit == row + N) hit = std::find_if(row, row + N, [&](double c) { return c >= row[N - 1]; });
    const auto y = static_cast<Eigen::Index>(hit - row);
    x = y;
    times.push_back(t);
    labels.push_back(net.labels[static_cast<std::size_t>(x)]);
    if (stop(x)) return;
  }
}

/// Random connected network on n vertices with mu = row sums; used by the
/// property suites. Edge density p, conductances log-uniform on [e^-3, e^3].
inline WeightedNetwork random_network(int n, Rng& rng, double p = 0.5) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {  // random spanning tree keeps it connected
    const int j = static_cast<int>(rng.uniform() * i);
    C(i, j) = C(j, i) = std::exp(6.0 * rng.uniform() - 3.0);
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (C(i, j) == 0 && rng.uniform() < p) C(i, j) = C(j, i) = std::exp(6.0 * rng.uniform() - 3.0);
  return WeightedNetwork::with_row_sum_measure(std::move(C));
}

/// Two-terminal series-parallel network together with its resistance from the
/// reduction rules alone, an oracle independent of the Dirichlet solve.
struct SeriesParallel {
  int nodes = 2, s = 0, t = 1;
  std::vector<std::tuple<int, int, double>> edges;
  double R = 0;

  WeightedNetwork network() const {
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(nodes, nodes);
    for (auto [u, v, c] : edges) {
      C(u, v) += c;
      C(v, u) += c;
    }
    return WeightedNetwork::with_row_sum_measure(std::move(C));
  }
};

inline SeriesParallel random_series_parallel(Rng& rng, int depth) {
  SeriesParallel g;
  if (depth == 0 || rng.uniform() < 0.25) {
    const double c = std::exp(4 * rng.uniform() - 2);
    g.edges.emplace_back(0, 1, c);
    g.R = 1 / c;
    return g;
  }
  SeriesParallel a = random_series_parallel(rng, depth - 1), b = random_series_parallel(rng, depth - 1);
  const bool series = rng.uniform() < 0.5;
  // relabel b: its source glues to a's sink (series) or a's source (parallel)
  std::vector<int> map(static_cast<std::size_t>(b.nodes), -1);
  map[static_cast<std::size_t>(b.s)] = series ? a.t : a.s;
  if (!series) map[static_cast<std::size_t>(b.t)] = a.t;
  int next = a.nodes;
  for (auto& m : map)
    if (m < 0) m = next++;
  g.nodes = next;
  g.edges = a.edges;
  for (auto [u, v, c] : b.edges) g.edges.emplace_back(map[static_cast<std::size_t>(u)], map[static_cast<std::size_t>(v)], c);
  g.s = a.s;
  g.t = series ? map[static_cast<std::size_t>(b.t)] : a.t;
  g.R = series ? a.R + b.R : 1 / (1 / a.R + 1 / b.R);
  return g;
}

}  // namespace mott
