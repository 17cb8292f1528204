#pragma once

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace mott::stats {

inline double mean(const std::vector<double>& x) {
  if (x.empty()) throw ParameterError("mean of empty sample");
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x) {
  if (x.size() < 2) throw ParameterError("variance needs two samples");
  const double m = mean(x);
  double s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

/// Type-7 sample quantile.
inline double quantile(std::vector<double> x, double q) {
  if (x.empty()) throw ParameterError("quantile of empty sample");
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

inline double median(const std::vector<double>& x) { return quantile(x, 0.5); }

/// P(K > x) for the Kolmogorov distribution.
inline double kolmogorov_sf(double x) {
  if (x <= 0) return 1.0;
  if (x < 1.18) {
    // small-x form: sqrt(2 pi)/x sum exp(-(2k-1)^2 pi^2 / (8 x^2))
    const double pi2 = M_PI * M_PI;
    double s = 0;
    for (int k = 1; k <= 50; ++k) s += std::exp(-(2.0 * k - 1) * (2.0 * k - 1) * pi2 / (8 * x * x));
    return 1.0 - std::sqrt(2 * M_PI) / x * s;
  }
  double s = 0;
  for (int k = 1; k <= 100; ++k) {
    const double t = 2.0 * std::exp(-2.0 * k * k * x * x) * (k % 2 ? 1.0 : -1.0);
    s += t;
    if (std::abs(t) < 1e-17) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

struct KSResult {
  double D = 0, p_value = 1;
};

/// Asymptotic p-value with Stephens' small-sample correction.
inline double ks_pvalue(double D, double n_eff) {
  const double r = std::sqrt(n_eff);
  return kolmogorov_sf((r + 0.12 + 0.11 / r) * D);
}

inline KSResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
  if (x.empty()) throw ParameterError("KS on empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double D = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = cdf(x[i]);
    D = std::max({D, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  return {D, ks_pvalue(D, n)};
}

inline KSResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ParameterError("KS on empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double D = 0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    D = std::max(D, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {D, ks_pvalue(D, na * nb / (na + nb))};
}

/// KS distance of a sample against a given CDF (no p-value).
inline double ks_distance(std::vector<double> x, const std::function<double(double)>& cdf) {
  return ks_one_sample(std::move(x), cdf).D;
}

struct Band {
  double lo = 0, hi = 0;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// p +- z sqrt(p(1-p)/n) for a binomial proportion with known p.
inline Band binomial_band(double p, double n, double z) {
  const double s = z * std::sqrt(p * (1 - p) / n);
  return {p - s, p + s};
}

/// Percentile bootstrap interval for the median.
inline Band bootstrap_median_ci(const std::vector<double>& x, double level, int resamples, std::uint64_t seed) {
  if (x.empty()) throw ParameterError("bootstrap on empty sample");
  Rng rng(seed);
  std::vector<double> meds, buf(x.size());
  meds.reserve(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    for (auto& v : buf) v = x[static_cast<std::size_t>(rng.uniform() * static_cast<double>(x.size()))];
    meds.push_back(median(buf));
  }
  return {quantile(meds, (1 - level) / 2), quantile(meds, (1 + level) / 2)};
}

/// Wilson score interval for a binomial proportion.
inline Band wilson_interval(double successes, double n, double z) {
  if (n <= 0) return {0, 1};
  const double p = successes / n, z2 = z * z;
  const double c = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double h = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  return {std::max(0.0, c - h), std::min(1.0, c + h)};
}

inline double chi2_sf(double x, double df) {
  if (df <= 0) return 1.0;
  boost::math::chi_squared d(df);
  return boost::math::cdf(boost::math::complement(d, std::max(0.0, x)));
}

struct ChiSquareResult {
  double statistic = 0, df = 0, p_value = 1;
};

/// Pearson independence test on a contingency table; empty rows and columns
/// are dropped.
inline ChiSquareResult chi_square_independence(const std::vector<std::vector<double>>& table) {
  std::vector<double> rs, cs;
  const std::size_t R = table.size(), C = R ? table[0].size() : 0;
  rs.assign(R, 0);
  cs.assign(C, 0);
  double tot = 0;
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t j = 0; j < C; ++j) {
      rs[i] += table[i][j];
      cs[j] += table[i][j];
      tot += table[i][j];
    }
  ChiSquareResult r;
  std::size_t rr = 0, cc = 0;
  for (double v : rs) rr += v > 0;
  for (double v : cs) cc += v > 0;
  if (rr < 2 || cc < 2) return r;
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t j = 0; j < C; ++j) {
      if (rs[i] == 0 || cs[j] == 0) continue;
      const double e = rs[i] * cs[j] / tot;
      r.statistic += (table[i][j] - e) * (table[i][j] - e) / e;
    }
  r.df = static_cast<double>((rr - 1) * (cc - 1));
  r.p_value = chi2_sf(r.statistic, r.df);
  return r;
}

/// Pearson goodness of fit of counts against probabilities.
inline ChiSquareResult chi_square_gof(const std::vector<double>& counts, const std::vector<double>& probs) {
  if (counts.size() != probs.size()) throw ParameterError("chi_square_gof: size mismatch");
  double n = 0;
  for (double c : counts) n += c;
  ChiSquareResult r;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = n * probs[i];
    if (e <= 0) continue;
    r.statistic += (counts[i] - e) * (counts[i] - e) / e;
    r.df += 1;
  }
  r.df -= 1;
  r.p_value = chi2_sf(r.statistic, r.df);
  return r;
}

}  // namespace mott::stats
