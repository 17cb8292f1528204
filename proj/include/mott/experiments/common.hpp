#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "../errors.hpp"
#include "../io.hpp"
#include "../parallel.hpp"
#include "../rng.hpp"
#include "../stats.hpp"

namespace mott::exp {

using json = nlohmann::json;

/// Shared by every experiment: master seed, worker count and an output
/// directory (empty: no files written).
struct RunContext {
  std::uint64_t seed = 1;
  unsigned workers = 0;
  std::filesystem::path out_dir;
};

// Stream tags for seed derivation. Each experiment owns one tag so changing
// one suite's sample sizes never shifts another's random numbers.
enum Stream : std::uint64_t {
  kTail = 1,
  kIdentities,
  kNetworks,
  kExtremal,
  kWalkOracle,
  kExceedance,
  kLocalisation,
  kPositionLaw,
  kCrossing,
  kInvariant,
  kFigure,
};

template <class T>
T opt(const json& cfg, const char* key, T def) {
  if (!cfg.is_object() || !cfg.contains(key)) return def;
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParameterError(std::string("config key '") + key + "': " + e.what());
  }
}

/// Report skeleton: named gated checks plus free-form statistics.
class Report {
 public:
  Report(std::string name, const json& cfg, std::uint64_t seed) {
    j_["experiment"] = std::move(name);
    j_["config"] = cfg;
    j_["seed"] = seed;
    j_["checks"] = json::array();
    j_["stats"] = json::object();
  }

  /// Records value <op> threshold; op is one of "<=", ">=", "<", ">".
  bool check(const std::string& name, double value, const std::string& op, double threshold) {
    bool ok = false;
    if (op == "<=") ok = value <= threshold;
    else if (op == ">=") ok = value >= threshold;
    else if (op == "<") ok = value < threshold;
    else if (op == ">") ok = value > threshold;
    else throw ParameterError("unknown comparison " + op);
    j_["checks"].push_back({{"name", name}, {"value", value}, {"op", op}, {"threshold", threshold}, {"pass", ok}});
    return ok;
  }

  bool check_true(const std::string& name, bool ok, json detail = nullptr) {
    json c{{"name", name}, {"pass", ok}};
    if (!detail.is_null()) c["detail"] = std::move(detail);
    j_["checks"].push_back(std::move(c));
    return ok;
  }

  json& stats() { return j_["stats"]; }

  json finish() {
    bool all = true;
    for (const auto& c : j_["checks"]) all = all && c["pass"].get<bool>();
    j_["pass"] = all;
    return j_;
  }

 private:
  json j_;
};

/// Counts that must add up to the number of replicates.
struct Tally {
  std::size_t completed = 0, censored = 0, excluded = 0;
  std::size_t total() const { return completed + censored + excluded; }
  json to_json() const {
    return {{"completed", completed}, {"censored", censored}, {"excluded", excluded}, {"replicates", total()}};
  }
};

inline json band_json(const stats::Band& b) { return json::array({b.lo, b.hi}); }

/// Percentile bootstrap CI for median(b) - median(a), independent samples.
inline stats::Band bootstrap_median_diff_ci(const std::vector<double>& a, const std::vector<double>& b, double level,
                                           int resamples, std::uint64_t seed) {
  if (a.empty() || b.empty()) throw ParameterError("bootstrap: empty sample");
  Rng rng(seed);
  std::vector<double> d, ba(a.size()), bb(b.size());
  d.reserve(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    for (auto& v : ba) v = a[static_cast<std::size_t>(rng.uniform() * static_cast<double>(a.size()))];
    for (auto& v : bb) v = b[static_cast<std::size_t>(rng.uniform() * static_cast<double>(b.size()))];
    d.push_back(stats::median(bb) - stats::median(ba));
  }
  const double q = (1.0 - level) / 2.0;
  return {stats::quantile(d, q), stats::quantile(d, 1.0 - q)};
}

inline void write_json(const std::filesystem::path& p, const json& j) {
  auto f = io::open_out(p);
  f << j.dump(2) << '\n';
}

}  // namespace mott::exp
