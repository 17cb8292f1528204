#pragma once

// Acceptance criteria 1..10 by number, shared by `mott verify` and the
// acceptance test binary. The config file has one section per criterion plus
// top-level "seed" and "workers".

#include <array>
#include <functional>
#include <string>

#include "common.hpp"
#include "figure.hpp"
#include "suites.hpp"
#include "theorems.hpp"

namespace mott::exp {

struct Criterion {
  int number;
  const char* section;  // config key and report file stem
  const char* title;
  json (*run)(const json&, const RunContext&);
};

inline const std::array<Criterion, 10>& criteria() {
  static const std::array<Criterion, 10> c{{
      {1, "tail", "tail laws of r and L(r)", run_tail_and_records},
      {2, "identities", "analytic identities and truncation certificates", run_identities},
      {3, "networks", "network identities", run_network_suite},
      {4, "extremal", "limiting extremal objects", run_extremal_suite},
      {5, "walk_oracle", "walk against first-step analysis", run_walk_oracle},
      {6, "exceedance", "exceedance processes approach the barrier processes", run_exceedance_scaling},
      {7, "localisation", "one-site localisation of the extrema", run_localisation},
      {8, "position_law", "position law inside the barrier interval", run_position_law},
      {9, "crossing", "crossing-time events and excursion counts", run_crossing_events},
      {10, "figure", "space-time figure bundles", emit_figure_bundles},
  }};
  return c;
}

inline const Criterion& criterion(int k) {
  if (k < 1 || k > 10) throw ParameterError("criterion must be in 1..10");
  return criteria()[static_cast<std::size_t>(k - 1)];
}

/// Suite name -> criterion numbers.
inline std::vector<int> suite(const std::string& name) {
  if (name == "properties") return {1, 2, 3, 4, 5};
  if (name == "theorems") return {6, 7, 8, 9};
  if (name == "figure") return {10};
  if (name == "all") return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  throw ParameterError("unknown suite '" + name + "' (properties, theorems, figure, all)");
}

/// Runs one criterion; the report is written to out_dir/<section>.json when
/// out_dir is set. The seed in the config is used unless ctx overrides it.
inline json run_criterion(int k, const json& config, const RunContext& ctx) {
  const Criterion& c = criterion(k);
  RunContext sub = ctx;
  if (!ctx.out_dir.empty()) sub.out_dir = ctx.out_dir / c.section;
  json section = config.is_object() && config.contains(c.section) ? config.at(c.section) : json::object();
  json r = c.run(section, sub);
  r["criterion"] = k;
  r["title"] = c.title;
  if (!ctx.out_dir.empty()) write_json(ctx.out_dir / (std::string(c.section) + ".json"), r);
  return r;
}

/// One line: "C<k> PASS|FAIL <title>: first failing check or a summary".
inline std::string summary_line(const json& r) {
  const bool pass = r.at("pass").get<bool>();
  std::string s = "C" + std::to_string(r.at("criterion").get<int>()) + (pass ? " PASS " : " FAIL ") +
                  r.at("title").get<std::string>();
  std::size_t n = 0, failed = 0;
  std::string first;
  for (const auto& c : r.at("checks")) {
    ++n;
    if (!c.at("pass").get<bool>()) {
      if (!failed++) {
        first = c.at("name").get<std::string>();
        if (c.contains("value")) first += " = " + io::fmt(c.at("value").get<double>()) + " (needs " +
                                          c.at("op").get<std::string>() + " " + io::fmt(c.at("threshold").get<double>()) + ")";
      }
    }
  }
  s += ": " + std::to_string(n - failed) + "/" + std::to_string(n) + " checks";
  if (failed) s += "; first failure " + first;
  return s;
}

}  // namespace mott::exp
