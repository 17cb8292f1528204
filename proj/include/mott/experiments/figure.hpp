#pragma once

// Space-time figure bundles. Per alpha the bundle directory holds
//   trajectory.csv  step,time,position,L_time   (subsampled walk, L_time = L(time))
//   atoms.csv       index,position              (atoms spanned by the outer barriers)
//   barriers.csv    side,level,position         (staircase vertices of y -> m^{-1}_{1,+-}(y))
//   metadata.json   parameters, budget flags, containment statistic
// Everything is unrescaled (n = 1), with the vertical coordinate y = L(t).

#include <chrono>
#include <cmath>
#include <filesystem>

#include "../env.hpp"
#include "../records.hpp"
#include "../walk.hpp"
#include "common.hpp"

namespace mott::exp {

struct FigureRow {
  std::uint64_t step = 0;
  double time = 0;
  std::int64_t index = 0;
  double position = 0;
};

struct FigureBundle {
  double alpha = 0;
  std::vector<FigureRow> rows;
  StepFunction plus, minus;  // y -> m^{-1}_{1,+}(y), m^{-1}_{1,-}(y)
  std::int64_t atom_lo = 0, atom_hi = 0;
  std::vector<double> atoms;  // positions of atom_lo..atom_hi
  WalkOutcome outcome;
  double containment = 0;
  double seconds = 0;  // simulation wall time, kept out of the bundle files
};

/// Runs one walk and keeps every stride-th event plus every new extremum.
inline FigureBundle make_figure_bundle(double alpha, std::uint64_t steps, std::uint64_t stride, std::uint64_t seed) {
  if (stride == 0) throw ParameterError("figure: stride must be positive");
  FigureBundle b;
  b.alpha = alpha;
  auto env = Environment::sample(1000, alpha, mix64(seed, 1));
  WalkConfig c;
  c.max_steps = steps;
  c.seed = mix64(seed, 2);
  KernelCache cache(c.lambda_eff, c.tail_tol);
  std::uint64_t k = 0;
  std::int64_t hi = 0, lo = 0;
  b.rows.reserve(static_cast<std::size_t>(steps / stride + 1024));
  const auto t0 = std::chrono::steady_clock::now();
  b.outcome = simulate(env, cache, c, [&](double t, std::int64_t i) {
    const bool extreme = i > hi || i < lo;
    if (extreme || k % stride == 0) b.rows.push_back({k, t, i, env.pos(i)});
    hi = std::max(hi, i);
    lo = std::min(lo, i);
    ++k;
  });
  b.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (b.rows.back().step + 1 != k) b.rows.push_back({k - 1, b.outcome.end_time, b.outcome.final_index, env.pos(b.outcome.final_index)});

  const double y_max = slow_vary_L(std::max(b.outcome.end_time, 1e-300), alpha);
  b.plus = barrier_inverse_path(env, 1.0, y_max, Side::plus);
  b.minus = barrier_inverse_path(env, 1.0, y_max, Side::minus);
  // atoms out to the next barrier beyond the final staircase step, plus a margin
  const std::int64_t mp = barrier_inverse_edge(env, 1.0, y_max, Side::plus);
  const std::int64_t mm = barrier_inverse_edge(env, 1.0, y_max, Side::minus);
  b.atom_hi = std::max(hi, mp) + 10;
  b.atom_lo = std::min(lo, -mm) - 10;
  env.ensure(b.atom_lo, b.atom_hi);
  for (std::int64_t i = b.atom_lo; i <= b.atom_hi; ++i) b.atoms.push_back(env.pos(i));

  double inside = 0;
  for (const auto& r : b.rows) {
    const double y = slow_vary_L(r.time, alpha), x = r.position;
    inside += b.minus(y) <= x && x <= b.plus(y);
  }
  b.containment = inside / static_cast<double>(b.rows.size());
  return b;
}

inline json write_figure_bundle(const FigureBundle& b, const std::filesystem::path& dir, std::uint64_t seed,
                                std::uint64_t steps, std::uint64_t stride) {
  {
    auto f = io::open_out(dir / "trajectory.csv");
    io::CsvWriter w(f);
    w.header({"step", "time", "position", "L_time"});
    for (const auto& r : b.rows) w.row(r.step, r.time, r.position, slow_vary_L(r.time, b.alpha));
  }
  {
    auto f = io::open_out(dir / "atoms.csv");
    io::CsvWriter w(f);
    w.header({"index", "position"});
    for (std::int64_t i = b.atom_lo; i <= b.atom_hi; ++i) w.row(i, b.atoms[static_cast<std::size_t>(i - b.atom_lo)]);
  }
  {
    auto f = io::open_out(dir / "barriers.csv");
    io::CsvWriter w(f);
    w.header({"side", "level", "position"});
    for (const auto* s : {&b.plus, &b.minus}) {
      const std::string side = s == &b.plus ? "+" : "-";
      w.row(side, 0.0, s->t0_value);
      for (std::size_t k = 0; k < s->jumps.size(); ++k) w.row(side, s->jumps[k], s->values[k]);
    }
  }
  json meta{{"alpha", b.alpha},
            {"seed", seed},
            {"steps_requested", steps},
            {"steps_done", b.outcome.steps},
            {"end_time", b.outcome.end_time},
            {"terminal_reason", terminal_name(b.outcome.reason)},
            {"budget_exhausted", b.outcome.reason == Terminal::step_budget},
            {"stride", stride},
            {"rows", b.rows.size()},
            {"containment_fraction", b.containment},
            {"scale_n", 1},
            {"files",
             {{"trajectory.csv", "step,time,position,L_time; L_time = L(time) is the vertical coordinate"},
              {"atoms.csv", "index,position"},
              {"barriers.csv", "side,level,position; staircase vertices of level -> inverse barrier, side + or -"}}}};
  write_json(dir / "metadata.json", meta);
  return meta;
}

inline std::string alpha_dir(double a) { return "alpha_" + io::fmt(a); }

inline json emit_figure_bundles(const json& cfg, const RunContext& ctx) {
  Report rep("figure", cfg, ctx.seed);
  const auto alphas = opt(cfg, "alphas", std::vector<double>{1.5, 2.5, 3.5});
  const auto steps = static_cast<std::uint64_t>(opt(cfg, "steps", 1e7));
  const auto stride = static_cast<std::uint64_t>(opt(cfg, "stride", 1000.0));
  const double gate_alpha = opt(cfg, "gate_alpha", 1.5);
  const double containment_floor = opt(cfg, "containment_floor", 0.9);
  const double min_rate = opt(cfg, "min_events_per_second", 1e7);
  const bool determinism = opt(cfg, "check_determinism", true);
  const double min_steps = opt(cfg, "min_steps", 1e7);
  const std::filesystem::path root = ctx.out_dir.empty() ? std::filesystem::path("figure") : ctx.out_dir;

  json bundles = json::array();
  for (double a : alphas) {
    const std::uint64_t seed = mix64(ctx.seed, kFigure, static_cast<std::uint64_t>(a * 1000));
    const FigureBundle b = make_figure_bundle(a, steps, stride, seed);
    json meta = write_figure_bundle(b, root / alpha_dir(a), seed, steps, stride);
    bundles.push_back(meta);
    rep.check("steps_alpha=" + io::fmt(a), static_cast<double>(b.outcome.steps), ">=", min_steps);
    const bool monotone = b.plus.nondecreasing() && b.minus.nonincreasing();
    rep.check_true("staircases_monotone_alpha=" + io::fmt(a), monotone);
    if (a == gate_alpha) {
      rep.check("containment_alpha=" + io::fmt(a), b.containment, ">=", containment_floor);
      const double rate = static_cast<double>(b.outcome.steps) / b.seconds;
      rep.check("events_per_second", rate, ">=", min_rate);
      if (determinism) {
        const FigureBundle again = make_figure_bundle(a, steps, stride, seed);
        const auto dir2 = root / "determinism" / alpha_dir(a);
        write_figure_bundle(again, dir2, seed, steps, stride);
        bool same = true;
        for (const char* f : {"trajectory.csv", "atoms.csv", "barriers.csv", "metadata.json"})
          same = same && io::read_file(root / alpha_dir(a) / f) == io::read_file(dir2 / f);
        rep.check_true("identical_bytes_on_rerun", same);
      }
    }
  }
  rep.stats()["bundles"] = bundles;
  rep.stats()["bundle_root"] = root.string();
  return rep.finish();
}

}  // namespace mott::exp
