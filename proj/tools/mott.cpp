// mott: command-line front end. Every subcommand writes into --out-dir and
// leaves a manifest.json there (effective config, seed, versions, wall time).
//
// Parameter precedence: built-in defaults < --config file < MOTT_<NAME> < flags.
#include <boost/version.hpp>
#include <Eigen/Core>

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "mott/experiments.hpp"

#ifndef MOTT_SOURCE_DIR
#define MOTT_SOURCE_DIR "."
#endif

using namespace mott;
using exp::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Param {
  std::string name;  // config key; the flag is --name with '_' -> '-'
  json def;
  std::string help;
};

/// One subcommand: its parameters, and the work to do once they are resolved.
struct Command {
  std::string name, help;
  std::vector<Param> params;
  std::function<int(const json& cfg, const exp::RunContext& ctx)> run;
};

std::string flag_of(const std::string& key) {
  std::string f = key;
  for (auto& c : f)
    if (c == '_') c = '-';
  return "--" + f;
}

std::string env_of(const std::string& key) {
  std::string e = "MOTT_" + key;
  for (auto& c : e) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return e;
}

/// Flag text -> JSON value of the same type as the default.
json coerce(const std::string& text, const json& like) {
  if (like.is_string()) return text;
  if (like.is_boolean()) {
    if (text == "1" || text == "true") return true;
    if (text == "0" || text == "false") return false;
    throw CLI::ValidationError("expected true/false, got '" + text + "'");
  }
  try {
    return like.is_array() ? json::parse(text) : json(io::parse_double(text));
  } catch (const std::exception&) {
    throw CLI::ValidationError("cannot parse '" + text + "'");
  }
}

template <class T>
T get(const json& cfg, const char* key) {
  return cfg.at(key).get<T>();
}

std::uint64_t count(const json& cfg, const char* key) {
  const double v = cfg.at(key).get<double>();
  if (!(v >= 0) || v > 1.8e19) throw ParameterError(std::string(key) + " must be a nonnegative count");
  return static_cast<std::uint64_t>(v);
}

json versions() {
  return {{"mott", kVersion},
          {"compiler", __VERSION__},
          {"cxx_standard", __cplusplus},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR)}};
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_env(const json& cfg, const exp::RunContext& ctx) {
  const double alpha = get<double>(cfg, "alpha");
  auto env = Environment::sample(static_cast<std::int64_t>(count(cfg, "atoms") / 2), alpha, ctx.seed);
  {
    auto f = io::open_out(ctx.out_dir / "env.csv");
    env.write_csv(f);
  }
  double max_gap = 0;
  for (std::int64_t j = env.lo(); j < env.hi(); ++j) max_gap = std::max(max_gap, env.gap(j));
  exp::write_json(ctx.out_dir / "env_summary.json", {{"alpha", alpha},
                                                     {"atoms", env.hi() - env.lo() + 1},
                                                     {"span", {env.pos(env.lo()), env.pos(env.hi())}},
                                                     {"max_gap", max_gap},
                                                     {"max_log_resistance", std::pow(max_gap, alpha)}});
  return 0;
}

int cmd_simulate(const json& cfg, const exp::RunContext& ctx) {
  const double alpha = get<double>(cfg, "alpha"), n = get<double>(cfg, "n");
  const double level = get<double>(cfg, "stop_level");
  auto env = Environment::sample(static_cast<std::int64_t>(std::max<std::uint64_t>(count(cfg, "atoms") / 2, 1)), alpha,
                                 mix64(ctx.seed, 1));
  WalkConfig c;
  c.lambda_eff = get<double>(cfg, "lambda") / n;
  c.max_steps = count(cfg, "max_steps");
  c.max_time = get<double>(cfg, "max_time") > 0 ? get<double>(cfg, "max_time") : kInf;
  c.seed = mix64(ctx.seed, 2);
  const std::uint64_t every = std::max<std::uint64_t>(count(cfg, "every"), 1);
  KernelCache cache(c.lambda_eff, c.tail_tol);

  auto f = io::open_out(ctx.out_dir / "trajectory.csv");
  io::CsvWriter w(f);
  w.header({"step", "time", "index", "position"});
  std::uint64_t k = 0;
  std::int64_t hi = 0, lo = 0, last_i = 0;
  double last_t = 0;
  bool last_written = false;
  const WalkOutcome o = simulate(
      env, cache, c,
      [&](double t, std::int64_t i) {
        last_written = i > hi || i < lo || k % every == 0;
        if (last_written) w.row(k, t, i, env.pos(i));
        hi = std::max(hi, i);
        lo = std::min(lo, i);
        last_t = t;
        last_i = i;
        ++k;
      },
      [&](double, std::int64_t i) { return level > 0 && std::abs(env.pos(i)) >= level; });
  if (!last_written) w.row(k - 1, last_t, last_i, env.pos(last_i));
  f.close();
  {
    auto e = io::open_out(ctx.out_dir / "env.csv");
    env.write_csv(e);
  }
  exp::write_json(ctx.out_dir / "outcome.json", {{"terminal_reason", terminal_name(o.reason)},
                                                 {"steps", o.steps},
                                                 {"end_time", o.end_time},
                                                 {"final_index", o.final_index},
                                                 {"final_position", env.pos(o.final_index)},
                                                 {"max_index", hi},
                                                 {"min_index", lo}});
  return 0;
}

int cmd_records(const json& cfg, const exp::RunContext& ctx) {
  const double alpha = get<double>(cfg, "alpha"), n = get<double>(cfg, "n"), delta = get<double>(cfg, "delta");
  const int K = static_cast<int>(get<double>(cfg, "K"));
  auto env = Environment::sample(static_cast<std::int64_t>(3 * n), alpha, ctx.seed);
  const RecordTable tab = extract_records(env, n, delta, K);
  {
    auto f = io::open_out(ctx.out_dir / "records.csv");
    tab.write_csv(f, env);
  }
  const double lambda_eff = get<double>(cfg, "lambda") / n;
  const AEventReport a = check_A_event(env, tab, lambda_eff);
  json report{{"n", n}, {"delta", delta}, {"K", K}, {"N_const", tab.N_const}, {"A_event", a.holds},
              {"A_conditions",
               {{"space_scaling", a.space_scaling},
                {"separation", a.separation},
                {"nn_plus", a.nn_plus},
                {"nn_minus", a.nn_minus},
                {"pointwise", a.pointwise},
                {"mass_control", a.mass_control}}}};
  const double t = get<double>(cfg, "t");
  if (t > 0) {
    const EEventReport e = check_E_event(env, n, delta, get<double>(cfg, "eta"), K, t, lambda_eff);
    report["E_event"] = e.holds;
    report["barrier_interval"] = {barrier_inverse(env, n, t, Side::minus), barrier_inverse(env, n, t, Side::plus)};
  }
  exp::write_json(ctx.out_dir / "events.json", report);
  return 0;
}

int cmd_network(const json& cfg, const exp::RunContext& ctx) {
  const double alpha = get<double>(cfg, "alpha"), n = get<double>(cfg, "n"), delta = get<double>(cfg, "delta");
  const int k = static_cast<int>(get<double>(cfg, "k"));
  auto env = Environment::sample(static_cast<std::int64_t>(3 * n), alpha, ctx.seed);
  const RecordTable tab = extract_records(env, n, delta, std::max(k, 1));
  const double lambda_eff = get<double>(cfg, "lambda") / n;
  const WeightedNetwork net = build_aux_network(env, tab, k, lambda_eff);
  const Resistance R = effective_resistance(net, {kLeftLabel}, {kRightLabel});
  json out{{"k", k},
           {"vertices", net.size()},
           {"R_eff_left_right", R.value()},
           {"g_k", tab.g_plus(k)},
           {"spectral_gap", spectral_gap(net)},
           {"resistance_diameter", resistance_diameter(net)}};
  if (k >= 1) {
    const auto b = resistance_bounds_check(env, tab, k, lambda_eff);
    out["resistance_bounds"] = {{"ratio_i", b.ratio_i}, {"ratio_ii", b.ratio_ii}, {"ratio_iii", b.ratio_iii},
                                {"C", b.C}, {"holds", b.holds}};
  }
  exp::write_json(ctx.out_dir / "network.json", out);
  return 0;
}

int cmd_limit(const json& cfg, const exp::RunContext& ctx) {
  const double x_max = get<double>(cfg, "x_max");
  const PointMeasure m = sample_poisson_measure(-x_max, x_max, get<double>(cfg, "v_floor"), ctx.seed);
  {
    auto f = io::open_out(ctx.out_dir / "measure.csv");
    m.write_csv(f);
  }
  {
    auto f = io::open_out(ctx.out_dir / "extremal.csv");
    io::CsvWriter w(f);
    w.header({"side", "x", "value"});
    for (bool plus : {true, false}) {
      const StepFunction s = extremal_process(m, plus);
      const std::string side = plus ? "+" : "-";
      w.row(side, 0.0, s.t0_value);
      for (std::size_t k = 0; k < s.jumps.size(); ++k) w.row(side, s.jumps[k], s.values[k]);
    }
  }
  const LimitRecordTable t =
      records_from_measure(m, get<double>(cfg, "delta"), static_cast<int>(get<double>(cfg, "K")));
  auto f = io::open_out(ctx.out_dir / "limit_records.csv");
  t.write_csv(f);
  return 0;
}

int cmd_verify(const json& cfg, const exp::RunContext& ctx) {
  std::vector<int> ks;
  const auto crit = get<double>(cfg, "criterion");
  if (crit > 0) ks.push_back(static_cast<int>(crit));
  else ks = exp::suite(get<std::string>(cfg, "suite"));
  const json acceptance = json::parse(io::read_file(get<std::string>(cfg, "acceptance")));
  bool ok = true;
  for (int k : ks) {
    const json r = exp::run_criterion(k, acceptance, ctx);
    std::cout << exp::summary_line(r) << std::endl;
    ok = ok && r.at("pass").get<bool>();
  }
  return ok ? 0 : 1;
}

int cmd_figure(const json& cfg, const exp::RunContext& ctx) {
  const double alpha = get<double>(cfg, "alpha");
  const std::uint64_t steps = count(cfg, "steps"), stride = count(cfg, "stride");
  const exp::FigureBundle b = exp::make_figure_bundle(alpha, steps, stride, ctx.seed);
  exp::write_figure_bundle(b, ctx.out_dir, ctx.seed, steps, stride);
  std::cout << "alpha " << alpha << ": " << b.outcome.steps << " steps, " << b.rows.size() << " rows, containment "
            << b.containment << '\n';
  return 0;
}

std::vector<Command> commands() {
  const Param alpha{"alpha", 1.5, "exponent alpha > 1"};
  const Param n{"n", 50.0, "scale n"};
  const Param lambda{"lambda", 0.0, "drift; the walk uses lambda / n"};
  const Param delta{"delta", 0.1, "record window fraction delta"};
  return {
      {"env", "sample an environment and dump its atoms", {alpha, {"atoms", 1e4, "number of atoms"}}, cmd_env},
      {"simulate",
       "run one walk and write a trajectory CSV",
       {alpha,
        {"atoms", 1e4, "atoms sampled up front (the window extends on demand)"},
        {"n", 1.0, "scale n (only divides the drift)"},
        lambda,
        {"stop_level", 0.0, "stop once |position| >= level (0: no stop)"},
        {"max_steps", 1e8, "step budget"},
        {"max_time", 0.0, "time budget (0: none)"},
        {"every", 1.0, "keep every m-th event plus every new extremum"}},
       cmd_simulate},
      {"records",
       "extract barrier records and check the typical-environment events",
       {alpha, n, delta, lambda, {"K", 1.0, "number of records K"}, {"t", 0.5, "time for the E event (0: skip)"},
        {"eta", 0.05, "margin eta of the E event"}},
       cmd_records},
      {"network",
       "build the auxiliary network around record k and report resistances",
       {alpha, n, delta, lambda, {"k", 1.0, "record index"}},
       cmd_network},
      {"limit",
       "sample the limiting Poisson measure with its extremal processes and records",
       {{"x_max", 5.0, "half-width of the spatial window"},
        {"v_floor", 1e-3, "smallest atom height kept"},
        delta,
        {"K", 3.0, "number of records"}},
       cmd_limit},
      {"verify",
       "run acceptance criteria against the frozen thresholds",
       {{"suite", "all", "properties, theorems, figure or all"},
        {"criterion", 0.0, "single criterion 1..10 (0: use --suite)"},
        {"acceptance", std::string(MOTT_SOURCE_DIR) + "/config/acceptance.json", "threshold and parameter file"}},
       cmd_verify},
      {"figure",
       "write a space-time figure bundle",
       {alpha, {"steps", 1e7, "walk steps"}, {"stride", 1000.0, "keep every stride-th event plus new extrema"}},
       cmd_figure},
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mott random walk toolkit: simulation, barrier structure and acceptance checks."};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  const auto cmds = commands();
  struct Bound {
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::map<std::string, std::string> values;
  };
  std::map<std::string, Bound> bound;
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : cmds) {
    auto* sub = app.add_subcommand(c.name, c.help);
    auto& b = bound[c.name];
    b.out_dir = "runs/" + c.name;
    sub->add_option("--config", b.config_path, "JSON file with flat key-value parameters")->envname("MOTT_CONFIG");
    sub->add_option("--seed", b.seed, "master seed (default 1, or 'seed' in the config)")->envname("MOTT_SEED");
    sub->add_option("--workers", b.workers, "worker threads, 0 = all cores")->envname("MOTT_WORKERS");
    sub->add_option("--out-dir", b.out_dir, "run directory")->capture_default_str()->envname("MOTT_OUT_DIR");
    for (const auto& p : c.params) {
      const std::string def = p.def.is_string() ? p.def.get<std::string>() : p.def.dump();
      sub->add_option(flag_of(p.name), b.values[p.name], p.help + " [" + def + "]")->envname(env_of(p.name));
    }
    subs.emplace_back(sub, &c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  for (auto [sub, c] : subs) {
    if (!sub->parsed()) continue;
    const Bound& b = bound[c->name];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      json file = json::object();
      if (!b.config_path.empty()) file = json::parse(io::read_file(b.config_path));
      if (!file.is_object()) throw ParameterError("config file must hold a JSON object");
      json cfg = json::object();
      for (const auto& p : c->params) {
        cfg[p.name] = p.def;
        if (file.contains(p.name)) cfg[p.name] = file[p.name];
        if (sub->count(flag_of(p.name))) cfg[p.name] = coerce(b.values.at(p.name), p.def);
      }
      exp::RunContext ctx;
      ctx.seed = b.seed.value_or(file.value("seed", std::uint64_t{1}));
      ctx.workers = b.workers.value_or(file.value("workers", 0u));
      ctx.out_dir = b.out_dir;
      fs::create_directories(ctx.out_dir);
      const int rc = c->run(cfg, ctx);
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      exp::write_json(ctx.out_dir / "manifest.json", {{"command", c->name},
                                                      {"config", cfg},
                                                      {"seed", ctx.seed},
                                                      {"workers", ctx.workers},
                                                      {"versions", versions()},
                                                      {"exit_code", rc},
                                                      {"wall_seconds", wall}});
      return rc;
    } catch (const CLI::ValidationError& e) {
      std::cerr << "mott " << c->name << ": " << e.what() << '\n';
      return 2;
    } catch (const ParameterError& e) {
      std::cerr << "mott " << c->name << ": " << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "mott " << c->name << ": " << e.what() << '\n';
      return 3;
    }
  }
  return 2;
}
