// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "mott/experiments.hpp"

#ifndef MOTT_SOURCE_DIR
#define MOTT_SOURCE_DIR "."
#endif

int main(int argc, char** argv) {
  using namespace mott::exp;
  CLI::App app{"Runs the acceptance criteria against the frozen thresholds."};
  std::string which = "all";
  std::string config_path = std::string(MOTT_SOURCE_DIR) + "/config/acceptance.json";
  std::string out_dir = "acceptance_runs";
  std::optional<std::uint64_t> seed;
  unsigned workers = 0;
  app.add_option("--criterion", which, "criterion number 1..10 or 'all'");
  app.add_option("--config", config_path, "threshold and parameter file");
  app.add_option("--out-dir", out_dir, "where reports are written");
  app.add_option("--seed", seed, "override the master seed in the config");
  app.add_option("--workers", workers, "worker threads (0: all cores)");
  CLI11_PARSE(app, argc, argv);

  try {
    const json config = json::parse(mott::io::read_file(config_path));
    RunContext ctx;
    ctx.seed = seed.value_or(config.value("seed", std::uint64_t{1}));
    ctx.workers = workers ? workers : config.value("workers", 0u);
    ctx.out_dir = out_dir;
    std::vector<int> ks;
    if (which == "all") ks = suite("all");
    else ks.push_back(std::stoi(which));
    bool ok = true;
    for (int k : ks) {
      const json r = run_criterion(k, config, ctx);
      std::cout << summary_line(r) << std::endl;
      ok = ok && r.at("pass").get<bool>();
    }
    return ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "acceptance: " << e.what() << '\n';
    return 2;
  }
}
