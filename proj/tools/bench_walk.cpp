// Walk throughput on a sampled environment: prints events per second.
#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "mott/walk.hpp"

int main(int argc, char** argv) {
  const double alpha = argc > 1 ? std::atof(argv[1]) : 1.5;
  const auto steps = static_cast<std::uint64_t>(argc > 2 ? std::atof(argv[2]) : 5e7);
  auto env = mott::Environment::sample(1000, alpha, 12345);
  mott::WalkConfig cfg;
  cfg.max_steps = steps;
  cfg.seed = 99;
  mott::KernelCache cache(cfg.lambda_eff, cfg.tail_tol);
  std::int64_t hi = 0;
  auto t0 = std::chrono::steady_clock::now();
  auto out = mott::simulate(env, cache, cfg, [&](double, std::int64_t i) { hi = i > hi ? i : hi; });
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("alpha=%.2f steps=%llu time=%.4g sites=%zu max=%lld  %.3g events/s\n", alpha,
              static_cast<unsigned long long>(out.steps), out.end_time, cache.sites(), static_cast<long long>(hi),
              out.steps / secs);
}
