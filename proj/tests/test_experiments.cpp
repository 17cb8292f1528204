#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mott/experiments.hpp"

using namespace mott;
using namespace mott::exp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("mott_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream f(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(f, line)) {
    std::vector<std::string> r;
    for (auto v : io::split(line)) r.emplace_back(v);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

TEST(Clock, HorizonAndRescaledTimeAreInverse) {
  // oracle: 50 exp(log(25)^1.5)
  EXPECT_NEAR(horizon(50, 0.5, 1.5), 16108.152649993059, 1e-8);
  for (double t : {0.1, 0.5, 2.0}) EXPECT_NEAR(rescaled_time(horizon(50, t, 1.5), 50, 1.5), t, 1e-12 * t + 1e-15);
  EXPECT_EQ(step_budget(100, 3), 10300u);
}

TEST(Exceedance, HandBuiltStaircase) {
  auto env = Environment::finite({-1.0, 0.0, 1.0, 2.5}, 2.0);
  ExtremaRecorder ex;
  ex(0, 0);
  ex(10, 1);
  ex(20, -1);
  ex(30, 2);
  // L(u) = exp(sqrt(log u)) at alpha = 2, n = 1
  const StepFunction f = rescaled_exceedance(ex, env, 1.0, 100.0, Side::plus);
  EXPECT_NEAR(f(0.0), 4.560476571618193, 1e-12);
  EXPECT_NEAR(f(1.0), 6.323251467492561, 1e-12);
  EXPECT_EQ(f(2.5), 100.0);  // never exceeded: capped at t0
  const StepFunction g = rescaled_exceedance(ex, env, 1.0, 5.0, Side::plus);
  EXPECT_NEAR(g(0.5), 4.560476571618193, 1e-12);
  EXPECT_EQ(g(1.5), 5.0);

  const StepFunction m = rescaled_extremum(ex, env, 1.0, 5.0, Side::plus);
  EXPECT_EQ(m(4.0), 0.0);
  EXPECT_EQ(m(4.6), 1.0);
  EXPECT_EQ(m(4.99), 1.0);  // the record at time 30 lies beyond t0
  // minus record at time 20: L(20) = 5.645...
  EXPECT_EQ(rescaled_extremum(ex, env, 1.0, 5.0, Side::minus)(4.9), 0.0);
  EXPECT_EQ(rescaled_extremum(ex, env, 1.0, 6.0, Side::minus)(5.7), -1.0);
}

TEST(PositionLaw, TiltedCdf) {
  EXPECT_EQ(tilted_cdf(0, 1, 0, 0.25), 0.25);
  EXPECT_EQ(tilted_cdf(0, 1, 0.5, -1), 0.0);
  EXPECT_EQ(tilted_cdf(0, 1, 0.5, 2), 1.0);
  EXPECT_NEAR(tilted_cdf(0, 1, 0.5, 0.5), 0.3775406687981455, 1e-15);
  // reflection: lambda -> -lambda on the mirrored interval
  for (double x : {-0.7, -0.2, 0.4})
    EXPECT_NEAR(tilted_cdf(-1, 0.5, 1.3, x), 1 - tilted_cdf(-0.5, 1, -1.3, -x), 1e-14);
  // agrees with the U^lambda sampler by inversion
  for (double u : {0.1, 0.5, 0.9}) EXPECT_NEAR(tilted_cdf(0, 1, 0.5, U_lambda_from_uniform(0, 1, 0.5, u)), u, 1e-13);
}

TEST(PositionLaw, DiscreteKs) {
  DiscreteMeasure m;
  m.x = {0.0, 1.0, 2.0};
  m.mass = {1.0, 1.0, 2.0};
  EXPECT_NEAR(ks_discrete({0.0, 1.0, 2.0, 2.0}, m), 0.0, 1e-15);
  EXPECT_NEAR(ks_discrete({2.0, 2.0, 2.0, 2.0}, m), 0.5, 1e-15);
  EXPECT_NEAR(ks_discrete({0.0, 0.0, 0.0, 0.0}, m), 0.75, 1e-15);
  EXPECT_THROW(ks_discrete({}, m), ParameterError);
}

TEST(Report, ChecksAndVerdict) {
  Report r("x", json::object(), 3);
  EXPECT_TRUE(r.check("a", 1.0, "<=", 1.0));
  EXPECT_FALSE(r.check("b", 1.0, "<", 1.0));
  EXPECT_THROW(r.check("c", 1.0, "==", 1.0), ParameterError);
  json j = r.finish();
  EXPECT_FALSE(j["pass"].get<bool>());
  EXPECT_EQ(j["checks"].size(), 2u);
  j["criterion"] = 4;
  j["title"] = "t";
  EXPECT_EQ(summary_line(j).rfind("C4 FAIL t", 0), 0u);
}

TEST(Report, OptReadsTypedKeys) {
  const json cfg{{"n", 5}, {"name", "a"}};
  EXPECT_EQ(opt(cfg, "n", 1.0), 5.0);
  EXPECT_EQ(opt(cfg, "missing", 7), 7);
  EXPECT_THROW(opt(cfg, "name", 1.0), ParameterError);
}

TEST(Bootstrap, MedianDifferenceCi) {
  std::vector<double> a, b;
  for (int i = 0; i < 200; ++i) {
    a.push_back(i);
    b.push_back(i + 50);
  }
  auto ci = bootstrap_median_diff_ci(a, b, 0.9, 1000, 5);
  EXPECT_TRUE(ci.contains(50));
  EXPECT_GT(ci.lo, 30);
  EXPECT_EQ(ci.lo, bootstrap_median_diff_ci(a, b, 0.9, 1000, 5).lo);
}

TEST(Suites, NamesAndCriteria) {
  EXPECT_EQ(suite("properties"), (std::vector<int>{1, 2, 3, 4, 5}));
  EXPECT_EQ(suite("all").size(), 10u);
  EXPECT_THROW(suite("nope"), ParameterError);
  EXPECT_THROW(criterion(11), ParameterError);
  for (int k = 1; k <= 10; ++k) EXPECT_EQ(criterion(k).number, k);
}

TEST(Localisation, TallyAddsUp) {
  json cfg{{"n_grid", {10, 20}}, {"replicates", 12}, {"gate_n", 10}, {"frequency_floor", 0.0}, {"e_event", {{"K", 1}}}};
  RunContext ctx;
  ctx.seed = 4;
  ctx.workers = 1;
  const json r = run_localisation(cfg, ctx);
  for (const auto& p : r["stats"]["per_n"]) {
    const auto& t = p["tally"];
    EXPECT_EQ(t["completed"].get<int>() + t["censored"].get<int>() + t["excluded"].get<int>(), 12);
    EXPECT_EQ(t["replicates"].get<int>(), 12);
  }
  // worker count does not change the report
  ctx.workers = 3;
  EXPECT_EQ(run_localisation(cfg, ctx).dump(), r.dump());
}

TEST(Criteria, ReportWrittenAndReproducible) {
  const auto dir = scratch("criteria");
  json config{{"identities", {{"alphas", {2.0}}, {"grid_points", 10}}}};
  RunContext ctx;
  ctx.seed = 9;
  ctx.out_dir = dir;
  const json r = run_criterion(2, config, ctx);
  EXPECT_TRUE(r["pass"].get<bool>());
  const std::string first = io::read_file(dir / "identities.json");
  run_criterion(2, config, ctx);
  EXPECT_EQ(io::read_file(dir / "identities.json"), first);
}

// ---------------------------------------------------------------------------
// Figure bundles: the interface consumed by the renderer

class FigureBundleTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(scratch("figure"));
    bundle_ = new FigureBundle(make_figure_bundle(1.5, 200000, 100, 7));
    write_figure_bundle(*bundle_, *dir_, 7, 200000, 100);
  }
  static void TearDownTestSuite() {
    delete bundle_;
    delete dir_;
  }
  static fs::path* dir_;
  static FigureBundle* bundle_;
};
fs::path* FigureBundleTest::dir_ = nullptr;
FigureBundle* FigureBundleTest::bundle_ = nullptr;

TEST_F(FigureBundleTest, Headers) {
  EXPECT_EQ(read_csv(*dir_ / "trajectory.csv").at(0), (std::vector<std::string>{"step", "time", "position", "L_time"}));
  EXPECT_EQ(read_csv(*dir_ / "atoms.csv").at(0), (std::vector<std::string>{"index", "position"}));
  EXPECT_EQ(read_csv(*dir_ / "barriers.csv").at(0), (std::vector<std::string>{"side", "level", "position"}));
  const json meta = json::parse(io::read_file(*dir_ / "metadata.json"));
  for (const char* k : {"alpha", "seed", "steps_done", "stride", "containment_fraction", "files"})
    EXPECT_TRUE(meta.contains(k)) << k;
  EXPECT_FALSE(meta.contains("wall_seconds"));
}

TEST_F(FigureBundleTest, TrajectoryRows) {
  const auto rows = read_csv(*dir_ / "trajectory.csv");
  ASSERT_GT(rows.size(), 2000u);
  EXPECT_EQ(rows[1][0], "0");
  double prev_t = -1, prev_y = -1;
  std::uint64_t prev_step = 0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto step = static_cast<std::uint64_t>(io::parse_int(rows[k][0]));
    const double t = io::parse_double(rows[k][1]), y = io::parse_double(rows[k][3]);
    if (k > 1) EXPECT_GT(step, prev_step);
    EXPECT_GE(t, prev_t);
    EXPECT_GE(y, prev_y);  // L is nondecreasing
    EXPECT_NEAR(y, slow_vary_L(t, 1.5), 1e-12 * std::max(1.0, y));
    prev_step = step;
    prev_t = t;
    prev_y = y;
  }
  EXPECT_EQ(prev_step, bundle_->outcome.steps);  // last event kept
}

TEST_F(FigureBundleTest, BarrierStaircases) {
  const auto rows = read_csv(*dir_ / "barriers.csv");
  double last_plus = -kInf, last_minus = kInf, level_plus = -1, level_minus = -1;
  int first_plus = 0, first_minus = 0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double level = io::parse_double(rows[k][1]), x = io::parse_double(rows[k][2]);
    if (rows[k][0] == "+") {
      if (first_plus++ == 0) EXPECT_EQ(level, 0.0);
      EXPECT_GT(level, level_plus);
      EXPECT_GE(x, last_plus);
      level_plus = level;
      last_plus = x;
    } else {
      ASSERT_EQ(rows[k][0], "-");
      if (first_minus++ == 0) EXPECT_EQ(level, 0.0);
      EXPECT_GT(level, level_minus);
      EXPECT_LE(x, last_minus);
      level_minus = level;
      last_minus = x;
    }
  }
  EXPECT_GE(first_plus, 2);
  EXPECT_GE(first_minus, 2);
}

TEST_F(FigureBundleTest, AtomsCoverTrajectory) {
  const auto atoms = read_csv(*dir_ / "atoms.csv");
  const double lo = io::parse_double(atoms[1][1]), hi = io::parse_double(atoms.back()[1]);
  for (const auto& r : bundle_->rows) {
    EXPECT_GE(r.position, lo);
    EXPECT_LE(r.position, hi);
  }
  for (std::size_t k = 2; k < atoms.size(); ++k)
    EXPECT_LT(io::parse_double(atoms[k - 1][1]), io::parse_double(atoms[k][1]));
  EXPECT_GE(bundle_->containment, 0.9);
}

TEST_F(FigureBundleTest, SameSeedSameBytes) {
  const auto other = scratch("figure_again");
  write_figure_bundle(make_figure_bundle(1.5, 200000, 100, 7), other, 7, 200000, 100);
  for (const char* f : {"trajectory.csv", "atoms.csv", "barriers.csv", "metadata.json"})
    EXPECT_EQ(io::read_file(*dir_ / f), io::read_file(other / f)) << f;
  write_figure_bundle(make_figure_bundle(1.5, 200000, 100, 8), other, 8, 200000, 100);
  EXPECT_NE(io::read_file(*dir_ / "trajectory.csv"), io::read_file(other / "trajectory.csv"));
}

TEST(FigureBundle, RejectsZeroStride) { EXPECT_THROW(make_figure_bundle(1.5, 10, 0, 1), ParameterError); }
