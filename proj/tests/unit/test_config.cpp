#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "qlab/config.hpp"
#include "qlab/error.hpp"
#include "qlab/experiments.hpp"

using namespace qlab;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qlab_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("parse a full configuration") {
  const std::string text = R"(
# comment
[experiment]
kind = sweep
seed = 42        ; trailing comment
epsilon = 0.1
workers = 2
out = results

[grid]
d = 100, 200
r = 1,2
gap = 0.4, 0.1
solver = block_krylov
budget = 50
batch = 1, 2

[trials]
n = 3

[verify]
claims = gap_algebra, phi_min
phi_min.n = 20
)";
  const ExperimentConfig cfg = parse_config(text);
  CHECK(cfg.kind == "sweep");
  CHECK(cfg.seed == 42);
  CHECK(cfg.epsilon == 0.1);
  CHECK(cfg.workers == 2);
  CHECK(cfg.d == std::vector<Index>{100, 200});
  CHECK(cfg.r == std::vector<Index>{1, 2});
  CHECK(cfg.gap == std::vector<double>{0.4, 0.1});
  CHECK(cfg.batch == std::vector<Index>{1, 2});
  CHECK(cfg.trials == 3);
  CHECK(cfg.claims == std::vector<std::string>{"gap_algebra", "phi_min"});
  CHECK(cfg.params.at("phi_min.n") == "20");
}

TEST_CASE("invalid configurations are rejected") {
  CHECK_THROWS_AS(parse_config("[experiment]\nkind = verify\n"), Error);  // no seed
  CHECK_THROWS_AS(parse_config("[experiment]\nseed = 1\nepsilon = 1.5\n"), Error);
  CHECK_THROWS_AS(parse_config("[experiment]\nseed = 1\n[grid]\ngap = \n"), Error);
  CHECK_THROWS_AS(parse_config("[experiment]\nseed = x\n"), Error);
  CHECK_THROWS_AS(parse_config("[experiment]\nseed = 1\nbogus = 2\n"), Error);
  CHECK_THROWS_AS(parse_config("[nowhere]\nseed = 1\n"), Error);
  CHECK_THROWS_AS(parse_config("[experiment]\nseed = 1\nkind = dance\n"), Error);
  CHECK_THROWS_AS(parse_config("[experiment]\nseed = 1\n[grid]\nd = 9000\n"), Error);
}

TEST_CASE("round trip parse -> serialize -> parse is the identity") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.001, 0.999);
  for (int t = 0; t < 50; ++t) {
    ExperimentConfig cfg;
    cfg.seed = rng();
    cfg.epsilon = u(rng);
    cfg.workers = 1 + rng() % 4;
    cfg.gap = {u(rng), u(rng)};
    cfg.d = {static_cast<Index>(10 + rng() % 1000)};
    cfg.trials = 1 + rng() % 9;
    cfg.claims = {"eigengap"};
    cfg.params["eigengap.d"] = std::to_string(rng() % 100 + 10);
    const ExperimentConfig back = parse_config(serialize_config(cfg));
    CHECK(back == cfg);
    CHECK(serialize_config(back) == serialize_config(cfg));
    CHECK(config_hash(back) == config_hash(cfg));
  }
}

TEST_CASE("config hash changes with content") {
  ExperimentConfig a, b;
  b.seed = 2;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("fit recovers a planted exponent and honors censoring") {
  std::vector<SweepCell> cells;
  for (double g : {0.4, 0.1, 0.025}) {
    SweepCell c;
    c.solver = "s";
    c.d = 100;
    c.r = 1;
    c.budget = 10000;
    c.gap = g;
    c.median = 3.0 * std::pow(g, -0.5);
    cells.push_back(c);
  }
  auto fits = fit_sweep(cells);
  REQUIRE(fits.size() == 1);
  CHECK(fits[0].alpha == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(fits[0].points == 3);
  cells[2].median_censored = true;
  fits = fit_sweep(cells);
  CHECK(std::isnan(fits[0].alpha));
}

TEST_CASE("small sweep writes provenance-tagged tables") {
  ExperimentConfig cfg;
  cfg.kind = "sweep";
  cfg.seed = 3;
  cfg.d = {150};
  cfg.gap = {0.5, 0.3, 0.2};
  cfg.solver = {"block_krylov", "power_method"};
  cfg.budget = {200};
  cfg.trials = 3;
  const fs::path dir = scratch("sweep");
  cfg.out = dir.string();
  const SweepResult res = run_sweep(cfg);
  CHECK(res.cells.size() == 6);
  for (const auto& c : res.cells) {
    CHECK(c.censored == 0);
    CHECK(c.q1 <= c.median);
    CHECK(c.median <= c.q3);
  }
  write_sweep_outputs(cfg, res, dir.string());
  const std::string scaling = read_file(dir / "scaling.csv");
  CHECK(scaling.rfind("# config_hash=" + config_hash(cfg) + " seed=3", 0) == 0);
  CHECK(read_file(dir / "fits.csv").find("block_krylov") != std::string::npos);

  // Parallel execution merges to the same table.
  ExperimentConfig par = cfg;
  par.workers = 3;
  const SweepResult res2 = run_sweep(par);
  for (std::size_t i = 0; i < res.cells.size(); ++i) CHECK(res2.cells[i].queries == res.cells[i].queries);

  const std::string md = run_report(cfg, dir.string());
  CHECK(md.find("Gap exponent fits") != std::string::npos);
  CHECK(fs::exists(dir / "report.md"));
}

TEST_CASE("censored sweep cells") {
  ExperimentConfig cfg;
  cfg.d = {200};
  cfg.gap = {0.05};
  cfg.solver = {"power_method"};
  cfg.budget = {2};
  cfg.trials = 2;
  const SweepResult res = run_sweep(cfg);
  CHECK(res.cells[0].censored == 2);
  CHECK(res.cells[0].median_censored);
  CHECK(res.cells[0].median == 2.0);
}

TEST_CASE("verify registry, filtering and determinism") {
  const auto names = registered_claims();
  for (const char* must : {"gap_algebra", "eigengap", "stieltjes", "semicircle_identity",
                           "hanson_wright", "conditional_likelihood", "growth_law",
                           "determinant_recursion", "f_divergence_dpi", "phi_min", "linearity",
                           "normalization", "bayes_bound", "gaussian_moment", "small_ball"})
    CHECK(std::find(names.begin(), names.end(), must) != names.end());

  ExperimentConfig cfg;
  cfg.seed = 9;
  cfg.params["phi_min.n"] = "50";
  const VerifySummary one = run_verify(cfg, "phi_min");
  REQUIRE(one.reports.size() == 1);
  CHECK(one.reports[0].claim == "phi_min");
  CHECK(one.hard_failures == 0);

  const fs::path d1 = scratch("v1"), d2 = scratch("v2");
  write_verify_outputs(cfg, run_verify(cfg, "phi_min"), d1.string());
  write_verify_outputs(cfg, run_verify(cfg, "phi_min"), d2.string());
  CHECK(read_file(d1 / "summary.csv") == read_file(d2 / "summary.csv"));
  CHECK(read_file(d1 / "reports.jsonl").find("config_hash") != std::string::npos);

  CHECK_THROWS_AS(run_verify(cfg, "no_such_claim"), Error);
  ExperimentConfig bad = cfg;
  bad.params["nonsense.n"] = "3";
  CHECK_THROWS_AS(run_verify(bad, "phi_min"), Error);
}

TEST_CASE("claim errors are captured, not fatal") {
  ExperimentConfig cfg;
  cfg.params["norm_bound.d"] = "10";  // below the regime floor
  const VerifySummary s = run_verify(cfg, "norm_bound");
  REQUIRE(s.reports.size() == 1);
  CHECK(s.reports[0].status == TrialStatus::kError);
  CHECK(s.hard_failures == 1);
}

TEST_CASE("gen writes instances and a manifest") {
  ExperimentConfig cfg;
  cfg.kind = "gen";
  cfg.d = {20};
  cfg.gap = {0.3};
  cfg.trials = 2;
  const fs::path dir = scratch("gen");
  const auto paths = run_gen(cfg, dir.string());
  CHECK(paths.size() == 2);
  for (const auto& p : paths) CHECK(fs::exists(p));
  CHECK(read_file(dir / "manifest.csv").find("lambda") != std::string::npos);
}
