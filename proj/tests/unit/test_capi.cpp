#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "qlab/qlab.h"

namespace fs = std::filesystem;

TEST_CASE("scalar functions and error reporting") {
  double l = 0.0, g = 0.0;
  CHECK(qlab_lambda_from_gap(0.5, &l) == QLAB_OK);
  CHECK(l == doctest::Approx(2.0 + std::sqrt(3.0)));
  CHECK(qlab_gap_from_lambda(6.0, &g) == QLAB_OK);
  CHECK(g == doctest::Approx(25.0 / 37.0));
  CHECK(qlab_lambda_from_gap(2.0, &l) == QLAB_OUT_OF_RANGE);
  CHECK(std::strlen(qlab_last_error()) > 0);
  CHECK(std::string(qlab_status_string(QLAB_OUT_OF_RANGE)) != "unknown");
  double s = 0.0;
  CHECK(qlab_semicircle_stieltjes(2.5, &s) == QLAB_OK);
  CHECK(s == doctest::Approx(0.5));
  CHECK(qlab_semicircle_stieltjes(1.0, &s) == QLAB_OUT_OF_DOMAIN);
  CHECK(qlab_lambda_from_gap(0.5, nullptr) == QLAB_NULL_HANDLE);
}

TEST_CASE("instance, session, solver and finalize") {
  qlab_instance* inst = nullptr;
  REQUIRE(qlab_instance_create(100, 1, 0.5, 7, &inst) == QLAB_OK);
  qlab_instance_info info{};
  CHECK(qlab_instance_info_get(inst, &info) == QLAB_OK);
  CHECK(info.d == 100);
  CHECK(info.r == 1);

  qlab_session* s = nullptr;
  REQUIRE(qlab_session_open(inst, 40, QLAB_MODE_RAW, 1, &s) == QLAB_OK);
  std::vector<double> v(100, 0.0), w(100);
  v[0] = 1.0;
  CHECK(qlab_session_query(s, v.data(), w.data()) == QLAB_OK);
  v[0] = 2.0;
  CHECK(qlab_session_query(s, v.data(), w.data()) == QLAB_INVALID_ARGUMENT);
  std::vector<double> vhat(100);
  CHECK(qlab_solver_run(s, "block_krylov", 1, 30, 3, vhat.data()) == QLAB_OK);
  int64_t used = 0;
  CHECK(qlab_session_queries_used(s, &used) == QLAB_OK);
  CHECK(used == 31);
  qlab_evaluation ev{};
  CHECK(qlab_session_finalize(s, vhat.data(), 1, 1.0 / 12.0, &ev) == QLAB_OK);
  CHECK(ev.success == 1);
  CHECK(qlab_solver_run(s, "unknown", 1, 5, 3, nullptr) == QLAB_INVALID_ARGUMENT);

  const fs::path tmp = fs::temp_directory_path() / "qlab_capi";
  fs::create_directories(tmp);
  CHECK(qlab_session_dump_transcript(s, (tmp / "t.jsonl").c_str()) == QLAB_OK);
  CHECK(qlab_instance_save(inst, (tmp / "i.qlab").c_str()) == QLAB_OK);
  qlab_instance* back = nullptr;
  CHECK(qlab_instance_load((tmp / "i.qlab").c_str(), &back) == QLAB_OK);
  qlab_instance_info info2{};
  qlab_instance_info_get(back, &info2);
  CHECK(info2.lambda == info.lambda);
  CHECK(qlab_instance_load((tmp / "missing.qlab").c_str(), &back) == QLAB_IO);

  qlab_session_destroy(s);
  qlab_instance_destroy(inst);
  qlab_instance_destroy(back);
  qlab_session_destroy(nullptr);
}

TEST_CASE("batched rounds through the C API") {
  qlab_instance* inst = nullptr;
  REQUIRE(qlab_instance_create(10, 1, 0.3, 1, &inst) == QLAB_OK);
  qlab_session* s = nullptr;
  REQUIRE(qlab_session_open(inst, 1, QLAB_MODE_PROJECTED, 2, &s) == QLAB_OK);
  std::vector<double> block(20, 0.0), out(20);
  block[0] = 1.0;
  block[10 + 1] = 1.0;
  CHECK(qlab_session_query_round(s, block.data(), out.data()) == QLAB_OK);
  CHECK(out[0] == doctest::Approx(out[0]));
  CHECK(qlab_session_query_round(s, block.data(), out.data()) == QLAB_BUDGET_EXHAUSTED);
  qlab_session_destroy(s);
  qlab_instance_destroy(inst);
}

TEST_CASE("f-divergence through the C API") {
  const double mu[] = {0.5, 0.5}, nu[] = {0.25, 0.75};
  double out = 0.0;
  CHECK(qlab_f_divergence(mu, nu, 2, "kl", 0.0, &out) == QLAB_OK);
  CHECK(out == doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0)));
  CHECK(qlab_f_divergence(mu, nu, 2, "tv", 0.0, &out) == QLAB_INVALID_ARGUMENT);
}

TEST_CASE("configuration handles") {
  qlab_config* cfg = nullptr;
  CHECK(qlab_config_parse("[experiment]\nkind = verify\n", &cfg) == QLAB_PARSE);
  CHECK(cfg == nullptr);
  REQUIRE(qlab_config_parse("[experiment]\nseed = 5\n", &cfg) == QLAB_OK);
  CHECK(qlab_config_set(cfg, "verify", "phi_min.n", "30") == QLAB_OK);
  CHECK(qlab_config_set(cfg, "experiment", "epsilon", "3") == QLAB_OUT_OF_RANGE);
  size_t needed = 0;
  CHECK(qlab_config_serialize(cfg, nullptr, 0, &needed) == QLAB_OK);
  std::string text(needed, '\0');
  CHECK(qlab_config_serialize(cfg, text.data(), needed, &needed) == QLAB_OK);
  CHECK(text.find("phi_min.n = 30") != std::string::npos);
  CHECK(text.find("epsilon = 0.0833") != std::string::npos);
  char hash[17];
  CHECK(qlab_config_hash(cfg, hash) == QLAB_OK);
  CHECK(std::strlen(hash) == 16);

  const fs::path dir = fs::temp_directory_path() / "qlab_capi_verify";
  fs::remove_all(dir);
  int failed = -1;
  CHECK(qlab_run_verify(cfg, "phi_min", dir.c_str(), &failed) == QLAB_OK);
  CHECK(failed == 0);
  CHECK(fs::exists(dir / "summary.csv"));
  CHECK(qlab_run_report(cfg, dir.c_str()) == QLAB_OK);
  CHECK(qlab_run_verify(cfg, "bogus", dir.c_str(), &failed) == QLAB_INVALID_ARGUMENT);
  qlab_config_destroy(cfg);
}
