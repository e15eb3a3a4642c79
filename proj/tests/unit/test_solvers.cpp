#include <cmath>

#include "doctest.h"
#include "qlab/error.hpp"
#include "qlab/oracle.hpp"
#include "qlab/random.hpp"
#include "qlab/solvers.hpp"

using namespace qlab;

namespace {

double top_abs_eig(const Matrix& m) {
  const Vector w = symmetric_eigenvalues(m);
  return std::max(std::abs(w(0)), std::abs(w(w.size() - 1)));
}

}  // namespace

TEST_CASE("solvers respect the budget and return orthonormal frames") {
  InstancePtr inst = make_instance(200, 2, 0.3, 1);
  for (SolverKind k : {SolverKind::kPowerMethod, SolverKind::kBlockKrylov,
                       SolverKind::kRandom}) {
    OracleSession s(inst, 30, OracleMode::kRaw);
    Rng rng(2);
    const SolverResult res = run_solver(k, s.channel(), 2, 30, rng);
    CHECK(res.v_hat.cols() == 2);
    CHECK(orthonormality_defect(res.v_hat) < 1e-10);
    CHECK(s.queries_used() <= 30);
    CHECK(res.queries_used == s.queries_used());
  }
}

TEST_CASE("block Krylov and power method converge on a spiked matrix") {
  InstancePtr inst = make_instance(300, 1, 0.5, 4);
  const SpectralCache cache(*inst);
  for (SolverKind k : {SolverKind::kPowerMethod, SolverKind::kBlockKrylov,
                       SolverKind::kLanczos}) {
    OracleSession s(inst, 60, OracleMode::kRaw);
    Rng rng(5);
    const SolverResult res = run_solver(k, s.channel(), 1, 60, rng);
    CHECK(evaluate_frame(*inst, cache, res.v_hat, 1.0 / 12.0).success);
  }
}

TEST_CASE("Lanczos and block Krylov agree on Ritz values") {
  InstancePtr inst = make_instance(150, 1, 0.3, 7);
  Rng a(3), b(3);
  OracleSession s1(inst, 20, OracleMode::kRaw), s2(inst, 20, OracleMode::kRaw);
  const SolverResult lz = lanczos(s1.channel(), 19, a);
  const SolverResult bk = block_krylov(s2.channel(), 1, 19, b);
  REQUIRE(lz.ritz_values.size() == bk.ritz_values.size());
  CHECK((lz.ritz_values - bk.ritz_values).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("Ritz values interlace the spectrum") {
  InstancePtr inst = make_instance(100, 1, 0.3, 9);
  const Vector w = symmetric_eigenvalues(inst->materialize());
  OracleSession s(inst, 15, OracleMode::kRaw);
  Rng rng(1);
  const SolverResult res = lanczos(s.channel(), 14, rng);
  CHECK(res.ritz_values.maxCoeff() <= w.maxCoeff() + 1e-10);
  CHECK(res.ritz_values.minCoeff() >= w.minCoeff() - 1e-10);
}

TEST_CASE("Krylov objective magnitude is non-decreasing in the iteration count") {
  InstancePtr inst = make_instance(200, 1, 0.2, 11);
  OracleSession s(inst, 40, OracleMode::kRaw);
  Rng rng(4);
  const SolverResult res = block_krylov(s.channel(), 1, 39, rng);
  for (std::size_t i = 1; i < res.rayleigh.size(); ++i)
    CHECK(std::abs(res.rayleigh[i]) >= std::abs(res.rayleigh[i - 1]) - 1e-10);
  CHECK(std::abs(res.rayleigh.back()) <= top_abs_eig(inst->materialize()) + 1e-10);
}

TEST_CASE("observer stop equals a shorter budget") {
  InstancePtr inst = make_instance(120, 1, 0.3, 2);
  Index stop_at = 0;
  Matrix stopped_v;
  {
    OracleSession s(inst, 30, OracleMode::kRaw);
    Rng rng(8);
    const SolverResult res = block_krylov(
        s.channel(), 1, 29, rng, [&](const Matrix& v, Index used) {
          if (used >= 10) {
            stop_at = used;
            stopped_v = v;
            return false;
          }
          return true;
        });
    CHECK(res.stopped);
    CHECK(res.queries_used == stop_at);
  }
  OracleSession s(inst, stop_at, OracleMode::kRaw);
  Rng rng(8);
  const SolverResult res = block_krylov(s.channel(), 1, stop_at - 1, rng);
  CHECK((res.v_hat * res.v_hat.transpose() - stopped_v * stopped_v.transpose()).norm() < 1e-10);
}

TEST_CASE("solvers run over a projected channel through reconstruction") {
  InstancePtr inst = make_instance(150, 1, 0.5, 3);
  const SpectralCache cache(*inst);
  OracleSession s(inst, 40, OracleMode::kProjected);
  RawReconstruction raw(s.channel());
  Rng rng(6);
  const SolverResult res = run_solver(SolverKind::kBlockKrylov, raw, 1, 40, rng);
  CHECK(evaluate_frame(*inst, cache, res.v_hat, 1.0 / 12.0).success);
}

TEST_CASE("batched block Krylov") {
  InstancePtr inst = make_instance(150, 2, 0.4, 3);
  OracleSession s(inst, 10, OracleMode::kRaw, 2);
  Rng rng(6);
  const SolverResult res = run_solver(SolverKind::kBlockKrylov, s.channel(), 2, 20, rng);
  CHECK(s.rounds_used() <= 10);
  CHECK(orthonormality_defect(res.v_hat) < 1e-10);
}

TEST_CASE("solver names round trip") {
  for (SolverKind k : {SolverKind::kPowerMethod, SolverKind::kBlockKrylov,
                       SolverKind::kLanczos, SolverKind::kRandom})
    CHECK(parse_solver_kind(solver_kind_name(k)) == k);
  CHECK_THROWS_AS(parse_solver_kind("nope"), Error);
}
