// Reference eigensolvers that see the instance only through a QueryChannel.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qlab/oracle.hpp"
#include "qlab/random.hpp"

namespace qlab {

struct SolverResult {
  Matrix v_hat;                  // d x r, orthonormal
  Index queries_used = 0;
  std::vector<double> rayleigh;  // per iteration: sum of the r selected Ritz/Rayleigh values
  double wall_seconds = 0.0;
  bool partial = false;          // budget ran out before the requested work
  bool rank_reduced = false;     // Krylov block lost rank
  bool breakdown = false;        // Lanczos invariant subspace reached
  bool stopped = false;          // observer asked to stop
  Vector ritz_values;            // final Ritz values, ascending (Krylov solvers)
  std::string note;
};

// Called after every completed iteration with the current estimate and the
// number of queries spent so far. Returning false stops the solver; the result
// is then identical to a run whose budget ended at that iteration.
using IterateObserver = std::function<bool(const Matrix& v_hat, Index queries_used)>;

SolverResult power_method(QueryChannel& ch, Index r, Index iters, Rng& rng,
                          const IterateObserver& observe = nullptr);
// Krylov space [G, MG, ..., M^q G] built from orthonormalized blocks.
SolverResult block_krylov(QueryChannel& ch, Index r, Index q, Rng& rng,
                          const IterateObserver& observe = nullptr);
// q+1 queries, three-term recurrence with full reorthogonalization.
SolverResult lanczos(QueryChannel& ch, Index q, Rng& rng,
                     const IterateObserver& observe = nullptr);
SolverResult random_baseline(QueryChannel& ch, Index r, Rng& rng);

enum class SolverKind { kPowerMethod, kBlockKrylov, kLanczos, kRandom };

SolverKind parse_solver_kind(const std::string& name);
const char* solver_kind_name(SolverKind kind);

// Runs `kind` spending at most `budget` queries (r per block iteration).
SolverResult run_solver(SolverKind kind, QueryChannel& ch, Index r, Index budget,
                        Rng& rng, const IterateObserver& observe = nullptr);

std::string solver_result_json(const SolverResult& res);

}  // namespace qlab
