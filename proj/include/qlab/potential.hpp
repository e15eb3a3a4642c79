// Information potentials, threshold schedules and the determinant recursion.
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "qlab/oracle.hpp"
#include "qlab/random.hpp"
#include "qlab/solvers.hpp"
#include "qlab/stats.hpp"

namespace qlab {

// ‖Vᵀu‖².
double phi(const Matrix& v, const Vector& u);

// τ_k = λ^{4k} τ₀, τ₀ = 32/gap · (log(1/δ) + gap^{-1/2}), k = 0..k_max.
std::vector<double> threshold_schedule(double delta, double gap, double lambda,
                                       Index k_max);

// 26 r λ^{9k/r'} log(20d²) log(e/δ) / (d gap²).
double rank_r_envelope(Index k, Index r_prime, Index r, Index d, double gap,
                       double lambda, double delta);

// Tail bound exp(-(√τ - √(2(k+1)))²/2) for V ∈ Stief(d, k+1), τ ≥ 2(k+1).
double small_ball_bound(double tau, Index k);

// A = d·UᵀVVᵀU + ΔI with its inverse and determinant.
class DetState {
 public:
  DetState(Index r, double delta_offset);

  Index rank() const { return a_.rows(); }
  double offset() const { return offset_; }
  const Matrix& matrix() const { return a_; }
  const Matrix& inverse() const { return inv_; }
  double det() const { return det_; }
  Index steps() const { return steps_; }

  // Recomputes inverse and determinant from A by Cholesky.
  void refresh();

 private:
  friend DetState det_step(DetState state, const Vector& x);
  Matrix a_;
  Matrix inv_;
  double det_ = 0.0;
  double offset_ = 0.0;
  Index steps_ = 0;
};

// Rank-one update with x = √d·Uᵀv_k; dense refresh every kRefreshPeriod steps
// or when the Sherman-Morrison update leaves A numerically indefinite.
inline constexpr Index kRefreshPeriod = 64;
DetState det_step(DetState state, const Vector& x);

struct PotentialRecord {
  Index k = 0;
  double phi = 0.0;   // largest eigenvalue of the overlap matrix (= uᵀVVᵀu for r = 1)
  Matrix overlap;     // UᵀV_kV_kᵀU
  double det_state = 0.0;
  double tau = 0.0;
  double envelope = 0.0;  // NaN outside the rank-r regime
  bool violated = false;
};

struct PotentialTrace {
  Index d = 0;
  Index r = 0;
  Index batch = 1;
  std::vector<PotentialRecord> records;  // k = 0 .. K
};

struct TraceOptions {
  double delta = 0.1;
  double det_offset = 1.0;  // Δ
  Index r_prime = 1;
  bool with_envelope = false;
};

// Overlaps of the session frame with the planted U after every query.
// In batch mode thresholds are B·τ_k, checked at k = B·round.
PotentialTrace trace_session(const OracleSession& session,
                             const TraceOptions& options = {});

// Overlap sequence for an explicit query frame V (d x K) and spike U.
PotentialTrace trace_frame(const Matrix& v, const Matrix& u, double lambda,
                           double gap, const TraceOptions& options);

void write_trace_csv(std::ostream& os, const PotentialTrace& trace);

struct GeometricEventResult {
  bool holds = false;
  double max_ratio = 0.0;   // largest generalized eigenvalue over k
  Index k_checked = 0;
  bool det_conclusion = true;   // det(A_k) ≤ λ̃^k Δ^r for all k (relative 1e-9)
  double worst_det_ratio = 0.0; // max det(A_k) / (λ̃^k Δ^r)
};

// overlaps[k] = UᵀV_kV_kᵀU for k = 0..K (overlaps[0] is typically 0).
GeometricEventResult geometric_event_check(const std::vector<Matrix>& overlaps,
                                           Index d, double lambda_tilde,
                                           double delta_offset, Index k_max);
GeometricEventResult geometric_event_check(const PotentialTrace& trace,
                                           double lambda_tilde,
                                           double delta_offset, Index k_max);

// (det/Δ^{r-r'})^{1/r'} - Δ: an upper bound on λ_{r'}(A - ΔI).
double det_eigen_bridge(double det, double delta_offset, Index r, Index r_prime);

// Builds a query strategy for a given instance. Honest solvers ignore the
// instance; instrumentation strategies (e.g. a cheat) may read it.
using SolverFn = std::function<void(QueryChannel&, Rng&)>;
using SolverBinder = std::function<SolverFn(const DeformedWignerInstance&)>;

SolverBinder honest_solver(SolverKind kind, Index r, Index budget);

struct GrowthTrialParams {
  Index d = 4000;
  double gap = 0.2;
  double delta = 0.1;
  Index trials = 200;
  Index budget_rounds = 20;
  Index batch = 1;
  OracleMode mode = OracleMode::kRaw;
  std::uint64_t seed = 1;
};

TrialReport growth_violation_trial(const SolverBinder& solver,
                                   const GrowthTrialParams& params);

struct EnvelopeTrialParams {
  Index d = 4000;
  Index r = 2;
  Index r_prime = 1;
  double gap = 0.2;
  double delta = 0.1;
  Index trials = 100;
  Index budget_rounds = 20;
  std::uint64_t seed = 1;
};

TrialReport rank_r_envelope_trial(const SolverBinder& solver,
                                  const EnvelopeTrialParams& params);

// max_{0≤k≤k_max} λ^{-4k}(k+1).
double max_geometric_weight(double lambda, Index k_max);

}  // namespace qlab
