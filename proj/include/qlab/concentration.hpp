// Monte Carlo harnesses for the finite-sample probabilistic claims.
#pragma once

#include <cstdint>
#include <vector>

#include "qlab/rmt.hpp"
#include "qlab/stats.hpp"

namespace qlab {

// Exceedance of ‖UᵀAU − (trA/d)I_r‖ over c(√t‖A‖_F + t‖A‖)/(d(1−2√(t/d))),
// c = 8 against 3e^{−t+2.2r}. The sphere variant (r = 1) uses c = 4 and 3e^{−t}.
TrialReport hanson_wright_trial(const SymmetricMatrix& a, Index r, double t,
                                Index n, std::uint64_t seed, bool sphere = false);

// z*(p) = 2 + 21 d^{-1/3} log^{2/3} d + 2 sqrt(log(1/p)/d).
double norm_bound_zstar(Index d, double p);
TrialReport norm_bound_trial(Index d, double p, Index n, std::uint64_t seed);

// |S_W(a) − s(a)|.
double stieltjes_deviation(const Matrix& w, double a);

struct StieltjesParams {
  Index d = 4000;
  double a = 2.5;
  Index n = 20;
  double p = -1.0;          // conditioning level; < 0 selects exp(-d^{1/3})
  double tolerance = 0.01;  // used when the theorem's regime does not hold
  std::uint64_t seed = 1;
};

// Theorem bound c_δ ε̄² + 8 d^{3/2} p^{1/6}; NaN outside its regime.
double stieltjes_theorem_bound(Index d, double a, double p, double delta);
TrialReport stieltjes_trial(const StieltjesParams& params);

// Empirical mean of W v1 v2ᵀ W over √d-scaled GOE draws against
// v2 v1ᵀ + ⟨v1, v2⟩ I; empirical = max-abs entry error.
TrialReport gauss_quadratic_trial(const Vector& v1, const Vector& v2, Index n,
                                  std::uint64_t seed);

// Projected responses w_i = P_{i-1}(W + λuuᵀ)v_i over fresh W for a fixed
// orthonormal query sequence. Returns four reports: conditional_mean (max
// entry z-score, bound 4), conditional_cov (max Frobenius error, bound 0.02),
// conditional_cross (Frobenius cross-covariance over its null standard error,
// bound 4) and conditional_kernel (max |V_{<i}ᵀ w_i|, bound 1e-8).
std::vector<TrialReport> conditional_cov_trial(const Matrix& queries,
                                               const Vector& u, double lambda,
                                               Index n, std::uint64_t seed);

struct EigengapParams {
  Index d = 2000;
  Index r = 1;
  double gap = 0.2;
  double gamma = 0.5;
  double delta = 0.1;
  Index n = 50;
  bool report_only = false;
  std::uint64_t seed = 1;
};

// empirical = frequency of E_good(γ) failing, bound = δ. Extras carry the
// E_good frequency and implied-gap violations.
TrialReport eigengap_trial(const EigengapParams& params);

// Event {‖W‖ ≤ 3, λ_r(M) − ‖W‖ ≥ λ/2, 1 − gap_r ≤ 2/λ}; empirical = failure
// frequency, bound = 0.1.
TrialReport big_gap_trial(Index d, Index r, double lambda, Index n,
                          std::uint64_t seed);

// Tail of d·‖Vᵀu‖² for V the first k+1 coordinates and u uniform on the
// sphere, one report per τ.
std::vector<TrialReport> small_ball_trial(Index d, Index k,
                                          const std::vector<double>& taus,
                                          Index n, std::uint64_t seed);

}  // namespace qlab
