// GOE / deformed Wigner sampling, spectral summaries and the gap/lambda and
// Stieltjes closed forms.
#pragma once

#include <cstdint>
#include <limits>
#include <memory>

#include "qlab/linalg.hpp"
#include "qlab/random.hpp"

namespace qlab {

// Dense symmetric matrix with full (mirrored) storage.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  // Throws kInvalidArgument unless `m` is square and symmetric to `tol`
  // (absolute). The stored copy is exactly mirrored from the lower triangle.
  static SymmetricMatrix from_dense(Matrix m, double tol = 1e-12);

  Index dim() const { return m_.rows(); }
  const Matrix& dense() const { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }

 private:
  explicit SymmetricMatrix(Matrix m) : m_(std::move(m)) {}
  Matrix m_;
};

// d x k matrix with orthonormal columns.
class OrthonormalFrame {
 public:
  OrthonormalFrame() = default;
  // Validates QᵀQ = I to `tol` in Frobenius norm.
  static OrthonormalFrame from_columns(Matrix q, double tol = 1e-10);
  // Thin QR with positive R diagonal.
  static OrthonormalFrame orthonormalize(const Matrix& a);

  Index dim() const { return q_.rows(); }
  Index width() const { return q_.cols(); }
  const Matrix& matrix() const { return q_; }

 private:
  explicit OrthonormalFrame(Matrix q) : q_(std::move(q)) {}
  Matrix q_;
};

SymmetricMatrix sample_goe(Index d, Rng& rng);
OrthonormalFrame sample_stiefel(Index d, Index r, Rng& rng);

double lambda_from_gap(double gap);
double gap_from_lambda(double lambda);

// M = W + lambda * U Uᵀ. Immutable once built.
class DeformedWignerInstance {
 public:
  static DeformedWignerInstance from_parts(SymmetricMatrix w, OrthonormalFrame u,
                                           double lambda, double gap,
                                           std::uint64_t seed);

  Index d() const { return w_.dim(); }
  Index r() const { return u_.width(); }
  double lambda() const { return lambda_; }
  double gap() const { return gap_; }
  std::uint64_t seed() const { return seed_; }
  const SymmetricMatrix& noise() const { return w_; }
  const OrthonormalFrame& spike() const { return u_; }

  Vector apply(const Vector& v) const;
  Matrix apply(const Matrix& v) const;
  Matrix materialize() const;

 private:
  DeformedWignerInstance(SymmetricMatrix w, OrthonormalFrame u, double lambda,
                         double gap, std::uint64_t seed)
      : w_(std::move(w)), u_(std::move(u)), lambda_(lambda), gap_(gap),
        seed_(seed) {}

  SymmetricMatrix w_;
  OrthonormalFrame u_;
  double lambda_ = 0.0;
  double gap_ = 0.0;
  std::uint64_t seed_ = 0;
};

using InstancePtr = std::shared_ptr<const DeformedWignerInstance>;

// W from derive_rng(seed, 0), U from derive_rng(seed, 1).
InstancePtr make_instance(Index d, Index r, double gap, std::uint64_t seed);

struct SpectralSummary {
  Vector eigenvalues;  // descending
  Vector sigma;        // |eigenvalues| sorted descending
  Index r = 0;
  double gap_r = 0.0;
  double top_sum = 0.0;  // sum of the r largest sigma
  double op_norm_w = std::numeric_limits<double>::quiet_NaN();
};

SpectralSummary spectral_summary(const Matrix& m, Index r);
SpectralSummary spectral_summary(const DeformedWignerInstance& inst);

// Eigendecomposition of M kept for repeated abs(M) evaluations.
class SpectralCache {
 public:
  explicit SpectralCache(const Matrix& m);
  explicit SpectralCache(const DeformedWignerInstance& inst)
      : SpectralCache(inst.materialize()) {}

  const SymmetricEigen& eigen() const { return eig_; }
  // trace(Vᵀ abs(M) V).
  double abs_quadratic(const Matrix& v) const;
  // Sum of the r largest singular values and gap_r.
  double top_sigma_sum(Index r) const;
  double gap(Index r) const;

 private:
  SymmetricEigen eig_;
  Vector sigma_desc_;
};

double abs_quadratic_form(const Matrix& m, const Matrix& v);

// (1/d) Σ 1/(a - λ_i). Requires a > λ_max + 1e-9.
double empirical_stieltjes(const Matrix& w, double a);
double empirical_stieltjes_from_eigenvalues(const Vector& eigenvalues, double a);

double semicircle_stieltjes(double a);

struct EgoodReport {
  bool holds = false;
  bool lower_ok = false;  // λ_r(M) ≥ ‖W‖ + (1-γ)(λ + 1/λ - 2)
  bool upper_ok = false;  // λ_1(M) ≤ (1+γ)(λ + 1/λ)
  double lambda_r = 0.0;
  double lambda_1 = 0.0;
  double op_norm_w = 0.0;
  double gap_r = 0.0;
  double implied_gap_floor = 0.0;  // ((1-γ)/(1+γ))·gap
  bool implied_gap_ok = true;      // only meaningful when holds
};

EgoodReport check_egood(const DeformedWignerInstance& inst, double gamma);
// Same, reusing precomputed spectra (descending eigenvalues of M, ‖W‖).
EgoodReport check_egood(const DeformedWignerInstance& inst, double gamma,
                        const Vector& m_eigs_desc, double op_norm_w);

}  // namespace qlab
