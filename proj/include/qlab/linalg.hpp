#pragma once

#include <Eigen/Dense>

namespace qlab {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Eigen-decomposition of a symmetric matrix; values ascending, vectors column-aligned.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;
};

// Dense symmetric eigensolver (LAPACK dsyevd). Reads the lower triangle.
// "lapacke_dsyevd" when LAPACKE loads and passes a residual self-check,
// otherwise "eigen". Set QLAB_EIGEN_ONLY to force the Eigen solver.
const char* eigensolver_backend();

Vector symmetric_eigenvalues(const Matrix& a);
SymmetricEigen symmetric_eigen(const Matrix& a);

// Largest absolute eigenvalue.
double spectral_norm_symmetric(const Matrix& a);

// Thin QR with the diagonal of R made non-negative.
Matrix thin_q(const Matrix& a);

// Removes the component of v lying in span(basis) with two classical
// Gram-Schmidt passes. Returns the residual (not normalized).
Vector project_out(const Matrix& basis, const Vector& v);

// Orthonormalizes the columns of `block` against `basis` and among themselves.
// Columns whose residual norm falls below `drop_tol` (relative to the input
// column norm) are dropped.
Matrix orthonormalize_against(const Matrix& basis, const Matrix& block,
                              double drop_tol = 1e-8);

// Max |QᵀQ - I|.
double orthonormality_defect(const Matrix& q);

// Moore-Penrose pseudo-inverse of a symmetric PSD matrix.
Matrix pseudo_inverse_symmetric(const Matrix& a, double rel_tol = 1e-10);

}  // namespace qlab
