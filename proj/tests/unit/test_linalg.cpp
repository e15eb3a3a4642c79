#include <cmath>
#include <random>

#include "doctest.h"
#include "qlab/linalg.hpp"
#include "qlab/random.hpp"
#include "qlab/stats.hpp"

using namespace qlab;

namespace {

Matrix random_symmetric(Index n, Rng& rng) {
  Matrix g = gaussian_matrix(n, n, rng);
  return 0.5 * (g + g.transpose());
}

}  // namespace

TEST_CASE("eigensolver reconstructs the matrix") {
  Rng rng(11);
  for (Index n : {1, 7, 64, 300}) {
    const Matrix a = random_symmetric(n, rng);
    const SymmetricEigen e = symmetric_eigen(a);
    CHECK((a * e.vectors - e.vectors * e.values.asDiagonal()).norm() <= 1e-10 * a.norm() + 1e-14);
    CHECK(orthonormality_defect(e.vectors) <= 1e-12);
    for (Index i = 1; i < n; ++i) CHECK(e.values(i - 1) <= e.values(i));
    CHECK((symmetric_eigenvalues(a) - e.values).norm() <= 1e-10 * a.norm());
  }
}

TEST_CASE("eigenvalues agree with trace and Frobenius identities") {
  Rng rng(3);
  const Matrix a = random_symmetric(120, rng);
  const Vector w = symmetric_eigenvalues(a);
  CHECK(w.sum() == doctest::Approx(a.trace()).epsilon(1e-10));
  CHECK(w.squaredNorm() == doctest::Approx(a.squaredNorm()).epsilon(1e-10));
  CHECK(spectral_norm_symmetric(a) ==
        doctest::Approx(std::max(std::abs(w(0)), std::abs(w(119)))));
}

TEST_CASE("thin_q spans the input with a non-negative R diagonal") {
  Rng rng(5);
  const Matrix a = gaussian_matrix(50, 6, rng);
  const Matrix q = thin_q(a);
  CHECK(orthonormality_defect(q) <= 1e-12);
  const Matrix r = q.transpose() * a;
  CHECK((q * r - a).norm() <= 1e-10);
  for (Index j = 0; j < 6; ++j) CHECK(r(j, j) >= 0.0);
}

TEST_CASE("project_out and orthonormalize_against") {
  Rng rng(8);
  const Matrix basis = thin_q(gaussian_matrix(40, 5, rng));
  const Vector v = gaussian_vector(40, rng);
  const Vector res = project_out(basis, v);
  CHECK((basis.transpose() * res).norm() <= 1e-13);
  CHECK((res + basis * (basis.transpose() * v) - v).norm() <= 1e-12);

  Matrix block(40, 3);
  block.col(0) = gaussian_vector(40, rng);
  block.col(1) = basis.col(2);  // inside the span: dropped
  block.col(2) = gaussian_vector(40, rng);
  const Matrix q = orthonormalize_against(basis, block);
  CHECK(q.cols() == 2);
  CHECK((basis.transpose() * q).norm() <= 1e-12);
  CHECK(orthonormality_defect(q) <= 1e-12);
}

TEST_CASE("pseudo-inverse of a rank-deficient PSD matrix") {
  Rng rng(2);
  const Matrix b = gaussian_matrix(6, 3, rng);
  const Matrix a = b * b.transpose();
  const Matrix p = pseudo_inverse_symmetric(a);
  CHECK((a * p * a - a).norm() <= 1e-9 * a.norm());
  CHECK((p * a * p - p).norm() <= 1e-9 * p.norm());
  CHECK((p - p.transpose()).norm() <= 1e-12);
}

TEST_CASE("derived streams are reproducible and distinct") {
  Rng a = derive_rng(42, 0), b = derive_rng(42, 0), c = derive_rng(42, 1);
  const auto x = a(), y = b(), z = c();
  CHECK(x == y);
  CHECK(x != z);
}

TEST_CASE("gaussian and sphere samplers have the right moments") {
  Rng rng(17);
  MeanAccumulator m, v;
  const Vector g = gaussian_vector(200000, rng);
  for (Index i = 0; i < g.size(); ++i) {
    m.add(g(i));
    v.add(g(i) * g(i));
  }
  CHECK(std::abs(m.mean) < 5.0 / std::sqrt(200000.0));
  CHECK(std::abs(v.mean - 1.0) < 5.0 * std::sqrt(2.0 / 200000.0));

  // E[x_1²] = 1/n on the sphere.
  MeanAccumulator s;
  for (int i = 0; i < 20000; ++i) {
    const Vector x = sphere_vector(10, rng);
    CHECK(x.norm() == doctest::Approx(1.0).epsilon(1e-12));
    s.add(x(0) * x(0));
  }
  CHECK(std::abs(s.mean - 0.1) < 5.0 * s.stderr_of_mean());
}

TEST_CASE("eigensolver backend reports a name") {
  const std::string name = eigensolver_backend();
  CHECK((name == "lapacke_dsyevd" || name == "eigen"));
}
