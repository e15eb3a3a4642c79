#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "qlab/error.hpp"
#include "qlab/instance_io.hpp"
#include "qlab/rmt.hpp"
#include "qlab/stats.hpp"

using namespace qlab;

namespace {

// Semicircle Stieltjes transform by midpoint quadrature of ρ(x)/(a - x).
double semicircle_by_quadrature(double a) {
  const int m = 200000;
  double s = 0.0;
  for (int i = 0; i < m; ++i) {
    const double x = -2.0 + 4.0 * (i + 0.5) / m;
    s += std::sqrt(4.0 - x * x) / (2.0 * M_PI) / (a - x);
  }
  return s * 4.0 / m;
}

}  // namespace

TEST_CASE("gap and lambda are inverse maps") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(1e-4, 0.999);
  for (int i = 0; i < 200; ++i) {
    const double g = u(rng);
    const double l = lambda_from_gap(g);
    CHECK(l > 1.0);
    // Defining relation, evaluated directly.
    CHECK((l - 1) * (l - 1) / (l * l + 1) == doctest::Approx(g).epsilon(1e-12));
  }
  CHECK(lambda_from_gap(0.5) == doctest::Approx(2.0 + std::sqrt(3.0)).epsilon(1e-12));
  CHECK(gap_from_lambda(6.0) == doctest::Approx(25.0 / 37.0).epsilon(1e-14));
  CHECK_THROWS_AS(lambda_from_gap(0.0), Error);
  CHECK_THROWS_AS(lambda_from_gap(1.0), Error);
  CHECK_THROWS_AS(gap_from_lambda(0.5), Error);
}

TEST_CASE("gap is increasing in lambda") {
  double prev = 0.0;
  for (double l = 1.01; l < 20; l += 0.1) {
    const double g = gap_from_lambda(l);
    CHECK(g > prev);
    prev = g;
  }
}

TEST_CASE("GOE entry variances") {
  Rng rng(9);
  const Index d = 60;
  MeanAccumulator off, diag;
  for (int rep = 0; rep < 200; ++rep) {
    const Matrix w = sample_goe(d, rng).dense();
    CHECK((w - w.transpose()).norm() == 0.0);
    for (Index i = 0; i < d; ++i) {
      diag.add(w(i, i) * w(i, i) * d);
      for (Index j = 0; j < i; ++j) off.add(w(i, j) * w(i, j) * d);
    }
  }
  CHECK(std::abs(off.mean - 1.0) < 5.0 * off.stderr_of_mean());
  CHECK(std::abs(diag.mean - 2.0) < 5.0 * diag.stderr_of_mean());
}

TEST_CASE("semicircle Stieltjes transform") {
  for (double a : {2.05, 2.5, 3.0, 5.0}) {
    CHECK(semicircle_stieltjes(a) == doctest::Approx(semicircle_by_quadrature(a)).epsilon(2e-3));
  }
  for (double l : {1.1, 2.0, 7.5}) {
    CHECK(semicircle_stieltjes(l + 1.0 / l) == doctest::Approx(1.0 / l).epsilon(1e-12));
  }
  CHECK_THROWS_AS(semicircle_stieltjes(1.5), Error);
}

TEST_CASE("empirical Stieltjes transform and its pole guard") {
  Rng rng(1);
  const Matrix w = sample_goe(800, rng).dense();
  CHECK(std::abs(empirical_stieltjes(w, 3.0) - semicircle_stieltjes(3.0)) < 0.01);
  Vector eig(3);
  eig << -1.0, 0.5, 2.0;
  CHECK(empirical_stieltjes_from_eigenvalues(eig, 3.0) ==
        doctest::Approx((1.0 / 4 + 1.0 / 2.5 + 1.0 / 1) / 3));
  try {
    empirical_stieltjes_from_eigenvalues(eig, 2.0);
    FAIL("expected a pole-domain error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kPoleDomain);
  }
}

TEST_CASE("instance construction and application") {
  InstancePtr inst = make_instance(50, 2, 0.3, 77);
  CHECK(inst->d() == 50);
  CHECK(inst->r() == 2);
  CHECK(inst->gap() == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(inst->lambda() == doctest::Approx(lambda_from_gap(0.3)));
  const Matrix m = inst->materialize();
  const Matrix u = inst->spike().matrix();
  CHECK((m - inst->noise().dense() - inst->lambda() * u * u.transpose()).norm() < 1e-12);
  Rng rng(2);
  const Vector v = gaussian_vector(50, rng);
  CHECK((inst->apply(v) - m * v).norm() < 1e-12);
  // Same seed, same instance.
  InstancePtr again = make_instance(50, 2, 0.3, 77);
  CHECK((again->materialize() - m).norm() == 0.0);
  CHECK_THROWS_AS(make_instance(50, 0, 0.3, 1), Error);
}

TEST_CASE("symmetric and orthonormal wrappers validate") {
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  CHECK_THROWS_AS(SymmetricMatrix::from_dense(a), Error);
  Matrix q = Matrix::Identity(4, 2);
  CHECK(OrthonormalFrame::from_columns(q).width() == 2);
  q(0, 1) = 0.5;
  CHECK_THROWS_AS(OrthonormalFrame::from_columns(q), Error);
  Rng rng(3);
  CHECK(orthonormality_defect(sample_stiefel(30, 4, rng).matrix()) < 1e-12);
}

TEST_CASE("spectral summary of a diagonal matrix") {
  Vector diag(5);
  diag << 5.0, -4.0, 1.0, 0.5, -0.2;
  const Matrix m = diag.asDiagonal();
  const SpectralSummary s = spectral_summary(m, 2);
  CHECK(s.sigma(0) == doctest::Approx(5.0));
  CHECK(s.sigma(1) == doctest::Approx(4.0));
  CHECK(s.top_sum == doctest::Approx(9.0));
  CHECK(s.gap_r == doctest::Approx((4.0 - 1.0) / 4.0));
  CHECK(s.eigenvalues(0) == doctest::Approx(5.0));
  CHECK_THROWS_AS(spectral_summary(m, 5), Error);

  const SpectralCache cache(m);
  Matrix v = Matrix::Zero(5, 2);
  v(0, 0) = 1.0;
  v(1, 1) = 1.0;
  CHECK(cache.abs_quadratic(v) == doctest::Approx(9.0));
  CHECK(abs_quadratic_form(m, v) == doctest::Approx(9.0));
  CHECK(cache.gap(2) == doctest::Approx(0.75));
}

TEST_CASE("E_good for a strongly spiked instance") {
  InstancePtr inst = make_instance(400, 1, 0.6, 5);
  const EgoodReport rep = check_egood(*inst, 0.5);
  CHECK(rep.holds);
  CHECK(rep.lambda_1 <= 1.5 * (inst->lambda() + 1.0 / inst->lambda()));
  CHECK(rep.implied_gap_ok);
}

TEST_CASE("instance file round trip") {
  InstancePtr inst = make_instance(30, 2, 0.2, 12);
  std::stringstream ss;
  write_instance(ss, *inst);
  InstancePtr back = read_instance(ss);
  CHECK(back->d() == 30);
  CHECK(back->r() == 2);
  CHECK(back->seed() == 12);
  CHECK(back->lambda() == inst->lambda());
  CHECK((back->materialize() - inst->materialize()).norm() == 0.0);
  std::stringstream bad("not an instance");
  CHECK_THROWS_AS(read_instance(bad), Error);
}
