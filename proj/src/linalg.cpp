#include "qlab/linalg.hpp"

#include <dlfcn.h>

#include <cmath>
#include <cstdlib>
#include <mutex>
#include <string>

#include <Eigen/Eigenvalues>

#include "qlab/error.hpp"

namespace qlab {

namespace {

// LAPACKE_dsyevd, resolved at runtime so that the OpenBLAS kernel choice can
// be pinned before the library initializes.
using DsyevdFn = int (*)(int, char, char, int, double*, int, double*);

struct Backend {
  DsyevdFn dsyevd = nullptr;
  const char* name = "eigen";
};

Vector call_dsyevd(DsyevdFn fn, Matrix& a, char jobz) {
  const int n = static_cast<int>(a.rows());
  Vector w(n);
  if (n == 0) return w;
  constexpr int kColMajor = 102;
  const int info = fn(kColMajor, jobz, 'L', n, a.data(), n, w.data());
  if (info != 0) {
    fail(ErrorCode::kNumericalFailure, "dsyevd failed, info=" + std::to_string(info));
  }
  return w;
}

// Residual check on a matrix large enough to reach the blocked kernels.
bool backend_healthy(DsyevdFn fn) {
  const Index n = 256;
  Matrix a(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
      a(i, j) = std::sin(0.37 * static_cast<double>(i * n + j)) +
                std::sin(0.37 * static_cast<double>(j * n + i));
  Matrix v = a;
  const Vector w = call_dsyevd(fn, v, 'V');
  const double resid = (a * v - v * w.asDiagonal()).norm() / a.norm();
  return std::isfinite(resid) && resid < 1e-10;
}

const Backend& backend() {
  static Backend b;
  static std::once_flag once;
  std::call_once(once, [] {
    if (std::getenv("QLAB_EIGEN_ONLY") != nullptr) return;
#if defined(__x86_64__)
    // The auto-detected AVX-512 DGEMM kernels of some OpenBLAS releases return
    // wrong products on recent Xeons; the AVX2 kernels do not.
    if (std::getenv("OPENBLAS_CORETYPE") == nullptr && __builtin_cpu_supports("avx2") &&
        __builtin_cpu_supports("fma")) {
      setenv("OPENBLAS_CORETYPE", "Haswell", 0);
    }
#endif
    void* h = dlopen("liblapacke.so.3", RTLD_NOW | RTLD_LOCAL);
    if (h == nullptr) h = dlopen("liblapacke.so", RTLD_NOW | RTLD_LOCAL);
    if (h == nullptr) return;
    auto fn = reinterpret_cast<DsyevdFn>(dlsym(h, "LAPACKE_dsyevd"));
    if (fn != nullptr && backend_healthy(fn)) {
      b.dsyevd = fn;
      b.name = "lapacke_dsyevd";
    }
  });
  return b;
}

Vector run_dsyevd(Matrix& a, char jobz) {
  require(a.rows() == a.cols(), ErrorCode::kInvalidDimension,
          "eigensolver: matrix not square");
  const Backend& b = backend();
  if (b.dsyevd != nullptr) return call_dsyevd(b.dsyevd, a, jobz);
  Eigen::SelfAdjointEigenSolver<Matrix> es(
      a, jobz == 'V' ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  require(es.info() == Eigen::Success, ErrorCode::kNumericalFailure,
          "eigensolver failed");
  if (jobz == 'V') a = es.eigenvectors();
  return es.eigenvalues();
}

}  // namespace

const char* eigensolver_backend() { return backend().name; }

Vector symmetric_eigenvalues(const Matrix& a) {
  Matrix work = a;
  return run_dsyevd(work, 'N');
}

SymmetricEigen symmetric_eigen(const Matrix& a) {
  SymmetricEigen out;
  out.vectors = a;
  out.values = run_dsyevd(out.vectors, 'V');
  return out;
}

double spectral_norm_symmetric(const Matrix& a) {
  Vector w = symmetric_eigenvalues(a);
  if (w.size() == 0) return 0.0;
  return std::max(std::abs(w(0)), std::abs(w(w.size() - 1)));
}

Matrix thin_q(const Matrix& a) {
  const Index m = a.rows();
  const Index n = a.cols();
  require(n <= m, ErrorCode::kInvalidDimension, "thin_q: more columns than rows");
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(m, n);
  const Matrix& r = qr.matrixQR();
  for (Index j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

Vector project_out(const Matrix& basis, const Vector& v) {
  Vector w = v;
  if (basis.cols() == 0) return w;
  for (int pass = 0; pass < 2; ++pass) {
    w.noalias() -= basis * (basis.transpose() * w);
  }
  return w;
}

Matrix orthonormalize_against(const Matrix& basis, const Matrix& block,
                              double drop_tol) {
  const Index d = block.rows();
  Matrix all(d, basis.cols() + block.cols());
  all.leftCols(basis.cols()) = basis;
  Index filled = basis.cols();
  for (Index j = 0; j < block.cols(); ++j) {
    const double scale = block.col(j).norm();
    if (scale == 0.0) continue;
    Vector w = project_out(all.leftCols(filled), block.col(j));
    const double nrm = w.norm();
    if (nrm < drop_tol * scale) continue;
    all.col(filled++) = w / nrm;
  }
  return all.middleCols(basis.cols(), filled - basis.cols());
}

double orthonormality_defect(const Matrix& q) {
  if (q.cols() == 0) return 0.0;
  Matrix g = q.transpose() * q;
  g.diagonal().array() -= 1.0;
  return g.cwiseAbs().maxCoeff();
}

Matrix pseudo_inverse_symmetric(const Matrix& a, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  const Vector& w = es.eigenvalues();
  const double cutoff =
      rel_tol * std::max(1.0, w.cwiseAbs().maxCoeff());
  Vector inv(w.size());
  for (Index i = 0; i < w.size(); ++i) {
    inv(i) = std::abs(w(i)) > cutoff ? 1.0 / w(i) : 0.0;
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace qlab
