#include "qlab/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "qlab/error.hpp"

namespace qlab {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInvalidDimension: return "invalid-dimension";
    case ErrorCode::kInvalidRank: return "invalid-rank";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kBudgetExhausted: return "budget-exhausted";
    case ErrorCode::kDegenerateQuery: return "degenerate-query";
    case ErrorCode::kPoleDomain: return "pole-domain";
    case ErrorCode::kOutOfDomain: return "out-of-domain";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kRegimeViolation: return "regime-violation";
    case ErrorCode::kNumericalFailure: return "numerical-failure";
    case ErrorCode::kPrecondition: return "precondition-violation";
    case ErrorCode::kCombinatorialGuard: return "combinatorial-guard";
    case ErrorCode::kIo: return "io-error";
    case ErrorCode::kParse: return "parse-error";
  }
  return "unknown";
}

SymmetricMatrix SymmetricMatrix::from_dense(Matrix m, double tol) {
  require(m.rows() == m.cols(), ErrorCode::kInvalidDimension,
          "symmetric matrix must be square");
  require(m.rows() >= 1, ErrorCode::kInvalidDimension, "dimension must be >= 1");
  const Index d = m.rows();
  for (Index j = 0; j < d; ++j) {
    for (Index i = j + 1; i < d; ++i) {
      require(std::abs(m(i, j) - m(j, i)) <= tol, ErrorCode::kInvalidArgument,
              "matrix is not symmetric");
      m(j, i) = m(i, j);
    }
  }
  return SymmetricMatrix(std::move(m));
}

OrthonormalFrame OrthonormalFrame::from_columns(Matrix q, double tol) {
  require(q.cols() <= q.rows(), ErrorCode::kInvalidDimension,
          "frame width exceeds dimension");
  Matrix g = q.transpose() * q - Matrix::Identity(q.cols(), q.cols());
  require(g.norm() <= tol, ErrorCode::kInvalidArgument,
          "columns are not orthonormal");
  return OrthonormalFrame(std::move(q));
}

OrthonormalFrame OrthonormalFrame::orthonormalize(const Matrix& a) {
  return OrthonormalFrame(thin_q(a));
}

SymmetricMatrix sample_goe(Index d, Rng& rng) {
  require(d >= 1, ErrorCode::kInvalidDimension, "sample_goe: d must be >= 1");
  std::normal_distribution<double> nd(0.0, 1.0);
  const double off = std::sqrt(1.0 / static_cast<double>(d));
  const double diag = std::sqrt(2.0 / static_cast<double>(d));
  Matrix w(d, d);
  for (Index j = 0; j < d; ++j) {
    w(j, j) = diag * nd(rng);
    for (Index i = j + 1; i < d; ++i) {
      const double x = off * nd(rng);
      w(i, j) = x;
      w(j, i) = x;
    }
  }
  return SymmetricMatrix::from_dense(std::move(w), 0.0);
}

OrthonormalFrame sample_stiefel(Index d, Index r, Rng& rng) {
  require(d >= 1 && r >= 1, ErrorCode::kInvalidDimension,
          "sample_stiefel: d and r must be >= 1");
  require(r <= d, ErrorCode::kInvalidDimension, "sample_stiefel: r > d");
  return OrthonormalFrame::orthonormalize(gaussian_matrix(d, r, rng));
}

double lambda_from_gap(double gap) {
  require(gap > 0.0 && gap < 1.0, ErrorCode::kOutOfRange,
          "lambda_from_gap: gap must lie in (0,1)");
  return (1.0 + std::sqrt(gap * (2.0 - gap))) / (1.0 - gap);
}

double gap_from_lambda(double lambda) {
  require(lambda >= 1.0, ErrorCode::kOutOfRange,
          "gap_from_lambda: lambda must be >= 1");
  const double t = lambda - 1.0;
  return t * t / (lambda * lambda + 1.0);
}

DeformedWignerInstance DeformedWignerInstance::from_parts(
    SymmetricMatrix w, OrthonormalFrame u, double lambda, double gap,
    std::uint64_t seed) {
  require(w.dim() == u.dim(), ErrorCode::kInvalidDimension,
          "instance: W and U dimensions differ");
  require(u.width() >= 1, ErrorCode::kInvalidDimension, "instance: empty U");
  require(lambda > 1.0, ErrorCode::kOutOfRange, "instance: lambda must exceed 1");
  require(std::abs(gap_from_lambda(lambda) - gap) <= 1e-12,
          ErrorCode::kInvalidArgument, "instance: gap and lambda disagree");
  return DeformedWignerInstance(std::move(w), std::move(u), lambda, gap, seed);
}

Vector DeformedWignerInstance::apply(const Vector& v) const {
  require(v.size() == d(), ErrorCode::kInvalidDimension, "apply: size mismatch");
  const Matrix& u = u_.matrix();
  Vector out = w_.dense() * v;
  out.noalias() += lambda_ * (u * (u.transpose() * v));
  return out;
}

Matrix DeformedWignerInstance::apply(const Matrix& v) const {
  require(v.rows() == d(), ErrorCode::kInvalidDimension, "apply: size mismatch");
  const Matrix& u = u_.matrix();
  Matrix out = w_.dense() * v;
  out.noalias() += lambda_ * (u * (u.transpose() * v));
  return out;
}

Matrix DeformedWignerInstance::materialize() const {
  const Matrix& u = u_.matrix();
  Matrix m = w_.dense();
  m.noalias() += lambda_ * (u * u.transpose());
  return m;
}

InstancePtr make_instance(Index d, Index r, double gap, std::uint64_t seed) {
  require(r >= 1 && r <= d, ErrorCode::kInvalidDimension,
          "make_instance: need 1 <= r <= d");
  const double lambda = lambda_from_gap(gap);
  Rng w_rng = derive_rng(seed, 0);
  Rng u_rng = derive_rng(seed, 1);
  SymmetricMatrix w = sample_goe(d, w_rng);
  OrthonormalFrame u = sample_stiefel(d, r, u_rng);
  // Re-derive gap from lambda so the stored pair is exactly consistent.
  return std::make_shared<const DeformedWignerInstance>(
      DeformedWignerInstance::from_parts(std::move(w), std::move(u), lambda,
                                         gap_from_lambda(lambda), seed));
}

namespace {

Vector sorted_abs_desc(const Vector& values) {
  Vector s = values.cwiseAbs();
  std::sort(s.data(), s.data() + s.size(), std::greater<double>());
  return s;
}

double gap_from_sigma(const Vector& sigma, Index r) {
  if (sigma(r - 1) == 0.0) return 0.0;
  return (sigma(r - 1) - sigma(r)) / sigma(r - 1);
}

}  // namespace

SpectralSummary spectral_summary(const Matrix& m, Index r) {
  require(m.rows() == m.cols(), ErrorCode::kInvalidDimension,
          "spectral_summary: matrix not square");
  require(r >= 1 && r < m.rows(), ErrorCode::kInvalidRank,
          "spectral_summary: need 1 <= r < d");
  SpectralSummary s;
  Vector asc = symmetric_eigenvalues(m);
  s.eigenvalues = asc.reverse();
  s.sigma = sorted_abs_desc(asc);
  s.r = r;
  s.gap_r = gap_from_sigma(s.sigma, r);
  s.top_sum = s.sigma.head(r).sum();
  return s;
}

SpectralSummary spectral_summary(const DeformedWignerInstance& inst) {
  SpectralSummary s = spectral_summary(inst.materialize(), inst.r());
  s.op_norm_w = spectral_norm_symmetric(inst.noise().dense());
  return s;
}

SpectralCache::SpectralCache(const Matrix& m)
    : eig_(symmetric_eigen(m)), sigma_desc_(sorted_abs_desc(eig_.values)) {}

double SpectralCache::abs_quadratic(const Matrix& v) const {
  require(v.rows() == eig_.vectors.rows(), ErrorCode::kInvalidDimension,
          "abs_quadratic: dimension mismatch");
  Matrix c = eig_.vectors.transpose() * v;
  return (eig_.values.cwiseAbs().asDiagonal() * c.cwiseAbs2()).sum();
}

double SpectralCache::top_sigma_sum(Index r) const {
  require(r >= 1 && r <= sigma_desc_.size(), ErrorCode::kInvalidRank,
          "top_sigma_sum: bad rank");
  return sigma_desc_.head(r).sum();
}

double SpectralCache::gap(Index r) const {
  require(r >= 1 && r < sigma_desc_.size(), ErrorCode::kInvalidRank,
          "gap: need 1 <= r < d");
  return gap_from_sigma(sigma_desc_, r);
}

double abs_quadratic_form(const Matrix& m, const Matrix& v) {
  require(m.rows() == m.cols() && v.rows() == m.rows(),
          ErrorCode::kInvalidDimension, "abs_quadratic_form: dimension mismatch");
  require(v.cols() <= m.rows(), ErrorCode::kInvalidDimension,
          "abs_quadratic_form: frame wider than d");
  return SpectralCache(m).abs_quadratic(v);
}

double empirical_stieltjes_from_eigenvalues(const Vector& eigenvalues, double a) {
  require(eigenvalues.size() >= 1, ErrorCode::kInvalidDimension,
          "empirical_stieltjes: empty spectrum");
  const double top = eigenvalues.maxCoeff();
  require(a > top + 1e-9, ErrorCode::kPoleDomain,
          "empirical_stieltjes: a must exceed lambda_max + 1e-9");
  return (1.0 / (a - eigenvalues.array())).sum() /
         static_cast<double>(eigenvalues.size());
}

double empirical_stieltjes(const Matrix& w, double a) {
  return empirical_stieltjes_from_eigenvalues(symmetric_eigenvalues(w), a);
}

double semicircle_stieltjes(double a) {
  require(a >= 2.0, ErrorCode::kOutOfDomain,
          "semicircle_stieltjes: a < 2 lies on the complex branch");
  // Rationalized form of (a - sqrt(a^2-4))/2.
  return 2.0 / (a + std::sqrt((a - 2.0) * (a + 2.0)));
}

EgoodReport check_egood(const DeformedWignerInstance& inst, double gamma,
                        const Vector& m_eigs_desc, double op_norm_w) {
  require(gamma > 0.0 && gamma < 1.0, ErrorCode::kOutOfRange,
          "check_egood: gamma must lie in (0,1)");
  const Index r = inst.r();
  require(m_eigs_desc.size() > r, ErrorCode::kInvalidRank,
          "check_egood: need r < d");
  const double lam = inst.lambda();
  const double edge = lam + 1.0 / lam;
  EgoodReport rep;
  rep.lambda_r = m_eigs_desc(r - 1);
  rep.lambda_1 = m_eigs_desc(0);
  rep.op_norm_w = op_norm_w;
  rep.lower_ok = rep.lambda_r >= op_norm_w + (1.0 - gamma) * (edge - 2.0);
  rep.upper_ok = rep.lambda_1 <= (1.0 + gamma) * edge;
  rep.holds = rep.lower_ok && rep.upper_ok;
  rep.gap_r = gap_from_sigma(sorted_abs_desc(m_eigs_desc), r);
  rep.implied_gap_floor = (1.0 - gamma) / (1.0 + gamma) * inst.gap();
  rep.implied_gap_ok = !rep.holds || rep.gap_r >= rep.implied_gap_floor - 1e-12;
  return rep;
}

EgoodReport check_egood(const DeformedWignerInstance& inst, double gamma) {
  Vector m_eigs = symmetric_eigenvalues(inst.materialize()).reverse();
  return check_egood(inst, gamma, m_eigs,
                     spectral_norm_symmetric(inst.noise().dense()));
}

}  // namespace qlab
