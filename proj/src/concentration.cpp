#include "qlab/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qlab/error.hpp"
#include "qlab/potential.hpp"

namespace qlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sym_op_norm_small(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

TrialReport hanson_wright_trial(const SymmetricMatrix& a, Index r, double t,
                                Index n, std::uint64_t seed, bool sphere) {
  const Index d = a.dim();
  require(r >= 1 && r <= d, ErrorCode::kInvalidRank, "hanson_wright: bad r");
  require(!sphere || r == 1, ErrorCode::kInvalidArgument,
          "hanson_wright: sphere variant needs r = 1");
  require(t > 0.0 && t <= static_cast<double>(d) / 4.0,
          ErrorCode::kRegimeViolation, "hanson_wright: need 0 < t <= d/4");
  const Matrix& am = a.dense();
  const double dd = static_cast<double>(d);
  const double c = sphere ? 4.0 : 8.0;
  const double thr = c * (std::sqrt(t) * am.norm() + t * spectral_norm_symmetric(am)) /
                     (dd * (1.0 - 2.0 * std::sqrt(t / dd)));
  const double center = am.trace() / dd;
  std::int64_t exceed = 0;
  double max_dev = 0.0;
  MeanAccumulator dev_mean;
  for (Index i = 0; i < n; ++i) {
    Rng rng = derive_rng(seed, static_cast<std::uint64_t>(i));
    const Matrix u = sample_stiefel(d, r, rng).matrix();
    Matrix g = u.transpose() * am * u;
    g.diagonal().array() -= center;
    const double dev = sym_op_norm_small(0.5 * (g + g.transpose()));
    max_dev = std::max(max_dev, dev);
    dev_mean.add(dev);
    if (dev > thr) ++exceed;
  }
  const double bound = sphere ? 3.0 * std::exp(-t)
                              : 3.0 * std::exp(-t + 2.2 * static_cast<double>(r));
  TrialReport rep = frequency_report(sphere ? "hanson_wright_sphere" : "hanson_wright",
                                     exceed, n, bound);
  rep.extra["threshold"] = thr;
  rep.extra["max_deviation"] = max_dev;
  rep.extra["mean_deviation"] = dev_mean.mean;
  return rep;
}

double norm_bound_zstar(Index d, double p) {
  require(d >= 1 && p > 0.0 && p < 1.0, ErrorCode::kOutOfRange,
          "norm_bound_zstar: need d >= 1, p in (0,1)");
  const double dd = static_cast<double>(d);
  return 2.0 + 21.0 * std::pow(dd, -1.0 / 3.0) * std::pow(std::log(dd), 2.0 / 3.0) +
         2.0 * std::sqrt(std::log(1.0 / p) / dd);
}

TrialReport norm_bound_trial(Index d, double p, Index n, std::uint64_t seed) {
  require(d >= 250, ErrorCode::kRegimeViolation, "norm_bound: need d >= 250");
  const double z = norm_bound_zstar(d, p);
  std::int64_t exceed = 0;
  std::vector<double> norms;
  norms.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    Rng rng = derive_rng(seed, static_cast<std::uint64_t>(i));
    const double nrm = spectral_norm_symmetric(sample_goe(d, rng).dense());
    norms.push_back(nrm);
    if (nrm > z) ++exceed;
  }
  TrialReport rep = frequency_report("norm_bound", exceed, n, p);
  rep.extra["z_star"] = z;
  if (!norms.empty()) rep.extra["median_norm"] = median(norms);
  return rep;
}

double stieltjes_deviation(const Matrix& w, double a) {
  return std::abs(empirical_stieltjes(w, a) - semicircle_stieltjes(a));
}

double stieltjes_theorem_bound(Index d, double a, double p, double delta) {
  const double z = norm_bound_zstar(d, p);
  const double dd = static_cast<double>(d);
  if (!(a > z) || !(a >= 2.0 + (z - 2.0) / 31.0) || !(a < dd)) return kNaN;
  const double eps2 = 1.0 / (dd * (a - z) * (a - z));
  const double eps = std::sqrt(eps2);
  if (!(eps2 < std::min(1.0 / (16.0 * std::sqrt(2.0)), (a - 2.0) / 32.0))) return kNaN;
  if (!(std::cbrt(p) < eps / 8.0)) return kNaN;
  const double c_delta = 4.0 * std::sqrt(2.0) + 2.0 * std::sqrt(std::log(2.0 / delta));
  return c_delta * eps2 + 8.0 * std::pow(dd, 1.5) * std::pow(p, 1.0 / 6.0);
}

TrialReport stieltjes_trial(const StieltjesParams& prm) {
  require(prm.a >= 2.0, ErrorCode::kOutOfDomain, "stieltjes_trial: a < 2");
  const double dd = static_cast<double>(prm.d);
  const double p = prm.p > 0.0 ? prm.p : std::exp(-std::cbrt(dd));
  const double z = norm_bound_zstar(prm.d, p);
  const double s = semicircle_stieltjes(prm.a);
  std::int64_t excluded_norm = 0;
  std::int64_t excluded_pole = 0;
  double max_err = 0.0;
  MeanAccumulator err;
  for (Index i = 0; i < prm.n; ++i) {
    Rng rng = derive_rng(prm.seed, static_cast<std::uint64_t>(i));
    const Vector eig = symmetric_eigenvalues(sample_goe(prm.d, rng).dense());
    const double nrm = std::max(std::abs(eig(0)), std::abs(eig(eig.size() - 1)));
    if (nrm > z) {
      ++excluded_norm;
      continue;
    }
    double sw;
    try {
      sw = empirical_stieltjes_from_eigenvalues(eig, prm.a);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kPoleDomain) throw;
      ++excluded_pole;
      continue;
    }
    const double e = std::abs(sw - s);
    max_err = std::max(max_err, e);
    err.add(e);
  }
  const double theorem =
      stieltjes_theorem_bound(prm.d, prm.a, p, 1.0 / static_cast<double>(std::max<Index>(prm.n, 2)));
  TrialReport rep;
  rep.claim = "stieltjes";
  rep.n = err.n;
  rep.empirical = max_err;
  rep.bound = std::isfinite(theorem) ? theorem : prm.tolerance;
  rep.half_width = 0.0;
  rep.excluded = excluded_norm + excluded_pole;
  rep.exclusion_rate = prm.n > 0 ? static_cast<double>(rep.excluded) / static_cast<double>(prm.n) : 0.0;
  rep.extra["mean_error"] = err.mean;
  rep.extra["z_star"] = z;
  rep.extra["theorem_bound"] = theorem;
  rep.extra["regime_ok"] = std::isfinite(theorem) ? 1.0 : 0.0;
  rep.extra["excluded_norm"] = static_cast<double>(excluded_norm);
  rep.extra["excluded_pole"] = static_cast<double>(excluded_pole);
  if (!std::isfinite(theorem)) rep.note = "theorem regime not met; fixed tolerance used";
  settle(rep);
  return rep;
}

TrialReport gauss_quadratic_trial(const Vector& v1, const Vector& v2, Index n,
                                  std::uint64_t seed) {
  const Index d = v1.size();
  require(v2.size() == d && d >= 1, ErrorCode::kInvalidDimension,
          "gauss_quadratic: dimension mismatch");
  require(std::abs(v1.norm() - 1.0) < 1e-10 && std::abs(v2.norm() - 1.0) < 1e-10,
          ErrorCode::kPrecondition, "gauss_quadratic: unit vectors required");
  const double scale = std::sqrt(static_cast<double>(d));
  Matrix sum = Matrix::Zero(d, d);
  Matrix sum_sq = Matrix::Zero(d, d);
  for (Index i = 0; i < n; ++i) {
    Rng rng = derive_rng(seed, static_cast<std::uint64_t>(i));
    const Matrix w = scale * sample_goe(d, rng).dense();
    const Vector a = w * v1;
    const Vector b = w * v2;
    const Matrix x = a * b.transpose();
    sum += x;
    sum_sq += x.cwiseAbs2();
  }
  const double nn = static_cast<double>(n);
  const Matrix mean = sum / nn;
  const Matrix var = (sum_sq / nn - mean.cwiseAbs2()) * (nn / std::max(nn - 1.0, 1.0));
  Matrix expected = v2 * v1.transpose();
  expected.diagonal().array() += v1.dot(v2);
  const double max_err = (mean - expected).cwiseAbs().maxCoeff();
  const double max_se = std::sqrt(var.maxCoeff() / nn);
  TrialReport rep;
  rep.claim = "gauss_quadratic";
  rep.n = n;
  rep.empirical = max_err;
  rep.bound = 0.0;
  rep.half_width = simultaneous_z(d * d) * max_se;
  rep.extra["max_stderr"] = max_se;
  settle(rep);
  return rep;
}

std::vector<TrialReport> conditional_cov_trial(const Matrix& queries,
                                               const Vector& u, double lambda,
                                               Index n, std::uint64_t seed) {
  const Index d = queries.rows();
  const Index m = queries.cols();
  require(u.size() == d && m >= 1, ErrorCode::kInvalidDimension,
          "conditional_cov: dimension mismatch");
  require(orthonormality_defect(queries) <= 1e-10, ErrorCode::kPrecondition,
          "conditional_cov: queries must be orthonormal");
  const double dd = static_cast<double>(d);
  std::vector<Matrix> proj(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    const auto prev = queries.leftCols(i);
    proj[static_cast<std::size_t>(i)] = Matrix::Identity(d, d) - prev * prev.transpose();
  }
  Matrix sum = Matrix::Zero(d, m);
  Matrix sum_sq = Matrix::Zero(d, m);
  std::vector<Matrix> second(static_cast<std::size_t>(m), Matrix::Zero(d, d));
  std::vector<Matrix> cross;
  std::vector<std::pair<Index, Index>> pairs;
  for (Index i = 0; i < m; ++i)
    for (Index j = i + 1; j < m; ++j) {
      pairs.emplace_back(i, j);
      cross.push_back(Matrix::Zero(d, d));
    }
  double kernel_max = 0.0;
  const Matrix uu = lambda * u * u.transpose();
  Matrix w_all(d, m);
  for (Index t = 0; t < n; ++t) {
    Rng rng = derive_rng(seed, static_cast<std::uint64_t>(t));
    const Matrix mm = sample_goe(d, rng).dense() + uu;
    for (Index i = 0; i < m; ++i) {
      const Vector w = proj[static_cast<std::size_t>(i)] * (mm * queries.col(i));
      w_all.col(i) = w;
      if (i > 0) {
        kernel_max = std::max(kernel_max,
                              (queries.leftCols(i).transpose() * w).cwiseAbs().maxCoeff());
      }
    }
    sum += w_all;
    sum_sq += w_all.cwiseAbs2();
    for (Index i = 0; i < m; ++i) {
      second[static_cast<std::size_t>(i)].noalias() += w_all.col(i) * w_all.col(i).transpose();
    }
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      cross[p].noalias() += w_all.col(pairs[p].first) * w_all.col(pairs[p].second).transpose();
    }
  }
  const double nn = static_cast<double>(n);
  const Matrix mean = sum / nn;
  const Matrix var = (sum_sq / nn - mean.cwiseAbs2()).cwiseMax(0.0);

  double mean_z = 0.0;
  double cov_err = 0.0;
  for (Index i = 0; i < m; ++i) {
    const Matrix& p = proj[static_cast<std::size_t>(i)];
    const Vector v = queries.col(i);
    const Vector mean_th = lambda * u.dot(v) * (p * u);
    const Matrix cov_th = p * (Matrix::Identity(d, d) + v * v.transpose()) * p / dd;
    for (Index a = 0; a < d; ++a) {
      const double se = std::sqrt(var(a, i) / nn);
      const double diff = std::abs(mean(a, i) - mean_th(a));
      if (se > 0.0) {
        mean_z = std::max(mean_z, diff / se);
      } else if (diff > 1e-12) {
        mean_z = std::numeric_limits<double>::infinity();
      }
    }
    const Matrix cov_emp = second[static_cast<std::size_t>(i)] / nn -
                           mean.col(i) * mean.col(i).transpose();
    cov_err = std::max(cov_err, (cov_emp - cov_th).norm());
  }

  double cross_ratio = 0.0;
  double cross_max_z = 0.0;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const Index i = pairs[p].first;
    const Index j = pairs[p].second;
    const Matrix c = cross[p] / nn - mean.col(i) * mean.col(j).transpose();
    const Matrix se2 = var.col(i) * var.col(j).transpose() / nn;
    const double se_f = std::sqrt(se2.sum());
    if (se_f > 0.0) cross_ratio = std::max(cross_ratio, c.norm() / se_f);
    for (Index a = 0; a < d; ++a)
      for (Index b = 0; b < d; ++b)
        if (se2(a, b) > 0.0)
          cross_max_z = std::max(cross_max_z, std::abs(c(a, b)) / std::sqrt(se2(a, b)));
  }

  std::vector<TrialReport> out;
  TrialReport mean_rep;
  mean_rep.claim = "conditional_mean";
  mean_rep.n = n;
  mean_rep.empirical = mean_z;
  mean_rep.bound = 4.0;
  settle(mean_rep);
  out.push_back(mean_rep);

  TrialReport cov_rep;
  cov_rep.claim = "conditional_cov";
  cov_rep.n = n;
  cov_rep.empirical = cov_err;
  cov_rep.bound = 0.02;
  settle(cov_rep);
  out.push_back(cov_rep);

  TrialReport cross_rep;
  cross_rep.claim = "conditional_cross";
  cross_rep.n = n;
  cross_rep.empirical = cross_ratio;
  cross_rep.bound = 4.0;
  cross_rep.extra["max_entry_z"] = cross_max_z;
  cross_rep.extra["entries"] = static_cast<double>(pairs.size() * d * d);
  settle(cross_rep);
  out.push_back(cross_rep);

  TrialReport ker_rep;
  ker_rep.claim = "conditional_kernel";
  ker_rep.n = n;
  ker_rep.empirical = kernel_max;
  ker_rep.bound = 1e-8;
  settle(ker_rep);
  out.push_back(ker_rep);
  return out;
}

TrialReport eigengap_trial(const EigengapParams& prm) {
  std::int64_t good = 0;
  std::int64_t implied_bad = 0;
  std::int64_t top_in_window = 0;
  std::int64_t rth_separated = 0;
  const double lambda = lambda_from_gap(prm.gap);
  const double edge = lambda + 1.0 / lambda;
  for (Index i = 0; i < prm.n; ++i) {
    Rng seeder = derive_rng(prm.seed, static_cast<std::uint64_t>(i));
    InstancePtr inst = make_instance(prm.d, prm.r, prm.gap, seeder());
    const Vector eig = symmetric_eigenvalues(inst->materialize()).reverse();
    const double w_norm = spectral_norm_symmetric(inst->noise().dense());
    const EgoodReport eg = check_egood(*inst, prm.gamma, eig, w_norm);
    if (eg.holds) ++good;
    if (eg.holds && !eg.implied_gap_ok) ++implied_bad;
    if (eig(0) >= 0.95 * edge && eig(0) <= 1.05 * edge) ++top_in_window;
    if (eig(prm.r - 1) - w_norm >= edge * prm.gap / 4.0) ++rth_separated;
  }
  TrialReport rep = frequency_report("eigengap", prm.n - good, prm.n, prm.delta);
  rep.extra["egood_frequency"] = static_cast<double>(good) / static_cast<double>(prm.n);
  rep.extra["implied_gap_violations"] = static_cast<double>(implied_bad);
  rep.extra["top_in_window"] = static_cast<double>(top_in_window);
  rep.extra["rth_separated"] = static_cast<double>(rth_separated);
  if (implied_bad > 0) {
    rep.pass = false;
    rep.status = TrialStatus::kFail;
    rep.note = "implied gap bound failed on an E_good instance";
  }
  if (prm.report_only) rep.status = TrialStatus::kReportOnly;
  return rep;
}

TrialReport big_gap_trial(Index d, Index r, double lambda, Index n,
                          std::uint64_t seed) {
  require(lambda > 1.0, ErrorCode::kOutOfRange, "big_gap: lambda must exceed 1");
  const double gap = gap_from_lambda(lambda);
  std::int64_t bad = 0;
  for (Index i = 0; i < n; ++i) {
    Rng seeder = derive_rng(seed, static_cast<std::uint64_t>(i));
    InstancePtr inst = make_instance(d, r, gap, seeder());
    const SpectralSummary s = spectral_summary(*inst);
    const bool ok = s.op_norm_w <= 3.0 &&
                    s.eigenvalues(r - 1) - s.op_norm_w >= inst->lambda() / 2.0 &&
                    1.0 - s.gap_r <= 2.0 / inst->lambda();
    if (!ok) ++bad;
  }
  TrialReport rep = frequency_report("big_gap", bad, n, 0.1);
  rep.extra["event_frequency"] = 1.0 - rep.empirical;
  return rep;
}

std::vector<TrialReport> small_ball_trial(Index d, Index k,
                                          const std::vector<double>& taus,
                                          Index n, std::uint64_t seed) {
  require(k >= 0 && k + 1 < d, ErrorCode::kInvalidDimension,
          "small_ball: need k + 1 < d");
  std::vector<std::int64_t> hits(taus.size(), 0);
  const double dd = static_cast<double>(d);
  for (Index i = 0; i < n; ++i) {
    Rng rng = derive_rng(seed, static_cast<std::uint64_t>(i));
    std::normal_distribution<double> nd(0.0, 1.0);
    // ‖z‖² splits into the k+1 coordinates seen by V and an independent
    // chi-square with d-k-1 degrees of freedom.
    std::gamma_distribution<double> rest(0.5 * static_cast<double>(d - k - 1), 2.0);
    double head = 0.0;
    for (Index j = 0; j <= k; ++j) {
      const double z = nd(rng);
      head += z * z;
    }
    const double stat = dd * head / (head + rest(rng));
    for (std::size_t t = 0; t < taus.size(); ++t)
      if (stat >= taus[t]) ++hits[t];
  }
  std::vector<TrialReport> out;
  for (std::size_t t = 0; t < taus.size(); ++t) {
    TrialReport rep = frequency_report("small_ball", hits[t], n, small_ball_bound(taus[t], k));
    rep.extra["k"] = static_cast<double>(k);
    rep.extra["tau"] = taus[t];
    out.push_back(rep);
  }
  return out;
}

}  // namespace qlab
