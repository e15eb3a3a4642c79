// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
// Usage: acceptance [criterion ids...]   (default: all ten)

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qlab/concentration.hpp"
#include "qlab/divergences.hpp"
#include "qlab/experiments.hpp"
#include "qlab/linalg.hpp"
#include "qlab/potential.hpp"
#include "qlab/random.hpp"
#include "qlab/rmt.hpp"

using namespace qlab;

namespace tol {
constexpr double kGapRoundTrip = 1e-10;
constexpr double kLambdaHalf = 1e-6;
constexpr double kLambdaSix = 1e-12;
constexpr double kEgoodFrequency = 0.9;
constexpr double kStieltjes = 0.01;
constexpr double kSemicircleIdentity = 1e-10;
constexpr double kWilsonZ = 3.0;
constexpr double kMeanZ = 4.0;
constexpr double kCovFrobenius = 0.02;
constexpr double kCrossZ = 4.0;
constexpr double kKernel = 1e-8;
constexpr double kGrowthFrequency = 0.2;
constexpr double kDetRelative = 1e-9;
constexpr double kShermanMorrison = 1e-8;
constexpr double kDpiSlack = 1e-10;
constexpr double kIdentity = 1e-10;
constexpr double kMomentZ = 3.0;
constexpr double kKrylovLo = 0.35, kKrylovHi = 0.65;
constexpr double kPowerLo = 0.8, kPowerHi = 1.2;
}  // namespace tol

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Upper Wilson limit minus the point estimate.
double wilson_half_width(std::int64_t k, std::int64_t n, double z) {
  const double nn = static_cast<double>(n), p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * nn)) / (1 + z2 / nn);
  const double half = z / (1 + z2 / nn) * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn));
  return centre + half - p;
}

double semicircle(double a) { return 0.5 * (a - std::sqrt(a * a - 4.0)); }

double lambda_closed_form(double g) {
  return (1.0 + std::sqrt(1.0 - (1.0 - g) * (1.0 - g))) / (1.0 - g);
}

Outcome c1_gap_algebra() {
  Rng rng(101);
  std::uniform_real_distribution<double> u(1e-6, 1.0 - 1e-6);
  double worst = 0.0, worst_closed = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double g = u(rng);
    const double l = lambda_from_gap(g);
    worst = std::max(worst, std::abs(gap_from_lambda(l) - g));
    worst_closed = std::max(worst_closed, std::abs(l - lambda_closed_form(g)) / l);
  }
  const double lh = lambda_from_gap(0.5);
  const double g6 = gap_from_lambda(6.0);
  Outcome o;
  o.pass = worst <= tol::kGapRoundTrip && worst_closed <= tol::kGapRoundTrip &&
           std::abs(lh - 3.7320508) <= tol::kLambdaHalf &&
           std::abs(g6 - 25.0 / 37.0) <= tol::kLambdaSix;
  o.detail = "round-trip " + fmt("%.2e", worst) + ", lambda(0.5)=" + fmt("%.9f", lh) +
             ", gap(6)-25/37=" + fmt("%.1e", g6 - 25.0 / 37.0);
  return o;
}

Outcome c2_eigengap() {
  const Index d = 2000, n = 50;
  const double gap = 0.2;
  int good = 0, bad_gap = 0;
  double min_gap = 1.0;
  for (Index i = 0; i < n; ++i) {
    InstancePtr inst = make_instance(d, 1, gap, 20000 + static_cast<std::uint64_t>(i));
    const EgoodReport e = check_egood(*inst, 0.5);
    if (!e.holds) continue;
    ++good;
    // gap_1(M) recomputed from a fresh spectrum.
    const Vector ev = symmetric_eigenvalues(inst->materialize());
    const Vector s = ev.cwiseAbs();
    std::vector<double> sv(s.data(), s.data() + s.size());
    std::sort(sv.rbegin(), sv.rend());
    const double g1 = (sv[0] - sv[1]) / sv[0];
    min_gap = std::min(min_gap, g1);
    if (g1 < gap / 3.0) ++bad_gap;
  }
  const double freq = static_cast<double>(good) / static_cast<double>(n);
  Outcome o;
  o.pass = freq >= tol::kEgoodFrequency && bad_gap == 0;
  o.detail = "E_good freq " + fmt("%.2f", freq) + ", min gap_1 on E_good " +
             fmt("%.4f", min_gap) + " (floor " + fmt("%.4f", gap / 3.0) + ")";
  return o;
}

Outcome c3_stieltjes() {
  const Index d = 4000;
  const double a = 2.5;
  const double dd = static_cast<double>(d);
  const double log_inv_p = std::cbrt(dd);
  const double zstar = 2.0 + 21.0 * std::pow(dd, -1.0 / 3.0) * std::pow(std::log(dd), 2.0 / 3.0) +
                       2.0 * std::sqrt(log_inv_p / dd);
  double worst = 0.0;
  int kept = 0, drawn = 0;
  const double target = semicircle(a);
  while (kept < 20 && drawn < 40) {
    Rng rng = derive_rng(30001, static_cast<std::uint64_t>(drawn++));
    const Vector ev = symmetric_eigenvalues(sample_goe(d, rng).dense());
    if (ev.cwiseAbs().maxCoeff() > zstar) continue;
    double s = 0.0;
    for (Index i = 0; i < d; ++i) s += 1.0 / (a - ev(i));
    worst = std::max(worst, std::abs(s / dd - target));
    ++kept;
  }
  Rng rng(31);
  std::uniform_real_distribution<double> lu(1.0 + 1e-6, 8.0);
  double worst_id = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double l = lu(rng);
    worst_id = std::max(worst_id, std::abs(semicircle_stieltjes(l + 1.0 / l) - 1.0 / l));
  }
  Outcome o;
  o.pass = kept == 20 && worst <= tol::kStieltjes && worst_id <= tol::kSemicircleIdentity;
  o.detail = "max |S_W(2.5)-s(2.5)| " + fmt("%.2e", worst) + " over " + std::to_string(kept) +
             " draws (z*=" + fmt("%.3f", zstar) + "), identity " + fmt("%.1e", worst_id);
  return o;
}

Outcome c4_hanson_wright() {
  const Index d = 500, r = 2, n = 10000;
  const double t = 8.0;
  Rng rng = derive_rng(40001, 0);
  const Matrix a = sample_goe(d, rng).dense();
  const double fro = a.norm();
  const double op = symmetric_eigenvalues(a).cwiseAbs().maxCoeff();
  const double dd = static_cast<double>(d);
  const double thr = 8.0 * (std::sqrt(t) * fro + t * op) / (dd * (1.0 - 2.0 * std::sqrt(t / dd)));
  const double tr = a.trace() / dd;
  std::int64_t exceed = 0;
  for (Index i = 0; i < n; ++i) {
    const Matrix g = gaussian_matrix(d, r, rng);
    const Matrix u = Eigen::HouseholderQR<Matrix>(g).householderQ() * Matrix::Identity(d, r);
    Matrix b = u.transpose() * a * u - tr * Matrix::Identity(r, r);
    b = 0.5 * (b + b.transpose());
    const double dev = Eigen::SelfAdjointEigenSolver<Matrix>(b).eigenvalues().cwiseAbs().maxCoeff();
    if (dev > thr) ++exceed;
  }
  const double bound = 3.0 * std::exp(-t + 2.2 * static_cast<double>(r));
  const double hw = wilson_half_width(exceed, n, tol::kWilsonZ);
  const double freq = static_cast<double>(exceed) / static_cast<double>(n);
  Outcome o;
  o.pass = freq <= bound + hw;
  o.detail = "exceedance " + fmt("%.4f", freq) + " <= " + fmt("%.4f", bound) + " + " +
             fmt("%.4f", hw);
  return o;
}

Outcome c5_conditional() {
  const Index d = 40;
  Rng rng = derive_rng(50001, 0);
  const Matrix q = thin_q(gaussian_matrix(d, 3, rng));
  const Vector u = sphere_vector(d, rng);
  const auto reps = conditional_cov_trial(q, u, lambda_from_gap(0.2), 100000, 50002);
  std::map<std::string, double> e;
  for (const auto& rp : reps) e[rp.claim] = rp.empirical;
  const double mean_z = e.at("conditional_mean"), cov = e.at("conditional_cov");
  const double cross = e.at("conditional_cross"), kern = e.at("conditional_kernel");
  Outcome o;
  o.pass = mean_z < tol::kMeanZ && cov < tol::kCovFrobenius && cross < tol::kCrossZ &&
           kern <= tol::kKernel;
  o.detail = "mean z " + fmt("%.2f", mean_z) + ", cov " + fmt("%.4f", cov) + ", cross z " +
             fmt("%.2f", cross) + ", kernel " + fmt("%.1e", kern);
  return o;
}

Outcome c6_growth() {
  GrowthTrialParams p;
  p.d = 4000;
  p.gap = 0.2;
  p.delta = 0.1;
  p.trials = 200;
  p.budget_rounds = 20;
  p.seed = 60001;
  const TrialReport rep =
      growth_violation_trial(honest_solver(SolverKind::kBlockKrylov, 1, p.budget_rounds), p);
  // Independent schedule check at k = 0.
  const double tau0 = 32.0 / p.gap * (std::log(1.0 / p.delta) + 1.0 / std::sqrt(p.gap));
  Outcome o;
  o.pass = rep.n == 200 && rep.empirical <= tol::kGrowthFrequency &&
           std::abs(rep.extra.at("tau0") - tau0) <= 1e-9 * tau0;
  o.detail = "violation freq " + fmt("%.3f", rep.empirical) + " over 200 runs, max d*phi/tau " +
             fmt("%.2e", rep.extra.at("max_phi_over_tau"));
  return o;
}

Outcome c7_determinant() {
  const Index d = 60, r = 3, k_max = 12;
  const double offset = 1.0;
  Rng rng = derive_rng(70001, 0);
  std::uniform_real_distribution<double> lt(2.0, 40.0);
  std::normal_distribution<double> nd(0.0, 1.0);
  int passing = 0, attempts = 0, failures = 0;
  double worst = 0.0;
  while (passing < 1000 && attempts < 20000) {
    ++attempts;
    const Matrix u = thin_q(gaussian_matrix(d, r, rng));
    std::vector<Matrix> ov{Matrix::Zero(r, r)};
    Matrix basis(d, 0);
    for (Index k = 1; k <= k_max; ++k) {
      Vector g = gaussian_vector(d, rng);
      if (k > 1 && nd(rng) > 0.5) g += 2.0 * u * (u.transpose() * g);
      g -= basis * (basis.transpose() * g);
      g -= basis * (basis.transpose() * g);
      g.normalize();
      basis.conservativeResize(Eigen::NoChange, k);
      basis.col(k - 1) = g;
      const Matrix p = u.transpose() * basis;
      ov.push_back(p * p.transpose());
    }
    const double l = lt(rng);
    if (!geometric_event_check(ov, d, l, offset, k_max).holds) continue;
    ++passing;
    for (Index k = 0; k <= k_max; ++k) {
      const Matrix m = static_cast<double>(d) * ov[k] + offset * Matrix::Identity(r, r);
      const double cap = std::pow(l, static_cast<double>(k)) * std::pow(offset, r);
      const double ratio = m.determinant() / cap;
      worst = std::max(worst, ratio);
      if (ratio > 1.0 + tol::kDetRelative) ++failures;
    }
  }
  double sm_worst = 0.0;
  for (int run = 0; run < 100; ++run) {
    DetState st(r, offset);
    Matrix a = offset * Matrix::Identity(r, r);
    for (int k = 0; k < 50; ++k) {
      const Vector x = gaussian_vector(r, rng);
      st = det_step(std::move(st), x);
      a += x * x.transpose();
      const double dense = a.determinant();
      sm_worst = std::max(sm_worst, std::abs(st.det() - dense) / std::abs(dense));
    }
  }
  Outcome o;
  o.pass = passing == 1000 && failures == 0 && sm_worst <= tol::kShermanMorrison;
  o.detail = std::to_string(passing) + " traces (of " + std::to_string(attempts) +
             "), worst det ratio " + fmt("%.4f", worst) + ", Sherman-Morrison rel " +
             fmt("%.1e", sm_worst);
  return o;
}

double kl_sum(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) s += p[i] * std::log(p[i] / q[i]);
  return s;
}

Outcome c8_divergences() {
  // Independent KL data-processing check plus agreement with the library.
  Rng rng(80001);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  double dpi_worst = 0.0, agree = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng() % 6, m = 2 + rng() % 6;
    std::vector<double> p(n), q(n);
    double sp = 0, sq = 0;
    for (std::size_t i = 0; i < n; ++i) sp += p[i] = u(rng), sq += q[i] = u(rng);
    for (std::size_t i = 0; i < n; ++i) p[i] /= sp, q[i] /= sq;
    Matrix k(n, m);
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0;
      for (std::size_t j = 0; j < m; ++j) row += k(i, j) = u(rng);
      k.row(i) /= row;
    }
    std::vector<double> pp(m, 0.0), qq(m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) pp[j] += p[i] * k(i, j), qq[j] += q[i] * k(i, j);
    dpi_worst = std::max(dpi_worst, kl_sum(pp, qq) - kl_sum(p, q));
    const double lib = f_divergence(FiniteMeasure(p), FiniteMeasure(q), DivergenceFunction::kl());
    agree = std::max(agree, std::abs(lib - kl_sum(p, q)));
  }

  // Library claim suite at full size, judged here.
  ExperimentConfig cfg;
  cfg.seed = 80002;
  cfg.claims = {"f_divergence_dpi", "phi_min", "linearity", "normalization", "bayes_bound"};
  cfg.params["f_divergence_dpi.n"] = "1000";
  cfg.params["bayes_bound.n"] = "500";
  const VerifySummary vs = run_verify(cfg);
  std::map<std::string, const TrialReport*> by;
  for (const auto& r : vs.reports) by[r.claim] = &r;
  const bool dpi_ok = by.count("f_divergence_dpi") && by["f_divergence_dpi"]->n == 1000 &&
                      by["f_divergence_dpi"]->empirical <= tol::kDpiSlack;
  const bool phi_ok = by.count("phi_min") && by["phi_min"]->empirical <= tol::kIdentity;
  const bool lin_ok = by.count("linearity") && by["linearity"]->empirical <= tol::kIdentity;
  const bool norm_ok = by.count("normalization") && by["normalization"]->empirical <= tol::kIdentity;
  const bool bayes_ok = by.count("bayes_bound") && by["bayes_bound"]->n == 500 &&
                        by["bayes_bound"]->status == TrialStatus::kPass;

  // Gaussian power moment against importance sampling under the second law.
  Rng g = derive_rng(80003, 0);
  const Index dim = 3;
  const double eta = 0.5;
  const Matrix b = gaussian_matrix(dim, dim, g);
  const Matrix sigma = b * b.transpose() / 3.0 + 0.5 * Matrix::Identity(dim, dim);
  const Vector mu1 = 0.3 * gaussian_vector(dim, g), mu2 = 0.3 * gaussian_vector(dim, g);
  const double closed = gaussian_power_moment(mu1, mu2, sigma, eta);
  const Eigen::LLT<Matrix> llt(sigma);
  const Vector w = llt.solve(mu1 - mu2);
  const Index n = 1000000;
  double s = 0.0, s2 = 0.0;
  for (Index i = 0; i < n; ++i) {
    const Vector x = mu2 + llt.matrixL() * gaussian_vector(dim, g);
    const double v = std::exp((1.0 + eta) * w.dot(x - 0.5 * (mu1 + mu2)));  // L^{1+eta}
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / (n - 1));
  const double z = std::abs(mean - closed) / se;

  Outcome o;
  o.pass = dpi_worst <= tol::kDpiSlack && agree <= 1e-12 && dpi_ok && phi_ok && lin_ok &&
           norm_ok && bayes_ok && z <= tol::kMomentZ;
  std::ostringstream os;
  os << "KL DPI " << fmt("%.1e", dpi_worst) << ", suite dpi/phi/lin/norm/bayes " << dpi_ok
     << phi_ok << lin_ok << norm_ok << bayes_ok << ", moment z " << fmt("%.2f", z);
  o.detail = os.str();
  return o;
}

double fit_exponent(const std::vector<SweepCell>& cells, const std::string& solver,
                    bool& censored, std::string& medians) {
  std::vector<double> x, y;
  for (const auto& c : cells) {
    if (c.solver != solver) continue;
    if (c.median_censored) censored = true;
    x.push_back(std::log(1.0 / c.gap));
    y.push_back(std::log(c.median));
    medians += (medians.empty() ? "" : "/") + fmt("%.0f", c.median);
  }
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

Outcome c9_scaling() {
  ExperimentConfig cfg;
  cfg.seed = 90001;
  cfg.d = {4000};
  cfg.r = {1};
  cfg.gap = {0.4, 0.1, 0.025};
  cfg.solver = {"block_krylov", "power_method"};
  cfg.budget = {2000};
  cfg.trials = 9;
  cfg.epsilon = 1.0 / 12.0;
  const SweepResult res = run_sweep(cfg);
  bool cens_k = false, cens_p = false;
  std::string mk, mp;
  const double ak = fit_exponent(res.cells, "block_krylov", cens_k, mk);
  const double ap = fit_exponent(res.cells, "power_method", cens_p, mp);
  Outcome o;
  o.pass = !cens_k && !cens_p && ak >= tol::kKrylovLo && ak <= tol::kKrylovHi &&
           ap >= tol::kPowerLo && ap <= tol::kPowerHi;
  o.detail = "alpha block_krylov " + fmt("%.3f", ak) + " (medians " + mk + "), power_method " +
             fmt("%.3f", ap) + " (medians " + mp + ")";
  return o;
}

Outcome c10_small_ball() {
  const Index d = 1000, n = 100000;
  Rng rng(100001);
  std::normal_distribution<double> nd(0.0, 1.0);
  bool all = true;
  double worst_margin = -1.0;
  for (Index k : {1, 5, 20}) {
    std::vector<double> stat(n);
    for (Index i = 0; i < n; ++i) {
      double head = 0.0, total = 0.0;
      for (Index j = 0; j < d; ++j) {
        const double z = nd(rng);
        total += z * z;
        if (j <= k) head += z * z;
      }
      stat[i] = static_cast<double>(d) * head / total;
    }
    for (double m : {2.0, 4.0, 8.0}) {
      const double tau = m * static_cast<double>(k + 1);
      std::int64_t hits = 0;
      for (double s : stat) hits += s >= tau;
      const double root = std::sqrt(tau) - std::sqrt(2.0 * static_cast<double>(k + 1));
      const double bound = std::exp(-0.5 * root * root);
      const double freq = static_cast<double>(hits) / static_cast<double>(n);
      const double margin = freq - bound - wilson_half_width(hits, n, tol::kWilsonZ);
      worst_margin = std::max(worst_margin, margin);
      if (margin > 0.0) all = false;
    }
  }
  Outcome o;
  o.pass = all;
  o.detail = "9 cells, worst (empirical - bound - half-width) " + fmt("%.4f", worst_margin);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gap_lambda_algebra", c1_gap_algebra},
      {"eigengap_concentration", c2_eigengap},
      {"stieltjes_endpoint", c3_stieltjes},
      {"stiefel_hanson_wright", c4_hanson_wright},
      {"conditional_likelihood", c5_conditional},
      {"potential_growth_law", c6_growth},
      {"determinant_recursion", c7_determinant},
      {"f_divergence_suite", c8_divergences},
      {"query_complexity_scaling", c9_scaling},
      {"small_ball_bound", c10_small_ball},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  std::printf("eigensolver backend: %s\n", eigensolver_backend());
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %2d %-26s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id,
                criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
