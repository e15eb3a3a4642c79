#include "qlab/potential.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "qlab/error.hpp"

namespace qlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double largest_eigenvalue(const Matrix& g) {
  if (g.rows() == 1) return g(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(g.rows() - 1);
}

// r'-th largest eigenvalue.
double ranked_eigenvalue(const Matrix& g, Index r_prime) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(g.rows() - r_prime);
}

double dense_det(const Matrix& a) {
  Eigen::LLT<Matrix> llt(a);
  require(llt.info() == Eigen::Success, ErrorCode::kNumericalFailure,
          "matrix is not positive definite");
  const double p = llt.matrixL().toDenseMatrix().diagonal().prod();
  return p * p;
}

// overlaps[k] for k = 0..K, one per query (k = number of queries).
PotentialTrace build_trace(const std::vector<Matrix>& overlaps, Index d,
                           double lambda, double gap, Index batch,
                           const TraceOptions& opt) {
  PotentialTrace tr;
  tr.d = d;
  tr.r = overlaps.front().rows();
  tr.batch = batch;
  const Index k_total = static_cast<Index>(overlaps.size()) - 1;
  const Index rounds = k_total / batch;
  const std::vector<double> tau =
      threshold_schedule(opt.delta, gap, lambda, std::max<Index>(rounds, 0));
  DetState det(tr.r, opt.det_offset);
  const double dd = static_cast<double>(d);
  for (Index k = 0; k <= k_total; ++k) {
    PotentialRecord rec;
    rec.k = k;
    rec.overlap = overlaps[k];
    rec.phi = largest_eigenvalue(rec.overlap);
    if (k > 0) {
      // x xᵀ = d (G_k - G_{k-1}) is rank one for a single new direction.
      Matrix diff = dd * (overlaps[k] - overlaps[k - 1]);
      Eigen::SelfAdjointEigenSolver<Matrix> es(diff);
      const double top = es.eigenvalues()(tr.r - 1);
      Vector x = std::sqrt(std::max(top, 0.0)) * es.eigenvectors().col(tr.r - 1);
      det = det_step(det, x);
    }
    rec.det_state = det.det();
    rec.tau = (k % batch == 0) ? static_cast<double>(batch) * tau[k / batch] : kNaN;
    rec.envelope = kNaN;
    if (opt.with_envelope) {
      try {
        rec.envelope = rank_r_envelope(k, opt.r_prime, tr.r, d, gap, lambda,
                                       opt.delta);
      } catch (const Error&) {
        rec.envelope = kNaN;
      }
    }
    if (tr.r == 1 || !opt.with_envelope) {
      rec.violated = k >= batch && k % batch == 0 && dd * rec.phi >= rec.tau;
    } else {
      rec.violated = std::isfinite(rec.envelope) &&
                     ranked_eigenvalue(rec.overlap, opt.r_prime) > rec.envelope;
    }
    tr.records.push_back(std::move(rec));
  }
  return tr;
}

std::vector<Matrix> overlaps_by_width(const Matrix& v, const Matrix& u) {
  const Index r = u.cols();
  Matrix c = u.transpose() * v;  // r x K
  std::vector<Matrix> out;
  out.reserve(v.cols() + 1);
  Matrix g = Matrix::Zero(r, r);
  out.push_back(g);
  for (Index j = 0; j < v.cols(); ++j) {
    g += c.col(j) * c.col(j).transpose();
    out.push_back(g);
  }
  return out;
}

}  // namespace

double phi(const Matrix& v, const Vector& u) {
  require(v.rows() == u.size(), ErrorCode::kInvalidDimension,
          "phi: dimension mismatch");
  if (v.cols() == 0) return 0.0;
  return (v.transpose() * u).squaredNorm();
}

std::vector<double> threshold_schedule(double delta, double gap, double lambda,
                                       Index k_max) {
  require(delta > 0.0 && delta < std::exp(-1.0), ErrorCode::kOutOfRange,
          "threshold_schedule: delta must lie in (0, 1/e)");
  require(gap > 0.0 && gap < 1.0, ErrorCode::kOutOfRange,
          "threshold_schedule: gap must lie in (0,1)");
  require(lambda > 1.0, ErrorCode::kOutOfRange, "threshold_schedule: lambda <= 1");
  require(k_max >= 0, ErrorCode::kInvalidArgument, "threshold_schedule: k_max < 0");
  const double tau0 = 32.0 / gap * (std::log(1.0 / delta) + 1.0 / std::sqrt(gap));
  const double ratio = std::pow(lambda, 4.0);
  std::vector<double> tau(static_cast<std::size_t>(k_max) + 1);
  tau[0] = tau0;
  for (std::size_t k = 1; k < tau.size(); ++k) tau[k] = tau[k - 1] * ratio;
  return tau;
}

double rank_r_envelope(Index k, Index r_prime, Index r, Index d, double gap,
                       double lambda, double delta) {
  require(r_prime >= 1 && r_prime <= r, ErrorCode::kInvalidArgument,
          "rank_r_envelope: need 1 <= r' <= r");
  require(gap > 0.0 && gap < 1.0, ErrorCode::kOutOfRange,
          "rank_r_envelope: gap must lie in (0,1)");
  require(delta > 0.0 && delta < 1.0, ErrorCode::kOutOfRange,
          "rank_r_envelope: delta must lie in (0,1)");
  require(static_cast<double>(d) >= 1.0 / std::sqrt(gap),
          ErrorCode::kRegimeViolation, "rank_r_envelope: d < gap^{-1/2}");
  const double dd = static_cast<double>(d);
  return 26.0 * static_cast<double>(r) *
         std::pow(lambda, 9.0 * static_cast<double>(k) / static_cast<double>(r_prime)) *
         std::log(20.0 * dd * dd) * std::log(std::exp(1.0) / delta) /
         (dd * gap * gap);
}

double small_ball_bound(double tau, Index k) {
  const double base = 2.0 * static_cast<double>(k + 1);
  require(k >= 0 && tau >= base, ErrorCode::kOutOfRange,
          "small_ball_bound: need tau >= 2(k+1)");
  const double s = std::sqrt(tau) - std::sqrt(base);
  return std::exp(-0.5 * s * s);
}

DetState::DetState(Index r, double delta_offset) : offset_(delta_offset) {
  require(r >= 1, ErrorCode::kInvalidRank, "DetState: r must be >= 1");
  require(delta_offset > 0.0, ErrorCode::kOutOfRange, "DetState: Delta must be > 0");
  a_ = delta_offset * Matrix::Identity(r, r);
  inv_ = Matrix::Identity(r, r) / delta_offset;
  det_ = std::pow(delta_offset, static_cast<double>(r));
}

void DetState::refresh() {
  Eigen::LLT<Matrix> llt(a_);
  require(llt.info() == Eigen::Success, ErrorCode::kNumericalFailure,
          "det state is not positive definite");
  const double p = llt.matrixL().toDenseMatrix().diagonal().prod();
  det_ = p * p;
  inv_ = llt.solve(Matrix::Identity(a_.rows(), a_.cols()));
}

DetState det_step(DetState state, const Vector& x) {
  require(x.size() == state.rank(), ErrorCode::kInvalidDimension,
          "det_step: x has wrong length");
  const Vector ax = state.inv_ * x;
  const double factor = 1.0 + x.dot(ax);
  state.a_.noalias() += x * x.transpose();
  ++state.steps_;
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    state.refresh();
    return state;
  }
  state.inv_.noalias() -= (ax * ax.transpose()) / factor;
  state.det_ *= factor;
  if (state.steps_ % kRefreshPeriod == 0 || state.inv_.diagonal().minCoeff() <= 0.0) {
    state.refresh();
  }
  return state;
}

PotentialTrace trace_frame(const Matrix& v, const Matrix& u, double lambda,
                           double gap, const TraceOptions& options) {
  require(v.rows() == u.rows(), ErrorCode::kInvalidDimension,
          "trace_frame: dimension mismatch");
  return build_trace(overlaps_by_width(v, u), v.rows(), lambda, gap, 1, options);
}

PotentialTrace trace_session(const OracleSession& session,
                             const TraceOptions& options) {
  const DeformedWignerInstance& inst = session.instance_for_instrumentation();
  const std::vector<Matrix> by_width =
      overlaps_by_width(session.frame(), inst.spike().matrix());
  std::vector<Matrix> by_query;
  by_query.reserve(session.queries_used() + 1);
  by_query.push_back(by_width.front());
  for (Index w : session.frame_width_history()) by_query.push_back(by_width[w]);
  return build_trace(by_query, inst.d(), inst.lambda(), inst.gap(),
                     session.batch_size(), options);
}

void write_trace_csv(std::ostream& os, const PotentialTrace& trace) {
  os << "k,phi,tau_k,det_state,envelope,violated\n";
  os.precision(12);
  for (const auto& rec : trace.records) {
    os << rec.k << ',' << rec.phi << ',' << rec.tau << ',' << rec.det_state
       << ',' << rec.envelope << ',' << (rec.violated ? 1 : 0) << '\n';
  }
}

GeometricEventResult geometric_event_check(const std::vector<Matrix>& overlaps,
                                           Index d, double lambda_tilde,
                                           double delta_offset, Index k_max) {
  require(k_max >= 0 && static_cast<Index>(overlaps.size()) > k_max,
          ErrorCode::kInvalidArgument, "geometric_event_check: trace too short");
  require(lambda_tilde >= 1.0 && delta_offset > 0.0, ErrorCode::kOutOfRange,
          "geometric_event_check: need lambda_tilde >= 1, Delta > 0");
  const Index r = overlaps.front().rows();
  const double dd = static_cast<double>(d);
  const Matrix shift = delta_offset * Matrix::Identity(r, r);
  GeometricEventResult res;
  res.holds = true;
  Matrix prev = dd * overlaps[0] + shift;
  const double det0 = dense_det(prev);
  for (Index k = 1; k <= k_max; ++k) {
    Matrix cur = dd * overlaps[k] + shift;
    Eigen::LLT<Matrix> llt(prev);
    require(llt.info() == Eigen::Success, ErrorCode::kNumericalFailure,
            "geometric_event_check: pencil not positive definite");
    const Matrix linv = llt.matrixL().solve(Matrix::Identity(r, r));
    Matrix c = linv * cur * linv.transpose();
    const double ratio = largest_eigenvalue(0.5 * (c + c.transpose()));
    res.max_ratio = std::max(res.max_ratio, ratio);
    if (ratio > lambda_tilde * (1.0 + 1e-12)) res.holds = false;
    prev = std::move(cur);
    res.k_checked = k;
  }
  if (res.holds) {
    Index k = 0;
    for (const Matrix& g : overlaps) {
      if (k > k_max) break;
      const double det = dense_det(dd * g + shift);
      const double cap = std::pow(lambda_tilde, static_cast<double>(k)) * det0;
      res.worst_det_ratio = std::max(res.worst_det_ratio, det / cap);
      if (det > cap * (1.0 + 1e-9)) res.det_conclusion = false;
      ++k;
    }
  }
  return res;
}

GeometricEventResult geometric_event_check(const PotentialTrace& trace,
                                           double lambda_tilde,
                                           double delta_offset, Index k_max) {
  std::vector<Matrix> overlaps;
  overlaps.reserve(trace.records.size());
  for (const auto& rec : trace.records) overlaps.push_back(rec.overlap);
  return geometric_event_check(overlaps, trace.d, lambda_tilde, delta_offset,
                               k_max);
}

double det_eigen_bridge(double det, double delta_offset, Index r, Index r_prime) {
  require(r_prime >= 1 && r_prime <= r, ErrorCode::kInvalidArgument,
          "det_eigen_bridge: need 1 <= r' <= r");
  const double rest = std::pow(delta_offset, static_cast<double>(r - r_prime));
  return std::pow(det / rest, 1.0 / static_cast<double>(r_prime)) - delta_offset;
}

SolverBinder honest_solver(SolverKind kind, Index r, Index budget) {
  return [=](const DeformedWignerInstance&) -> SolverFn {
    return [=](QueryChannel& ch, Rng& rng) {
      run_solver(kind, ch, r, budget, rng);
    };
  };
}

namespace {

void run_bound_solver(const SolverBinder& solver, OracleSession& session,
                      const DeformedWignerInstance& inst, Rng& rng) {
  SolverFn fn = solver(inst);
  try {
    fn(session.channel(), rng);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kBudgetExhausted &&
        e.code() != ErrorCode::kDegenerateQuery) {
      throw;
    }
  }
}

std::uint64_t instance_seed(std::uint64_t master, Index trial) {
  Rng rng = derive_rng(master, 2 * static_cast<std::uint64_t>(trial));
  return rng();
}

}  // namespace

TrialReport growth_violation_trial(const SolverBinder& solver,
                                   const GrowthTrialParams& p) {
  std::int64_t violations = 0;
  MeanAccumulator growth;
  double worst_ratio = 0.0;
  for (Index i = 0; i < p.trials; ++i) {
    InstancePtr inst = make_instance(p.d, 1, p.gap, instance_seed(p.seed, i));
    Rng rng = derive_rng(p.seed, 2 * static_cast<std::uint64_t>(i) + 1);
    OracleSession session(inst, p.budget_rounds, p.mode, p.batch);
    run_bound_solver(solver, session, *inst, rng);
    TraceOptions opt;
    opt.delta = p.delta;
    const PotentialTrace tr = trace_session(session, opt);
    bool any = false;
    std::vector<double> ks, logs;
    for (const auto& rec : tr.records) {
      any = any || rec.violated;
      if (std::isfinite(rec.tau) && rec.k > 0) {
        worst_ratio = std::max(worst_ratio, static_cast<double>(p.d) * rec.phi / rec.tau);
      }
      if (rec.k > 0 && rec.phi > 0.0) {
        ks.push_back(static_cast<double>(rec.k));
        logs.push_back(std::log(static_cast<double>(p.d) * rec.phi));
      }
    }
    if (ks.size() >= 2) growth.add(std::exp(linear_fit(ks, logs).second));
    if (any) ++violations;
  }
  const double lambda = lambda_from_gap(p.gap);
  TrialReport rep = frequency_report("growth_law", violations, p.trials, 2.0 * p.delta);
  rep.extra["delta"] = p.delta;
  rep.extra["tau0"] = threshold_schedule(p.delta, p.gap, lambda, 0)[0];
  rep.extra["max_phi_over_tau"] = worst_ratio;
  rep.extra["fitted_growth_per_query"] = growth.mean;
  rep.extra["lambda_squared"] = lambda * lambda;
  rep.note = "bound is the 2*delta acceptance band";
  return rep;
}

TrialReport rank_r_envelope_trial(const SolverBinder& solver,
                                  const EnvelopeTrialParams& p) {
  std::int64_t violations = 0;
  double worst = 0.0;
  for (Index i = 0; i < p.trials; ++i) {
    InstancePtr inst = make_instance(p.d, p.r, p.gap, instance_seed(p.seed, i));
    Rng rng = derive_rng(p.seed, 2 * static_cast<std::uint64_t>(i) + 1);
    OracleSession session(inst, p.budget_rounds, OracleMode::kRaw, 1);
    run_bound_solver(solver, session, *inst, rng);
    TraceOptions opt;
    opt.delta = p.delta;
    opt.r_prime = p.r_prime;
    opt.with_envelope = true;
    const PotentialTrace tr = trace_session(session, opt);
    bool any = false;
    for (const auto& rec : tr.records) {
      any = any || rec.violated;
      if (std::isfinite(rec.envelope)) {
        worst = std::max(worst, ranked_eigenvalue(rec.overlap, p.r_prime) / rec.envelope);
      }
    }
    if (any) ++violations;
  }
  TrialReport rep =
      frequency_report("rank_r_envelope", violations, p.trials, p.delta);
  rep.extra["max_overlap_over_envelope"] = worst;
  return rep;
}

double max_geometric_weight(double lambda, Index k_max) {
  double best = 0.0;
  for (Index k = 0; k <= k_max; ++k) {
    best = std::max(best, std::pow(lambda, -4.0 * static_cast<double>(k)) *
                              static_cast<double>(k + 1));
  }
  return best;
}

}  // namespace qlab
