#include "qlab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "qlab/error.hpp"

namespace qlab {

namespace {

constexpr double kUnitTol = 1e-10;
constexpr double kDegenerateTol = 1e-8;

std::vector<double> to_std(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

const char* oracle_mode_name(OracleMode mode) {
  return mode == OracleMode::kRaw ? "raw" : "projected";
}

Vector QueryChannel::query(const Vector& v) {
  require(batch_size() == 1, ErrorCode::kUnsupported,
          "single queries need batch size 1; submit a full round");
  Matrix block = v;
  return query_round(block).col(0);
}

OracleSession::OracleSession(InstancePtr instance, Index budget_rounds,
                             OracleMode mode, Index batch)
    : instance_(std::move(instance)),
      budget_rounds_(budget_rounds),
      mode_(mode),
      batch_(batch) {
  require(instance_ != nullptr, ErrorCode::kInvalidArgument,
          "open_session: null instance");
  require(budget_rounds_ >= 1, ErrorCode::kInvalidArgument,
          "open_session: budget T must be >= 1");
  require(batch_ >= 1, ErrorCode::kInvalidArgument,
          "open_session: batch size must be >= 1");
}

Vector OracleSession::query(const Vector& v) { return channel_.query(v); }

void OracleSession::append_frame(const Vector& q) {
  if (frame_width_ == frame_.cols()) {
    const Index d = dimension();
    const Index grow = std::min<Index>(d, std::max<Index>(8, 2 * frame_.cols()));
    frame_.conservativeResize(d, grow);
  }
  frame_.col(frame_width_++) = q;
}

Matrix OracleSession::query_round(const Matrix& block) {
  const Index d = dimension();
  require(block.rows() == d, ErrorCode::kInvalidDimension,
          "query: vector length differs from d");
  require(block.cols() == batch_, ErrorCode::kInvalidArgument,
          "query: a round must contain exactly B queries");
  require(rounds_used_ < budget_rounds_, ErrorCode::kBudgetExhausted,
          "query: budget exhausted");
  for (Index j = 0; j < block.cols(); ++j) {
    require(std::abs(block.col(j).norm() - 1.0) <= kUnitTol,
            ErrorCode::kInvalidArgument, "query: vector must have unit norm");
  }

  Matrix applied(d, batch_);
  Matrix responses(d, batch_);
  if (mode_ == OracleMode::kProjected) {
    Matrix basis(d, frame_width_ + batch_);
    basis.leftCols(frame_width_) = frame();
    Index width = frame_width_;
    for (Index j = 0; j < batch_; ++j) {
      Vector q = project_out(basis.leftCols(width), block.col(j));
      const double nrm = q.norm();
      require(nrm >= kDegenerateTol, ErrorCode::kDegenerateQuery,
              "query lies in the span of previous queries");
      q /= nrm;
      applied.col(j) = q;
      responses.col(j) =
          project_out(basis.leftCols(width), instance_->apply(q));
      basis.col(width++) = q;
    }
  } else {
    applied = block;
    responses = instance_->apply(block);
  }

  for (Index j = 0; j < batch_; ++j) {
    if (mode_ == OracleMode::kProjected) {
      append_frame(applied.col(j));
    } else {
      Vector res = project_out(frame(), applied.col(j));
      const double nrm = res.norm();
      if (nrm >= kDegenerateTol) append_frame(res / nrm);
    }
    width_hist_.push_back(frame_width_);
    transcript_.push_back(QueryRecord{queries_used(), rounds_used_,
                                      applied.col(j), responses.col(j)});
  }
  ++rounds_used_;
  return responses;
}

void OracleSession::dump_transcript(std::ostream& os) const {
  for (const auto& rec : transcript_) {
    nlohmann::json j = {{"index", rec.index},
                        {"round", rec.round},
                        {"query", to_std(rec.query)},
                        {"response", to_std(rec.response)}};
    os << j.dump() << '\n';
  }
}

void OracleSession::dump_transcript(const std::string& path) const {
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorCode::kIo, "cannot open " + path);
  dump_transcript(os);
}

RawReconstruction::RawReconstruction(QueryChannel& projected)
    : inner_(projected),
      q_(projected.dimension(), 0),
      mq_(projected.dimension(), 0) {}

Matrix RawReconstruction::query_round(const Matrix& block) {
  const Index d = dimension();
  require(block.rows() == d, ErrorCode::kInvalidDimension,
          "query: vector length differs from d");
  const Index prior = q_.cols();
  Matrix coeffs(prior + block.cols(), block.cols());
  coeffs.setZero();
  Matrix fresh(d, block.cols());
  std::vector<double> rho(block.cols(), 0.0);
  Index n_fresh = 0;
  Matrix basis = q_;
  for (Index j = 0; j < block.cols(); ++j) {
    Vector v = block.col(j);
    Vector c = basis.transpose() * v;
    Vector w = v - basis * c;
    Vector c2 = basis.transpose() * w;
    w -= basis * c2;
    c += c2;
    coeffs.col(j).head(c.size()) = c;
    const double nrm = w.norm();
    if (nrm >= kDegenerateTol) {
      fresh.col(n_fresh) = w / nrm;
      basis.conservativeResize(d, basis.cols() + 1);
      basis.col(basis.cols() - 1) = fresh.col(n_fresh);
      rho[j] = nrm;
      ++n_fresh;
    }
  }
  if (n_fresh > 0) {
    require(n_fresh == inner_.batch_size(), ErrorCode::kUnsupported,
            "reconstruction: round has dependent queries");
    Matrix proj = inner_.query_round(fresh.leftCols(n_fresh));
    for (Index j = 0; j < n_fresh; ++j) {
      // M q = P M q + Q (M Q)ᵀ q.
      Vector mq = proj.col(j) + q_ * (mq_.transpose() * fresh.col(j));
      q_.conservativeResize(d, q_.cols() + 1);
      mq_.conservativeResize(d, mq_.cols() + 1);
      q_.col(q_.cols() - 1) = fresh.col(j);
      mq_.col(mq_.cols() - 1) = mq;
    }
  }
  Matrix out(d, block.cols());
  for (Index j = 0, f = 0; j < block.cols(); ++j) {
    Vector c = coeffs.col(j).head(basis.cols());
    if (rho[j] > 0.0) c(prior + f++) = rho[j];
    out.col(j) = mq_ * c;
  }
  return out;
}

EvaluationReport evaluate_frame(const DeformedWignerInstance& inst,
                                const SpectralCache& cache, const Matrix& v_hat,
                                double epsilon) {
  require(v_hat.rows() == inst.d(), ErrorCode::kInvalidDimension,
          "finalize: V_hat has wrong dimension");
  require(v_hat.cols() == inst.r(), ErrorCode::kInvalidDimension,
          "finalize: V_hat width must equal r");
  require(epsilon > 0.0 && epsilon < 1.0, ErrorCode::kOutOfRange,
          "finalize: epsilon must lie in (0,1)");
  require(orthonormality_defect(v_hat) <= 1e-8, ErrorCode::kInvalidArgument,
          "finalize: V_hat is not orthonormal");
  const Index r = inst.r();
  EvaluationReport rep;
  rep.epsilon = epsilon;
  rep.quad_value = cache.abs_quadratic(v_hat);
  rep.top_sum = cache.top_sigma_sum(r);
  rep.gap_m = cache.gap(r);
  rep.target = (1.0 - epsilon * rep.gap_m) * rep.top_sum;
  rep.success = rep.quad_value >= rep.target;
  Matrix c = inst.spike().matrix().transpose() * v_hat;
  Eigen::SelfAdjointEigenSolver<Matrix> es(c.transpose() * c,
                                           Eigen::EigenvaluesOnly);
  rep.overlap_spectrum =
      es.eigenvalues().reverse().cwiseMax(0.0).cwiseMin(1.0);
  return rep;
}

EvaluationReport finalize(const OracleSession& session, const Matrix& v_hat,
                          const FinalizeOptions& options) {
  const DeformedWignerInstance& inst = session.instance_for_instrumentation();
  std::unique_ptr<SpectralCache> owned;
  const SpectralCache* cache = options.cache;
  if (cache == nullptr) {
    owned = std::make_unique<SpectralCache>(inst);
    cache = owned.get();
  }
  EvaluationReport rep = evaluate_frame(inst, *cache, v_hat, options.epsilon);
  rep.queries_used = session.queries_used();
  if (options.check_reduction) {
    const Index r = inst.r();
    const Vector eig_desc = cache->eigen().values.reverse();
    const EgoodReport eg = check_egood(
        inst, 0.5, eig_desc, spectral_norm_symmetric(inst.noise().dense()));
    rep.egood_checked = true;
    rep.egood = eg.holds;
    if (eg.holds) {
      const double g = inst.gap();
      for (Index rp = 1; rp <= r; ++rp) {
        const double thr =
            (1.0 - static_cast<double>(r + 1 - rp) * g / (6.0 * r)) * rep.top_sum;
        if (rep.quad_value >= thr) {
          ++rep.reduction_checks;
          if (rep.overlap_spectrum(rp - 1) < g / 4.0) ++rep.reduction_violations;
        }
      }
    }
  }
  return rep;
}

ConditionalMoments conditional_moments(const OracleSession& session,
                                       const Vector& u, const Vector& v) {
  require(session.mode() == OracleMode::kProjected, ErrorCode::kUnsupported,
          "conditional_moments: raw mode");
  const DeformedWignerInstance& inst = session.instance_for_instrumentation();
  const Index d = inst.d();
  require(u.size() == d && v.size() == d, ErrorCode::kInvalidDimension,
          "conditional_moments: dimension mismatch");
  require(std::abs(v.norm() - 1.0) <= kUnitTol && std::abs(u.norm() - 1.0) <= kUnitTol,
          ErrorCode::kPrecondition, "conditional_moments: u, v must be unit");
  const auto frame = session.frame();
  require((frame.transpose() * v).norm() <= 1e-8, ErrorCode::kPrecondition,
          "conditional_moments: v not orthogonal to previous queries");
  Matrix p = Matrix::Identity(d, d) - frame * frame.transpose();
  ConditionalMoments out;
  out.mean = inst.lambda() * u.dot(v) * (p * u);
  Matrix inner = Matrix::Identity(d, d) + v * v.transpose();
  out.covariance = (p * inner * p) / static_cast<double>(d);
  return out;
}

}  // namespace qlab
