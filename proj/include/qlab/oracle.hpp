// Matrix-vector query oracle over a hidden deformed Wigner instance.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qlab/rmt.hpp"

namespace qlab {

enum class OracleMode { kRaw, kProjected };

const char* oracle_mode_name(OracleMode mode);

struct QueryRecord {
  Index index = 0;  // 0-based query position
  Index round = 0;  // 0-based round
  Vector query;     // as applied (re-orthonormalized in projected mode)
  Vector response;
};

// Solver-facing capability. Exposes queries and nothing else.
class QueryChannel {
 public:
  virtual ~QueryChannel() = default;
  virtual Index dimension() const = 0;
  virtual Index batch_size() const = 0;
  virtual Index remaining() const = 0;  // queries left in the budget
  // Submits a full round (d x batch_size) and returns the responses.
  virtual Matrix query_round(const Matrix& block) = 0;

  Vector query(const Vector& v);
};

class OracleSession {
 public:
  // budget_rounds = T; at most T * batch queries are answered.
  OracleSession(InstancePtr instance, Index budget_rounds, OracleMode mode,
                Index batch = 1);
  OracleSession(const OracleSession&) = delete;
  OracleSession& operator=(const OracleSession&) = delete;

  QueryChannel& channel() { return channel_; }

  Vector query(const Vector& v);
  Matrix query_round(const Matrix& block);

  OracleMode mode() const { return mode_; }
  Index dimension() const { return instance_->d(); }
  Index batch_size() const { return batch_; }
  Index budget_rounds() const { return budget_rounds_; }
  Index rounds_used() const { return rounds_used_; }
  Index queries_used() const { return static_cast<Index>(transcript_.size()); }
  Index remaining() const { return (budget_rounds_ - rounds_used_) * batch_; }

  const std::vector<QueryRecord>& transcript() const { return transcript_; }

  // Orthonormal basis of the span of all queries so far, in query order.
  // Dependent raw-mode queries do not add a column.
  Eigen::Block<const Matrix, Eigen::Dynamic, Eigen::Dynamic, true> frame() const {
    return frame_.leftCols(frame_width_);
  }
  // frame width after each query (entry i is after query i+1).
  const std::vector<Index>& frame_width_history() const { return width_hist_; }

  void dump_transcript(std::ostream& os) const;
  void dump_transcript(const std::string& path) const;

  // Instrumentation only; never handed to solvers.
  const DeformedWignerInstance& instance_for_instrumentation() const {
    return *instance_;
  }

 private:
  class SessionChannel : public QueryChannel {
   public:
    explicit SessionChannel(OracleSession* s) : s_(s) {}
    Index dimension() const override { return s_->dimension(); }
    Index batch_size() const override { return s_->batch_size(); }
    Index remaining() const override { return s_->remaining(); }
    Matrix query_round(const Matrix& block) override {
      return s_->query_round(block);
    }

   private:
    OracleSession* s_;
  };

  void append_frame(const Vector& q);

  InstancePtr instance_;
  Index budget_rounds_;
  OracleMode mode_;
  Index batch_;
  Index rounds_used_ = 0;
  std::vector<QueryRecord> transcript_;
  Matrix frame_;
  Index frame_width_ = 0;
  std::vector<Index> width_hist_;
  SessionChannel channel_{this};
};

// Presents raw responses Mv over a projected-mode channel by reconstructing
// them from the projected responses and the already-known products M q_j.
// Queries inside the known span are answered without touching the oracle.
class RawReconstruction : public QueryChannel {
 public:
  explicit RawReconstruction(QueryChannel& projected);

  Index dimension() const override { return inner_.dimension(); }
  Index batch_size() const override { return inner_.batch_size(); }
  Index remaining() const override { return inner_.remaining(); }
  Matrix query_round(const Matrix& block) override;

 private:
  QueryChannel& inner_;
  Matrix q_;   // orthonormal queries sent so far
  Matrix mq_;  // M q_j reconstructed
};

struct EvaluationReport {
  double epsilon = 1.0 / 12.0;
  double quad_value = 0.0;
  double top_sum = 0.0;  // Σ_{ℓ≤r} σ_ℓ(M)
  double gap_m = 0.0;    // gap_r(M)
  double target = 0.0;   // (1 - ε gap_r(M)) top_sum
  bool success = false;
  Vector overlap_spectrum;  // eigenvalues of V̂ᵀUUᵀV̂, descending
  Index queries_used = 0;
  bool egood_checked = false;
  bool egood = false;
  int reduction_checks = 0;
  int reduction_violations = 0;
};

struct FinalizeOptions {
  double epsilon = 1.0 / 12.0;
  // Evaluates E_good(1/2) and, on it, the reduction implication for every r'.
  bool check_reduction = false;
  const SpectralCache* cache = nullptr;  // reuse an eigendecomposition of M
};

EvaluationReport finalize(const OracleSession& session, const Matrix& v_hat,
                          const FinalizeOptions& options = {});

// Success/overlap evaluation for a frame against an instance (no session).
EvaluationReport evaluate_frame(const DeformedWignerInstance& inst,
                                const SpectralCache& cache, const Matrix& v_hat,
                                double epsilon);

struct ConditionalMoments {
  Vector mean;
  Matrix covariance;
};

// Law of the next projected response for a hypothetical spike u and query v.
ConditionalMoments conditional_moments(const OracleSession& session,
                                       const Vector& u, const Vector& v);

}  // namespace qlab
