#include "qlab/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "qlab/error.hpp"
#include "qlab/rmt.hpp"

namespace qlab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Sends the columns of `block` through the channel, one per round when B = 1,
// or as a single round when the block width equals B.
Matrix submit(QueryChannel& ch, const Matrix& block) {
  if (ch.batch_size() == 1) {
    Matrix out(block.rows(), block.cols());
    for (Index j = 0; j < block.cols(); ++j) out.col(j) = ch.query(block.col(j));
    return out;
  }
  require(block.cols() == ch.batch_size(), ErrorCode::kUnsupported,
          "solver block width must equal the batch size");
  return ch.query_round(block);
}

// Indices of the r Ritz values of largest magnitude, largest first.
std::vector<Index> top_by_magnitude(const Vector& theta, Index r) {
  std::vector<Index> idx(theta.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) {
    return std::abs(theta(a)) > std::abs(theta(b));
  });
  idx.resize(std::min<Index>(r, theta.size()));
  return idx;
}

// Pads an orthonormal d x k frame with random orthonormal columns up to width r.
Matrix pad_frame(const Matrix& v, Index r, Rng& rng) {
  if (v.cols() >= r) return v;
  Matrix out(v.rows(), r);
  out.leftCols(v.cols()) = v;
  Index filled = v.cols();
  while (filled < r) {
    Matrix add = orthonormalize_against(out.leftCols(filled),
                                        gaussian_matrix(v.rows(), 1, rng));
    if (add.cols() == 1) out.col(filled++) = add.col(0);
  }
  return out;
}

struct RitzPick {
  Matrix v;
  double sum = 0.0;
  Vector values;
};

RitzPick rayleigh_ritz(const Matrix& basis, const Matrix& h, Index r) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.transpose()));
  RitzPick pick;
  pick.values = es.eigenvalues();
  const auto idx = top_by_magnitude(pick.values, r);
  Matrix y(h.rows(), static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    y.col(static_cast<Index>(i)) = es.eigenvectors().col(idx[i]);
    pick.sum += pick.values(idx[i]);
  }
  pick.v = basis * y;
  return pick;
}

void check_rank(QueryChannel& ch, Index r) {
  require(r >= 1 && r <= ch.dimension(), ErrorCode::kInvalidRank,
          "solver: need 1 <= r <= d");
}

}  // namespace

SolverResult power_method(QueryChannel& ch, Index r, Index iters, Rng& rng,
                          const IterateObserver& observe) {
  check_rank(ch, r);
  const auto t0 = Clock::now();
  SolverResult res;
  Matrix x = thin_q(gaussian_matrix(ch.dimension(), r, rng));
  for (Index t = 0; t < iters; ++t) {
    if (ch.remaining() < r) {
      res.partial = true;
      res.note = "budget exhausted";
      break;
    }
    Matrix y = submit(ch, x);
    res.queries_used += r;
    res.rayleigh.push_back((x.transpose() * y).trace());
    x = thin_q(y);
    if (observe && !observe(x, res.queries_used)) {
      res.stopped = true;
      break;
    }
  }
  res.v_hat = x;
  res.wall_seconds = seconds_since(t0);
  return res;
}

SolverResult block_krylov(QueryChannel& ch, Index r, Index q, Rng& rng,
                          const IterateObserver& observe) {
  check_rank(ch, r);
  const auto t0 = Clock::now();
  const Index d = ch.dimension();
  SolverResult res;
  Matrix block = thin_q(gaussian_matrix(d, r, rng));
  res.v_hat = block;
  Matrix basis(d, 0);
  Matrix mbasis(d, 0);
  Matrix h(0, 0);
  for (Index j = 0; j <= q; ++j) {
    if (block.cols() == 0) break;
    if (ch.remaining() < block.cols()) {
      res.partial = true;
      res.note = "budget exhausted";
      break;
    }
    Matrix y = submit(ch, block);
    res.queries_used += block.cols();

    const Index k = basis.cols();
    const Index b = block.cols();
    basis.conservativeResize(d, k + b);
    mbasis.conservativeResize(d, k + b);
    basis.rightCols(b) = block;
    mbasis.rightCols(b) = y;
    Matrix cross = basis.transpose() * y;  // (k+b) x b
    h.conservativeResize(k + b, k + b);
    h.rightCols(b) = cross;
    h.bottomRows(b) = cross.transpose();

    RitzPick pick = rayleigh_ritz(basis, h, r);
    res.v_hat = pick.v;
    res.ritz_values = pick.values;
    res.rayleigh.push_back(pick.sum);
    if (observe && !observe(pad_frame(res.v_hat, r, rng), res.queries_used)) {
      res.stopped = true;
      break;
    }
    if (j == q) break;
    block = orthonormalize_against(basis, y, 1e-10);
    if (block.cols() < r) {
      res.rank_reduced = true;
      res.note = "Krylov block lost rank; width reduced to " +
                 std::to_string(block.cols());
    }
  }
  res.v_hat = pad_frame(res.v_hat, r, rng);
  res.wall_seconds = seconds_since(t0);
  return res;
}

SolverResult lanczos(QueryChannel& ch, Index q, Rng& rng,
                     const IterateObserver& observe) {
  const auto t0 = Clock::now();
  const Index d = ch.dimension();
  SolverResult res;
  Matrix v(d, 1);
  v.col(0) = thin_q(gaussian_matrix(d, 1, rng)).col(0);
  res.v_hat = v;
  std::vector<double> alpha;
  std::vector<double> beta;
  for (Index j = 0; j <= q; ++j) {
    if (ch.remaining() < 1) {
      res.partial = true;
      res.note = "budget exhausted";
      break;
    }
    Vector w = ch.query(v.col(j));
    ++res.queries_used;
    alpha.push_back(v.col(j).dot(w));
    w -= alpha.back() * v.col(j);
    if (j > 0) w -= beta.back() * v.col(j - 1);
    w = project_out(v, w);
    const double b = w.norm();

    const Index m = j + 1;
    Matrix t = Matrix::Zero(m, m);
    for (Index i = 0; i < m; ++i) t(i, i) = alpha[i];
    for (Index i = 0; i + 1 < m; ++i) t(i, i + 1) = t(i + 1, i) = beta[i];
    RitzPick pick = rayleigh_ritz(v, t, 1);
    res.v_hat = pick.v;
    res.ritz_values = pick.values;
    res.rayleigh.push_back(pick.sum);
    if (observe && !observe(res.v_hat, res.queries_used)) {
      res.stopped = true;
      break;
    }
    if (b < 1e-12) {
      res.breakdown = true;
      res.note = "Lanczos breakdown at step " + std::to_string(j + 1);
      break;
    }
    if (j == q) break;
    beta.push_back(b);
    v.conservativeResize(d, m + 1);
    v.col(m) = w / b;
  }
  res.wall_seconds = seconds_since(t0);
  return res;
}

SolverResult random_baseline(QueryChannel& ch, Index r, Rng& rng) {
  check_rank(ch, r);
  SolverResult res;
  res.v_hat = sample_stiefel(ch.dimension(), r, rng).matrix();
  return res;
}

SolverKind parse_solver_kind(const std::string& name) {
  if (name == "power_method" || name == "power") return SolverKind::kPowerMethod;
  if (name == "block_krylov") return SolverKind::kBlockKrylov;
  if (name == "lanczos") return SolverKind::kLanczos;
  if (name == "random" || name == "random_baseline") return SolverKind::kRandom;
  fail(ErrorCode::kInvalidArgument, "unknown solver: " + name);
}

const char* solver_kind_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::kPowerMethod: return "power_method";
    case SolverKind::kBlockKrylov: return "block_krylov";
    case SolverKind::kLanczos: return "lanczos";
    case SolverKind::kRandom: return "random_baseline";
  }
  return "unknown";
}

SolverResult run_solver(SolverKind kind, QueryChannel& ch, Index r, Index budget,
                        Rng& rng, const IterateObserver& observe) {
  switch (kind) {
    case SolverKind::kPowerMethod:
      return power_method(ch, r, budget / r, rng, observe);
    case SolverKind::kBlockKrylov:
      require(budget >= r, ErrorCode::kInvalidArgument,
              "block_krylov: budget below one block");
      return block_krylov(ch, r, budget / r - 1, rng, observe);
    case SolverKind::kLanczos:
      require(r == 1, ErrorCode::kUnsupported, "lanczos: r must be 1");
      require(budget >= 1, ErrorCode::kInvalidArgument, "lanczos: empty budget");
      return lanczos(ch, budget - 1, rng, observe);
    case SolverKind::kRandom:
      return random_baseline(ch, r, rng);
  }
  fail(ErrorCode::kInvalidArgument, "unknown solver kind");
}

std::string solver_result_json(const SolverResult& res) {
  nlohmann::json j;
  j["d"] = res.v_hat.rows();
  j["r"] = res.v_hat.cols();
  j["queries_used"] = res.queries_used;
  j["rayleigh"] = res.rayleigh;
  j["wall_seconds"] = res.wall_seconds;
  j["partial"] = res.partial;
  j["rank_reduced"] = res.rank_reduced;
  j["breakdown"] = res.breakdown;
  j["note"] = res.note;
  std::vector<std::vector<double>> cols;
  for (Index c = 0; c < res.v_hat.cols(); ++c) {
    cols.emplace_back(res.v_hat.col(c).data(),
                      res.v_hat.col(c).data() + res.v_hat.rows());
  }
  j["v_hat"] = cols;
  return j.dump();
}

}  // namespace qlab
