#include "qlab/qlab.h"

#include <cstring>
#include <memory>
#include <string>

#include "qlab/config.hpp"
#include "qlab/divergences.hpp"
#include "qlab/error.hpp"
#include "qlab/experiments.hpp"
#include "qlab/instance_io.hpp"
#include "qlab/oracle.hpp"
#include "qlab/random.hpp"
#include "qlab/rmt.hpp"
#include "qlab/solvers.hpp"

struct qlab_instance {
  qlab::InstancePtr ptr;
};

struct qlab_session {
  qlab::InstancePtr inst;
  std::unique_ptr<qlab::OracleSession> session;
};

struct qlab_config {
  qlab::ExperimentConfig cfg;
};

namespace {

thread_local std::string g_last_error;

qlab_status set_error(qlab_status s, const char* what) {
  g_last_error = what;
  return s;
}

template <typename F>
qlab_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return QLAB_OK;
  } catch (const qlab::Error& e) {
    return set_error(static_cast<qlab_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(QLAB_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(QLAB_INTERNAL, e.what());
  } catch (...) {
    return set_error(QLAB_INTERNAL, "unknown exception");
  }
}

#define QLAB_REQUIRE_HANDLE(p)                                   \
  do {                                                           \
    if ((p) == nullptr) return set_error(QLAB_NULL_HANDLE, #p " is null"); \
  } while (0)

}  // namespace

extern "C" {

const char* qlab_version(void) { return "0.1.0"; }

const char* qlab_status_string(qlab_status s) {
  switch (s) {
    case QLAB_OK: return "ok";
    case QLAB_NULL_HANDLE: return "null_handle";
    case QLAB_INTERNAL: return "internal";
    default:
      if (s >= QLAB_INVALID_ARGUMENT && s <= QLAB_PARSE)
        return qlab::error_code_name(static_cast<qlab::ErrorCode>(s));
      return "unknown";
  }
}

const char* qlab_last_error(void) { return g_last_error.c_str(); }

qlab_status qlab_lambda_from_gap(double gap, double* lambda) {
  QLAB_REQUIRE_HANDLE(lambda);
  return guarded([&] { *lambda = qlab::lambda_from_gap(gap); });
}

qlab_status qlab_gap_from_lambda(double lambda, double* gap) {
  QLAB_REQUIRE_HANDLE(gap);
  return guarded([&] { *gap = qlab::gap_from_lambda(lambda); });
}

qlab_status qlab_semicircle_stieltjes(double a, double* value) {
  QLAB_REQUIRE_HANDLE(value);
  return guarded([&] { *value = qlab::semicircle_stieltjes(a); });
}

qlab_status qlab_instance_create(int64_t d, int64_t r, double gap, uint64_t seed,
                                 qlab_instance** out) {
  QLAB_REQUIRE_HANDLE(out);
  *out = nullptr;
  return guarded([&] {
    auto h = std::make_unique<qlab_instance>();
    h->ptr = qlab::make_instance(d, r, gap, seed);
    *out = h.release();
  });
}

qlab_status qlab_instance_load(const char* path, qlab_instance** out) {
  QLAB_REQUIRE_HANDLE(path);
  QLAB_REQUIRE_HANDLE(out);
  *out = nullptr;
  return guarded([&] {
    auto h = std::make_unique<qlab_instance>();
    h->ptr = qlab::load_instance(path);
    *out = h.release();
  });
}

qlab_status qlab_instance_save(const qlab_instance* inst, const char* path) {
  QLAB_REQUIRE_HANDLE(inst);
  QLAB_REQUIRE_HANDLE(path);
  return guarded([&] { qlab::save_instance(*inst->ptr, path); });
}

qlab_status qlab_instance_info_get(const qlab_instance* inst, qlab_instance_info* info) {
  QLAB_REQUIRE_HANDLE(inst);
  QLAB_REQUIRE_HANDLE(info);
  info->d = inst->ptr->d();
  info->r = inst->ptr->r();
  info->lambda = inst->ptr->lambda();
  info->gap = inst->ptr->gap();
  info->seed = inst->ptr->seed();
  return QLAB_OK;
}

void qlab_instance_destroy(qlab_instance* inst) { delete inst; }

qlab_status qlab_session_open(const qlab_instance* inst, int64_t budget_rounds,
                              qlab_oracle_mode mode, int64_t batch, qlab_session** out) {
  QLAB_REQUIRE_HANDLE(inst);
  QLAB_REQUIRE_HANDLE(out);
  *out = nullptr;
  return guarded([&] {
    qlab::require(mode == QLAB_MODE_RAW || mode == QLAB_MODE_PROJECTED,
                  qlab::ErrorCode::kInvalidArgument, "unknown oracle mode");
    auto h = std::make_unique<qlab_session>();
    h->inst = inst->ptr;
    h->session = std::make_unique<qlab::OracleSession>(
        inst->ptr, budget_rounds,
        mode == QLAB_MODE_RAW ? qlab::OracleMode::kRaw : qlab::OracleMode::kProjected,
        batch);
    *out = h.release();
  });
}

qlab_status qlab_session_query(qlab_session* s, const double* v, double* w) {
  QLAB_REQUIRE_HANDLE(s);
  QLAB_REQUIRE_HANDLE(v);
  QLAB_REQUIRE_HANDLE(w);
  return guarded([&] {
    const qlab::Index d = s->session->dimension();
    const qlab::Vector resp = s->session->query(Eigen::Map<const qlab::Vector>(v, d));
    Eigen::Map<qlab::Vector>(w, d) = resp;
  });
}

qlab_status qlab_session_query_round(qlab_session* s, const double* block, double* out) {
  QLAB_REQUIRE_HANDLE(s);
  QLAB_REQUIRE_HANDLE(block);
  QLAB_REQUIRE_HANDLE(out);
  return guarded([&] {
    const qlab::Index d = s->session->dimension();
    const qlab::Index b = s->session->batch_size();
    const qlab::Matrix resp =
        s->session->query_round(Eigen::Map<const qlab::Matrix>(block, d, b));
    Eigen::Map<qlab::Matrix>(out, d, b) = resp;
  });
}

qlab_status qlab_session_queries_used(const qlab_session* s, int64_t* used) {
  QLAB_REQUIRE_HANDLE(s);
  QLAB_REQUIRE_HANDLE(used);
  *used = s->session->queries_used();
  return QLAB_OK;
}

qlab_status qlab_session_dump_transcript(const qlab_session* s, const char* path) {
  QLAB_REQUIRE_HANDLE(s);
  QLAB_REQUIRE_HANDLE(path);
  return guarded([&] { s->session->dump_transcript(std::string(path)); });
}

qlab_status qlab_session_finalize(const qlab_session* s, const double* v_hat, int64_t r,
                                  double epsilon, qlab_evaluation* out) {
  QLAB_REQUIRE_HANDLE(s);
  QLAB_REQUIRE_HANDLE(v_hat);
  QLAB_REQUIRE_HANDLE(out);
  return guarded([&] {
    qlab::FinalizeOptions opt;
    opt.epsilon = epsilon;
    const qlab::Matrix v = Eigen::Map<const qlab::Matrix>(v_hat, s->session->dimension(), r);
    const qlab::EvaluationReport rep = qlab::finalize(*s->session, v, opt);
    out->quad_value = rep.quad_value;
    out->top_sum = rep.top_sum;
    out->gap_m = rep.gap_m;
    out->target = rep.target;
    out->success = rep.success ? 1 : 0;
    out->queries_used = rep.queries_used;
  });
}

void qlab_session_destroy(qlab_session* s) { delete s; }

qlab_status qlab_solver_run(qlab_session* s, const char* solver, int64_t r, int64_t budget,
                            uint64_t seed, double* v_hat) {
  QLAB_REQUIRE_HANDLE(s);
  QLAB_REQUIRE_HANDLE(solver);
  return guarded([&] {
    qlab::Rng rng = qlab::derive_rng(seed, 0);
    const qlab::SolverResult res = qlab::run_solver(qlab::parse_solver_kind(solver),
                                                    s->session->channel(), r, budget, rng);
    if (v_hat != nullptr) {
      Eigen::Map<qlab::Matrix>(v_hat, res.v_hat.rows(), res.v_hat.cols()) = res.v_hat;
    }
  });
}

qlab_status qlab_f_divergence(const double* mu, const double* nu, size_t n, const char* f,
                              double eta, double* out) {
  QLAB_REQUIRE_HANDLE(mu);
  QLAB_REQUIRE_HANDLE(nu);
  QLAB_REQUIRE_HANDLE(f);
  QLAB_REQUIRE_HANDLE(out);
  return guarded([&] {
    const std::string name(f);
    qlab::DivergenceFunction fn = qlab::DivergenceFunction::kl();
    if (name == "chi2") fn = qlab::DivergenceFunction::chi2();
    else if (name == "power") fn = qlab::DivergenceFunction::power(eta);
    else qlab::require(name == "kl", qlab::ErrorCode::kInvalidArgument,
                       "unknown divergence " + name);
    *out = qlab::f_divergence(qlab::FiniteMeasure(std::vector<double>(mu, mu + n)),
                              qlab::FiniteMeasure(std::vector<double>(nu, nu + n)), fn);
  });
}

qlab_status qlab_config_default(qlab_config** out) {
  QLAB_REQUIRE_HANDLE(out);
  return guarded([&] { *out = new qlab_config{}; });
}

qlab_status qlab_config_parse(const char* text, qlab_config** out) {
  QLAB_REQUIRE_HANDLE(text);
  QLAB_REQUIRE_HANDLE(out);
  *out = nullptr;
  return guarded([&] { *out = new qlab_config{qlab::parse_config(text)}; });
}

qlab_status qlab_config_load(const char* path, qlab_config** out) {
  QLAB_REQUIRE_HANDLE(path);
  QLAB_REQUIRE_HANDLE(out);
  *out = nullptr;
  return guarded([&] { *out = new qlab_config{qlab::load_config(path)}; });
}

qlab_status qlab_config_set(qlab_config* cfg, const char* section, const char* key,
                            const char* value) {
  QLAB_REQUIRE_HANDLE(cfg);
  QLAB_REQUIRE_HANDLE(section);
  QLAB_REQUIRE_HANDLE(key);
  QLAB_REQUIRE_HANDLE(value);
  return guarded([&] {
    qlab::ExperimentConfig next = cfg->cfg;
    qlab::set_config_value(next, section, key, value);
    qlab::validate_config(next);
    cfg->cfg = std::move(next);
  });
}

qlab_status qlab_config_serialize(const qlab_config* cfg, char* buf, size_t cap,
                                  size_t* needed) {
  QLAB_REQUIRE_HANDLE(cfg);
  return guarded([&] {
    const std::string text = qlab::serialize_config(cfg->cfg);
    if (needed != nullptr) *needed = text.size() + 1;
    if (buf != nullptr && cap > 0) {
      const size_t n = std::min(cap - 1, text.size());
      std::memcpy(buf, text.data(), n);
      buf[n] = '\0';
    }
  });
}

qlab_status qlab_config_hash(const qlab_config* cfg, char out[17]) {
  QLAB_REQUIRE_HANDLE(cfg);
  QLAB_REQUIRE_HANDLE(out);
  return guarded([&] {
    const std::string h = qlab::config_hash(cfg->cfg);
    std::memcpy(out, h.c_str(), 17);
  });
}

void qlab_config_destroy(qlab_config* cfg) { delete cfg; }

qlab_status qlab_run_gen(const qlab_config* cfg, const char* out_dir) {
  QLAB_REQUIRE_HANDLE(cfg);
  QLAB_REQUIRE_HANDLE(out_dir);
  return guarded([&] { qlab::run_gen(cfg->cfg, out_dir); });
}

qlab_status qlab_run_sweep(const qlab_config* cfg, const char* out_dir) {
  QLAB_REQUIRE_HANDLE(cfg);
  QLAB_REQUIRE_HANDLE(out_dir);
  return guarded([&] {
    qlab::ExperimentConfig c = cfg->cfg;
    c.out = out_dir;
    const qlab::SweepResult res = qlab::run_sweep(c);
    qlab::write_sweep_outputs(cfg->cfg, res, out_dir);
  });
}

qlab_status qlab_run_verify(const qlab_config* cfg, const char* claim, const char* out_dir,
                            int* n_failed) {
  QLAB_REQUIRE_HANDLE(cfg);
  QLAB_REQUIRE_HANDLE(out_dir);
  return guarded([&] {
    const qlab::VerifySummary res =
        qlab::run_verify(cfg->cfg, claim == nullptr ? "" : claim);
    qlab::write_verify_outputs(cfg->cfg, res, out_dir);
    if (n_failed != nullptr) *n_failed = res.hard_failures;
  });
}

qlab_status qlab_run_report(const qlab_config* cfg, const char* dir) {
  QLAB_REQUIRE_HANDLE(cfg);
  QLAB_REQUIRE_HANDLE(dir);
  return guarded([&] { qlab::run_report(cfg->cfg, dir); });
}

}  // extern "C"
