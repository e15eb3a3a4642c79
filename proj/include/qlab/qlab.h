/* qlab C API: opaque handles, status codes, thread-local error messages. */
#ifndef QLAB_QLAB_H
#define QLAB_QLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define QLAB_API __declspec(dllexport)
#else
#define QLAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qlab_status {
  QLAB_OK = 0,
  QLAB_INVALID_ARGUMENT = 1,
  QLAB_INVALID_DIMENSION,
  QLAB_INVALID_RANK,
  QLAB_OUT_OF_RANGE,
  QLAB_BUDGET_EXHAUSTED,
  QLAB_DEGENERATE_QUERY,
  QLAB_POLE_DOMAIN,
  QLAB_OUT_OF_DOMAIN,
  QLAB_UNSUPPORTED,
  QLAB_REGIME_VIOLATION,
  QLAB_NUMERICAL_FAILURE,
  QLAB_PRECONDITION,
  QLAB_COMBINATORIAL_GUARD,
  QLAB_IO,
  QLAB_PARSE,
  QLAB_NULL_HANDLE = 100,
  QLAB_INTERNAL = 101
} qlab_status;

typedef enum qlab_oracle_mode { QLAB_MODE_RAW = 0, QLAB_MODE_PROJECTED = 1 } qlab_oracle_mode;

typedef struct qlab_instance qlab_instance;
typedef struct qlab_session qlab_session;
typedef struct qlab_config qlab_config;

typedef struct qlab_instance_info {
  int64_t d;
  int64_t r;
  double lambda;
  double gap;
  uint64_t seed;
} qlab_instance_info;

typedef struct qlab_evaluation {
  double quad_value;
  double top_sum;
  double gap_m;
  double target;
  int success;
  int64_t queries_used;
} qlab_evaluation;

QLAB_API const char* qlab_version(void);
QLAB_API const char* qlab_status_string(qlab_status s);
/* Message of the last failing call on this thread; "" if none. */
QLAB_API const char* qlab_last_error(void);

QLAB_API qlab_status qlab_lambda_from_gap(double gap, double* lambda);
QLAB_API qlab_status qlab_gap_from_lambda(double lambda, double* gap);
QLAB_API qlab_status qlab_semicircle_stieltjes(double a, double* value);

QLAB_API qlab_status qlab_instance_create(int64_t d, int64_t r, double gap, uint64_t seed,
                                          qlab_instance** out);
QLAB_API qlab_status qlab_instance_load(const char* path, qlab_instance** out);
QLAB_API qlab_status qlab_instance_save(const qlab_instance* inst, const char* path);
QLAB_API qlab_status qlab_instance_info_get(const qlab_instance* inst,
                                            qlab_instance_info* info);
QLAB_API void qlab_instance_destroy(qlab_instance* inst);

/* Budget is counted in rounds of `batch` queries. */
QLAB_API qlab_status qlab_session_open(const qlab_instance* inst, int64_t budget_rounds,
                                       qlab_oracle_mode mode, int64_t batch,
                                       qlab_session** out);
/* v and w hold d doubles. */
QLAB_API qlab_status qlab_session_query(qlab_session* s, const double* v, double* w);
/* block and out are d x batch, column-major. */
QLAB_API qlab_status qlab_session_query_round(qlab_session* s, const double* block,
                                              double* out);
QLAB_API qlab_status qlab_session_queries_used(const qlab_session* s, int64_t* used);
QLAB_API qlab_status qlab_session_dump_transcript(const qlab_session* s, const char* path);
/* v_hat is d x r, column-major. */
QLAB_API qlab_status qlab_session_finalize(const qlab_session* s, const double* v_hat,
                                           int64_t r, double epsilon, qlab_evaluation* out);
QLAB_API void qlab_session_destroy(qlab_session* s);

/* Runs a named solver against the session; v_hat (d x r, column-major) may be NULL. */
QLAB_API qlab_status qlab_solver_run(qlab_session* s, const char* solver, int64_t r,
                                     int64_t budget, uint64_t seed, double* v_hat);

/* f in {"kl", "chi2", "power"}; eta is used by "power". */
QLAB_API qlab_status qlab_f_divergence(const double* mu, const double* nu, size_t n,
                                       const char* f, double eta, double* out);

QLAB_API qlab_status qlab_config_default(qlab_config** out);
QLAB_API qlab_status qlab_config_parse(const char* text, qlab_config** out);
QLAB_API qlab_status qlab_config_load(const char* path, qlab_config** out);
QLAB_API qlab_status qlab_config_set(qlab_config* cfg, const char* section, const char* key,
                                     const char* value);
/* Writes at most cap bytes including the terminator; *needed gets the full size. */
QLAB_API qlab_status qlab_config_serialize(const qlab_config* cfg, char* buf, size_t cap,
                                           size_t* needed);
QLAB_API qlab_status qlab_config_hash(const qlab_config* cfg, char out[17]);
QLAB_API void qlab_config_destroy(qlab_config* cfg);

QLAB_API qlab_status qlab_run_gen(const qlab_config* cfg, const char* out_dir);
QLAB_API qlab_status qlab_run_sweep(const qlab_config* cfg, const char* out_dir);
/* claim may be NULL or "" for the configured set. */
QLAB_API qlab_status qlab_run_verify(const qlab_config* cfg, const char* claim,
                                     const char* out_dir, int* n_failed);
QLAB_API qlab_status qlab_run_report(const qlab_config* cfg, const char* dir);

#ifdef __cplusplus
}
#endif

#endif /* QLAB_QLAB_H */
