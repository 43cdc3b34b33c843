/* C interface of the electromigration stress library.
 *
 * All entry points return an ems_status; EMS_OK means success. On failure,
 * ems_last_error() holds a thread-local message describing what went wrong.
 * Objects returned through out-parameters are owned by the caller and must
 * be released with the matching *_free function.
 */
#ifndef EMSTRESS_H
#define EMSTRESS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define EMS_API __declspec(dllexport)
#else
#define EMS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ems_status {
  EMS_OK = 0,
  EMS_ERR_PARSE = 1,
  EMS_ERR_VALIDATION = 2,
  EMS_ERR_NUMERIC = 3,
  EMS_ERR_IO = 4,
  EMS_ERR_ARCH_MISMATCH = 5,
  EMS_ERR_INVALID_ARGUMENT = 6
} ems_status;

typedef struct ems_problem ems_problem;  /* parsed config + derived data */
typedef struct ems_model ems_model;      /* network parameters + metadata */
typedef struct ems_field ems_field;      /* sampled stress values */
typedef struct ems_report ems_report;    /* training outcome */

typedef struct ems_sample {
  int32_t segment_id;
  double x_m;
  double t_s;
  double sigma_pa;
} ems_sample;

EMS_API const char* ems_version(void);
EMS_API const char* ems_status_name(ems_status status);
EMS_API const char* ems_last_error(void);

/* ---- problem ----------------------------------------------------------- */

EMS_API ems_status ems_problem_from_json(const char* json_text, ems_problem** out);
EMS_API ems_status ems_problem_from_file(const char* path, ems_problem** out);
EMS_API void ems_problem_free(ems_problem* p);

/* Writes a short structural summary ("4 segments, 1 junction, ..."). */
EMS_API ems_status ems_problem_summary(const ems_problem* p, char* buf, size_t buflen);
EMS_API uint64_t ems_problem_config_hash(const ems_problem* p);
EMS_API int32_t ems_problem_n_segments(const ems_problem* p);
/* Overrides the training and tree-generation seeds from the config. */
EMS_API ems_status ems_problem_override_seed(ems_problem* p, uint64_t seed);
EMS_API uint64_t ems_problem_seed(const ems_problem* p);
EMS_API double ems_problem_sigma_crit(const ems_problem* p);

/* ---- model ------------------------------------------------------------- */

EMS_API ems_status ems_model_init(const ems_problem* p, uint64_t seed, ems_model** out);
/* Fails with EMS_ERR_ARCH_MISMATCH when the checkpoint does not match the
 * architecture implied by the problem config. */
EMS_API ems_status ems_model_load(const ems_problem* p, const char* path, ems_model** out);
EMS_API ems_status ems_model_save(const ems_model* m, const char* path);
EMS_API void ems_model_free(ems_model* m);
EMS_API int64_t ems_model_parameter_count(const ems_model* m);

/* ---- training ---------------------------------------------------------- */

EMS_API ems_status ems_train(const ems_problem* p, ems_model* m, ems_report** out_report);

EMS_API int32_t ems_report_iterations(const ems_report* r);
EMS_API double ems_report_initial_loss(const ems_report* r);
EMS_API double ems_report_final_loss(const ems_report* r);
/* 0 converged, 1 max_iters, 2 line_search_failed */
EMS_API int32_t ems_report_stop_reason(const ems_report* r);
EMS_API double ems_report_wall_seconds(const ems_report* r);
EMS_API size_t ems_report_history_len(const ems_report* r);
EMS_API ems_status ems_report_history_row(const ems_report* r, size_t i, int32_t* iter,
                                          double* loss, double* grad_norm, double* wall_s);
EMS_API void ems_report_free(ems_report* r);

/* ---- evaluation -------------------------------------------------------- */

/* Samples the trial function at the configured probes (SI units). */
EMS_API ems_status ems_infer(const ems_problem* p, const ems_model* m, ems_field** out);
EMS_API ems_status ems_infer_at(const ems_problem* p, const ems_model* m, int32_t segment_id,
                                double fraction, double t_s, double* sigma_pa);
/* Reference finite-difference solve at the configured probes. */
EMS_API ems_status ems_oracle_solve(const ems_problem* p, ems_field** out);

EMS_API size_t ems_field_len(const ems_field* f);
EMS_API ems_status ems_field_get(const ems_field* f, size_t i, ems_sample* out);
/* 0 oracle, 1 trial */
EMS_API int32_t ems_field_source(const ems_field* f);
EMS_API void ems_field_free(ems_field* f);

/* ||pred - ref||_2 / ||ref||_2 over matched samples. zero_reference is set
 * (and the absolute norm returned) when the reference is identically zero. */
EMS_API ems_status ems_relative_error(const ems_field* pred, const ems_field* ref, double* global,
                                      int32_t* zero_reference);
/* Per-time breakdown; n_out receives the number of distinct times. */
EMS_API ems_status ems_relative_error_per_time(const ems_field* pred, const ems_field* ref,
                                               double* times, double* errors, size_t cap,
                                               size_t* n_out);

/* Earliest time at which the trial-function max stress reaches sigma_crit,
 * searched across the configured probe window. found = 0 when never. */
EMS_API ems_status ems_nucleation_time(const ems_problem* p, const ems_model* m, int32_t* found,
                                       double* t_s);
EMS_API ems_status ems_field_nucleation_time(const ems_field* f, double sigma_crit_pa,
                                             int32_t* found, double* t_s);

#ifdef __cplusplus
}
#endif

#endif /* EMSTRESS_H */
