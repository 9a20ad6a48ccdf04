#ifndef RELCLASS_RELCLASS_H
#define RELCLASS_RELCLASS_H

/* C interface to the relation classification toolkit.
 *
 * Every function returns an rc_status. On failure, rc_last_error() describes
 * the problem for the calling thread. Handles are opaque and owned by the
 * caller, who releases them with the matching *_free function. */

#include <stddef.h>

#if defined(_WIN32)
#  define RC_API __declspec(dllexport)
#elif defined(RELCLASS_BUILDING_LIBRARY)
#  define RC_API __attribute__((visibility("default")))
#else
#  define RC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rc_status {
  RC_OK = 0,
  RC_ERROR_ARGUMENT = 1, /* null pointer, unknown name, bad value */
  RC_ERROR_PARSE = 2,    /* malformed input file */
  RC_ERROR_RUN = 3,      /* command finished with errors; see the report */
  RC_ERROR_INTERNAL = 4
} rc_status;

typedef struct rc_config rc_config;
typedef struct rc_report rc_report;

RC_API const char* rc_version(void);
/* Message of the last failed call on this thread; "" if none. */
RC_API const char* rc_last_error(void);

/* key = value settings plus the root seed. */
RC_API rc_status rc_config_new(rc_config** out);
RC_API void rc_config_free(rc_config* config);
RC_API rc_status rc_config_set(rc_config* config, const char* key, const char* value);
/* Merges a "key = value" file; keys already set are overwritten. */
RC_API rc_status rc_config_load(rc_config* config, const char* path);
/* Copies the value into buf (NUL-terminated, truncated to cap). *len receives
 * the full length. RC_ERROR_ARGUMENT if the key is unset. */
RC_API rc_status rc_config_get(const rc_config* config, const char* key, char* buf,
                               size_t cap, size_t* len);

/* Outcome of a command run. Strings stay valid until rc_report_free. */
RC_API int rc_report_ok(const rc_report* report);
RC_API size_t rc_report_error_count(const rc_report* report);
RC_API const char* rc_report_error(const rc_report* report, size_t index);
RC_API size_t rc_report_warning_count(const rc_report* report);
RC_API const char* rc_report_warning(const rc_report* report, size_t index);
/* Command-specific scalar: the correlation for rc_correlate, else 0. */
RC_API double rc_report_value(const rc_report* report);
RC_API void rc_report_free(rc_report* report);

/* Commands. Each writes its outputs plus run_config.txt and manifest.json to
 * out_dir. `report` may be NULL; when given, it is set even on RC_ERROR_RUN. */
RC_API rc_status rc_gen_data(const rc_config* config, const char* kb_file,
                             const char* template_file, const char* out_dir,
                             rc_report** report);
RC_API rc_status rc_train(const rc_config* config, const char* model, const char* data_dir,
                          const char* out_dir, rc_report** report);
RC_API rc_status rc_eval(const rc_config* config, const char* models_dir,
                         const char* data_dir, const char* out_dir, rc_report** report);
RC_API rc_status rc_combine(const rc_config* config, const char* const* score_dirs,
                            size_t n_score_dirs, const char* out_dir, rc_report** report);
RC_API rc_status rc_tune(const rc_config* config, const char* model, const char* data_dir,
                         const char* grid_file, const char* out_dir, rc_report** report);
RC_API rc_status rc_genre_matrix(const rc_config* config, const char* data_dir,
                                 const char* const* models, size_t n_models,
                                 const char* out_dir, rc_report** report);
RC_API rc_status rc_correlate(const rc_config* config, const char* const* report_files,
                              size_t n_report_files, const char* end_to_end_file,
                              const char* out_dir, rc_report** report);

/* Numeric helpers. */
RC_API rc_status rc_pearson(const double* xs, const double* ys, size_t n, double* out);
/* out must hold k values. */
RC_API rc_status rc_kmax_pool(const double* values, size_t n, size_t k, double* out);
/* Convex combination of n scores; weights must lie on the step lattice. */
RC_API rc_status rc_combine_scores(const double* scores, const double* weights, size_t n,
                                   double step, double* out);
RC_API rc_status rc_lattice_size(size_t n_models, double step, size_t* out);

#ifdef __cplusplus
}
#endif

#endif
