/* catpaw C API.
 *
 * Every call returns a catpaw_status. On failure the message and the
 * offending field are available from catpaw_last_error() and
 * catpaw_last_error_field() on the calling thread until its next call.
 * Output strings are allocated by the library and released with
 * catpaw_string_free(). An engine is immutable once opened and may be
 * shared between threads.
 */
#ifndef CATPAW_H
#define CATPAW_H

#include <stdint.h>

#if defined(_WIN32)
#define CATPAW_API __declspec(dllexport)
#else
#define CATPAW_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum catpaw_status {
  CATPAW_OK = 0,
  CATPAW_ERR_INVALID_ARGUMENT = 1,
  CATPAW_ERR_IO = 2,
  CATPAW_ERR_PARSE = 3,
  CATPAW_ERR_VALIDATION = 4,
  CATPAW_ERR_UNKNOWN_ID = 5,
  CATPAW_ERR_CONSTRAINT = 6,
  CATPAW_ERR_MISSING_EVIDENCE = 7,
  CATPAW_ERR_EMPTY_MATRIX = 8,
  CATPAW_ERR_GENERATION_FAILURE = 9,
  CATPAW_ERR_EXHAUSTED = 10,
  CATPAW_ERR_COVERAGE = 11,
  CATPAW_ERR_UNDEFINED_CORRELATION = 12,
  CATPAW_ERR_INTERNAL = 99
} catpaw_status;

typedef struct catpaw_engine catpaw_engine;

CATPAW_API const char* catpaw_version(void);

/* Stable snake_case code, e.g. "constraint". */
CATPAW_API const char* catpaw_status_name(catpaw_status status);

/* HTTP status the service answers with for `status`. */
CATPAW_API int catpaw_http_status(catpaw_status status);

CATPAW_API const char* catpaw_last_error(void);
CATPAW_API const char* catpaw_last_error_field(void);

CATPAW_API void catpaw_string_free(char* s);

/* Loads pools, designer palettes, configuration and evidence from
 * `data_dir`. `config_path` and `trials_path` may be NULL. */
CATPAW_API catpaw_status catpaw_engine_open(const char* data_dir,
                                            const char* config_path,
                                            const char* trials_path,
                                            catpaw_engine** out);
CATPAW_API void catpaw_engine_close(catpaw_engine* engine);

/* Effective configuration as JSON. */
CATPAW_API catpaw_status catpaw_config(const catpaw_engine* e, char** out);

CATPAW_API catpaw_status catpaw_colors(const catpaw_engine* e, char** out);
CATPAW_API catpaw_status catpaw_shapes(const catpaw_engine* e, char** out);

/* `format` is "json" or "tsv". */
CATPAW_API catpaw_status catpaw_matrix(const catpaw_engine* e,
                                       const char* axis, const char* bin,
                                       const char* format, char** out);

CATPAW_API catpaw_status catpaw_auto_encoding(const catpaw_engine* e, int n,
                                              char** out);

/* JSON request in, JSON response out. */
CATPAW_API catpaw_status catpaw_generate(const catpaw_engine* e,
                                         const char* request, char** out);
CATPAW_API catpaw_status catpaw_swap(const catpaw_engine* e,
                                     const char* request, char** out);

/* JSON request in, SVG out. */
CATPAW_API catpaw_status catpaw_preview(const catpaw_engine* e,
                                        const char* request, char** out_svg);

/* Plan manifest as text. With a non-NULL `out_dir` the manifest and one SVG
 * per stimulus are also written there. */
CATPAW_API catpaw_status catpaw_plan(const catpaw_engine* e,
                                     const char* experiment, uint64_t seed,
                                     const char* out_dir, char** out);

/* Summary of a trial log as JSON. */
CATPAW_API catpaw_status catpaw_ingest(const catpaw_engine* e,
                                       const char* trials_path, char** out);

/* Rank validation report as text; `out_svg` may be NULL. */
CATPAW_API catpaw_status catpaw_validate(const catpaw_engine* e,
                                         const char* request, char** out,
                                         char** out_svg);

/* Baseline comparison report as text. */
CATPAW_API catpaw_status catpaw_baseline(const catpaw_engine* e,
                                         const char* request, char** out);

/* Synthetic trial log as text. */
CATPAW_API catpaw_status catpaw_synth_trials(const catpaw_engine* e,
                                             const char* request, char** out);

/* Re-derives the colour pool; pool file as text. */
CATPAW_API catpaw_status catpaw_derive_pool(const char* request, char** out);

#ifdef __cplusplus
}
#endif

#endif /* CATPAW_H */
