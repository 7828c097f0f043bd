#ifndef HYBRIDQ_H
#define HYBRIDQ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HqStatus {
  HQ_STATUS_OK = 0,
  HQ_STATUS_NULL_ARGUMENT = 1,
  HQ_STATUS_INVALID_UTF8 = 2,
  HQ_STATUS_INVALID_JSON = 3,
  HQ_STATUS_DATA = 4,
  HQ_STATUS_SQL = 5,
  HQ_STATUS_PLAN = 6,
  HQ_STATUS_API = 7,
  HQ_STATUS_INVALID_ARGUMENT = 8,
  HQ_STATUS_PANIC = 9,
} HqStatus;

/**
 * A loaded database plus the view and bridge used to query it.
 */
typedef struct HqEngine HqEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next call into this library on the same thread.
 */
const char *hq_last_error(void);

/**
 * Library version as a static string.
 */
const char *hq_version(void);

/**
 * Loads the database directory `data_dir` (schema.sql plus one CSV per table).
 * With a non-null `scalar_api_url`, the scalar APIs served there become
 * virtual tables and back the SQL functions; otherwise the functions run
 * in-process.
 *
 * # Safety
 * String arguments are null or nul-terminated. `out` is valid for one write.
 */
enum HqStatus hq_engine_open(const char *data_dir,
                             const char *scalar_api_url,
                             struct HqEngine **out);

/**
 * # Safety
 * `engine` is null or was returned by [`hq_engine_open`] and not yet freed.
 */
void hq_engine_free(struct HqEngine *engine);

/**
 * Runs `sql` and writes the result as `{"columns": [...], "rows": [[...]]}`.
 * `mode` is `declarative` (virtual tables) or `declarative2` (SQL functions);
 * null selects `declarative`.
 *
 * # Safety
 * `engine` comes from [`hq_engine_open`]; strings are null or nul-terminated;
 * `out_json` is valid for one write.
 */
enum HqStatus hq_engine_execute(const struct HqEngine *engine,
                                const char *sql,
                                const char *mode,
                                char **out_json);

/**
 * Writes the materialization plan for `sql` against the engine's view as JSON.
 *
 * # Safety
 * As for [`hq_engine_execute`].
 */
enum HqStatus hq_engine_plan(const struct HqEngine *engine, const char *sql, char **out_json);

/**
 * Calls the scalar API `name` in-process. `args_json` is a JSON array of
 * arguments; the result is written as a JSON scalar.
 *
 * # Safety
 * Strings are null or nul-terminated; `out_json` is valid for one write.
 */
enum HqStatus hq_scalar_invoke(const char *name, const char *args_json, char **out_json);

/**
 * Compares two results in `{"columns", "rows"}` form. Writes 1 to `matched`
 * when the predicted result covers the gold one, else 0.
 *
 * # Safety
 * Strings are null or nul-terminated; `matched` is valid for one write.
 */
enum HqStatus hq_rows_match(const char *gold_json,
                            const char *pred_json,
                            bool ordered,
                            int32_t *matched);

/**
 * # Safety
 * `s` is null or a string returned by this library and not yet freed.
 */
void hq_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYBRIDQ_H */
