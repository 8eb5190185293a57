#ifndef DPSYNTH_H
#define DPSYNTH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum DpsStatus {
  DPS_STATUS_OK = 0,
  DPS_STATUS_NULL_POINTER = 1,
  DPS_STATUS_CONFIG = 2,
  DPS_STATUS_DATA = 3,
  DPS_STATUS_IO = 4,
  DPS_STATUS_PANIC = 5,
} DpsStatus;

// Opaque table handle.
typedef struct DpsTable DpsTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Load a CSV file. `schema_path` may be null to infer the schema.
//
// # Safety
// `path` and a non-null `schema_path` must be NUL-terminated strings; `out`
// must be writable.
enum DpsStatus dps_table_load_csv(const char *path, const char *schema_path, struct DpsTable **out);

// Release a table. Null is ignored.
//
// # Safety
// `table` must come from this library and not be freed twice.
void dps_table_free(struct DpsTable *table);

// Row count, or 0 for null.
//
// # Safety
// `table` must be null or a live handle.
size_t dps_table_rows(const struct DpsTable *table);

// Column count, or 0 for null.
//
// # Safety
// `table` must be null or a live handle.
size_t dps_table_cols(const struct DpsTable *table);

// Write a table as CSV with its header.
//
// # Safety
// `table` must be a live handle and `path` a NUL-terminated string.
enum DpsStatus dps_table_write_csv(const struct DpsTable *table, const char *path);

// Seeded row-disjoint split into three new tables.
//
// # Safety
// `table` must be a live handle; the three out pointers must be writable.
enum DpsStatus dps_split(const struct DpsTable *table,
                         double train_fraction,
                         double control_fraction,
                         double test_fraction,
                         uint64_t seed,
                         struct DpsTable **train_out,
                         struct DpsTable **control_out,
                         struct DpsTable **test_out);

// Fit `model` ("npc", "dpnpc", "dpcopula" or "dphist") on `table` and
// sample `n` rows. `epsilon` may be null for the non-private model.
//
// # Safety
// `table` must be a live handle, `model` a NUL-terminated string, `epsilon`
// null or readable, and `out` writable.
enum DpsStatus dps_generate(const struct DpsTable *table,
                            const char *model,
                            const double *epsilon,
                            size_t bins,
                            size_t n,
                            uint64_t seed,
                            struct DpsTable **out);

// Privacy, fidelity and (when `target` and `test` are given) utility
// scores as a JSON object written to `json_out`.
//
// # Safety
// Table arguments must be live handles (`test` may be null), `target` null
// or NUL-terminated, and `json_out` writable. Free the string with
// `dps_string_free`.
enum DpsStatus dps_evaluate(const struct DpsTable *train,
                            const struct DpsTable *control,
                            const struct DpsTable *synthetic,
                            const struct DpsTable *test,
                            const char *target,
                            size_t attacks,
                            double tolerance,
                            double alpha,
                            uint64_t seed,
                            char **json_out);

// Two-sample Kolmogorov-Smirnov statistic.
//
// # Safety
// `a` and `b` must point to `a_len` and `b_len` doubles; `out` writable.
enum DpsStatus dps_ks_distance(const double *a,
                               size_t a_len,
                               const double *b,
                               size_t b_len,
                               double *out);

// Kendall's tau between two equal-length samples.
//
// # Safety
// `x` and `y` must point to `len` doubles; `out` writable.
enum DpsStatus dps_kendall_tau(const double *x, const double *y, size_t len, double *out);

// Wilson score centre and half-width of an attack success rate.
//
// # Safety
// `r_out` and `delta_out` must be writable.
enum DpsStatus dps_wilson_risk(size_t successes,
                               size_t attempts,
                               double alpha,
                               double *r_out,
                               double *delta_out);

// Matthews correlation coefficient of a confusion matrix.
//
// # Safety
// `out` must be writable.
enum DpsStatus dps_mcc(uint64_t tp, uint64_t tn, uint64_t fp, uint64_t fn_, double *out);

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next call into the library from the same thread.
const char *dps_last_error_message(void);

// Release a string returned by the library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void dps_string_free(char *s);

// Library version as a static NUL-terminated string.
const char *dps_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DPSYNTH_H */
