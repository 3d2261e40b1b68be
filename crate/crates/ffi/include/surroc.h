/* C interface to the surroc surrogacy-evaluation library. */

#ifndef SURROC_H
#define SURROC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status classes; non-zero values mirror the CLI exit codes.
 */
typedef enum SurrocStatus {
  SURROC_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  SURROC_STATUS_NULL_ARGUMENT = 1,
  /**
   * The CSV header is missing a required column.
   */
  SURROC_STATUS_SCHEMA = 2,
  /**
   * A row failed to parse or validate, or the outcome label is underivable.
   */
  SURROC_STATUS_VALIDATION = 3,
  /**
   * The input is analyzable in principle but degenerate (e.g. single-class
   * labels, empty dataset).
   */
  SURROC_STATUS_DEGENERATE = 4,
  SURROC_STATUS_INTERNAL = 5,
} SurrocStatus;

/**
 * Opaque handle over a parsed, validated comparison dataset.
 */
typedef struct SurrocDataset SurrocDataset;

/**
 * Opaque handle over a completed analysis.
 */
typedef struct SurrocReport SurrocReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null if the last
 * call succeeded. The pointer stays valid until the next failing call.
 */
const char *surroc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *surroc_version(void);

/**
 * Parse `len` bytes of comparison CSV into a dataset handle.
 *
 * On success writes the handle to `out` and returns `Ok`; on failure `out`
 * is untouched and the error is retrievable via `surroc_last_error`.
 *
 * # Safety
 * `data` must point to `len` readable bytes and `out` must be a valid
 * pointer to a handle slot.
 */
enum SurrocStatus surroc_dataset_parse(const uint8_t *data,
                                       uintptr_t len,
                                       struct SurrocDataset **out);

/**
 * Number of comparison records in the dataset; 0 for a null handle.
 */
uintptr_t surroc_dataset_len(const struct SurrocDataset *dataset);

/**
 * Release a dataset handle. Null is accepted and ignored.
 *
 * # Safety
 * `dataset` must have come from `surroc_dataset_parse` and not be freed twice.
 */
void surroc_dataset_free(struct SurrocDataset *dataset);

/**
 * Run the full analysis (cross-table, ROC/Youden per measure, tree, bagged
 * importance, STE summary) with default configuration at the given seed and
 * significance level.
 *
 * # Safety
 * `dataset` must be a live handle and `out` a valid pointer to a handle slot.
 */
enum SurrocStatus surroc_analyze(const struct SurrocDataset *dataset,
                                 uint64_t seed,
                                 double alpha,
                                 struct SurrocReport **out);

/**
 * Serialize a report as canonical JSON (sorted keys, 6 significant digits).
 *
 * On success writes a NUL-terminated string to `out`; release it with
 * `surroc_string_free`.
 *
 * # Safety
 * `rep` must be a live handle and `out` a valid pointer to a string slot.
 */
enum SurrocStatus surroc_report_to_json(const struct SurrocReport *rep, char **out);

/**
 * Release a report handle. Null is accepted and ignored.
 *
 * # Safety
 * `rep` must have come from `surroc_analyze` and not be freed twice.
 */
void surroc_report_free(struct SurrocReport *rep);

/**
 * Release a string returned by this library. Null is accepted and ignored.
 *
 * # Safety
 * `s` must have come from `surroc_report_to_json` and not be freed twice.
 */
void surroc_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SURROC_H */
