#ifndef COHERENCE_LAB_H
#define COHERENCE_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ClGrade {
  CL_GRADE_NONE = 0,
  CL_GRADE_SIMPLE = 1,
  CL_GRADE_THETA0 = 2,
  CL_GRADE_THETA1 = 3,
  CL_GRADE_FULL = 4,
} ClGrade;

typedef enum ClStatus {
  CL_STATUS_OK = 0,
  CL_STATUS_NULL_ARGUMENT = 1,
  CL_STATUS_INVALID_UTF8 = 2,
  CL_STATUS_PARSE_ERROR = 3,
  CL_STATUS_INVALID_INPUT = 4,
  CL_STATUS_INTERNAL_CONTRADICTION = 5,
  CL_STATUS_PANIC = 6,
} ClStatus;

/**
 * A parsed capacity.
 */
typedef struct ClCapacity ClCapacity;

/**
 * A parsed decision instance.
 */
typedef struct ClInstance ClInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL after a success.
 * The pointer stays valid until the next call into this library on the same thread.
 */
const char *cl_last_error(void);

/**
 * Library version as a static string.
 */
const char *cl_version(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void cl_string_free(char *s);

/**
 * Parses an instance from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum ClStatus cl_instance_parse(const char *json, struct ClInstance **out);

/**
 * # Safety
 * `instance` must be NULL or a handle from [`cl_instance_parse`], not yet freed.
 */
void cl_instance_free(struct ClInstance *instance);

/**
 * # Safety
 * `instance` must be a live handle; the out pointers must be writable.
 */
enum ClStatus cl_instance_shape(const struct ClInstance *instance, size_t *states, size_t *acts);

/**
 * Strongest coherence grade after normalization. `clique_cap` 0 selects the default.
 *
 * # Safety
 * `instance` must be a live handle and `out` writable.
 */
enum ClStatus cl_instance_grade(const struct ClInstance *instance,
                                size_t clique_cap,
                                enum ClGrade *out);

/**
 * Whether the value order admits no arbitrage.
 *
 * # Safety
 * `instance` must be a live handle and `out` writable.
 */
enum ClStatus cl_instance_no_arbitrage(const struct ClInstance *instance, bool *out);

/**
 * Full analysis as the JSON report the command line prints.
 *
 * # Safety
 * `instance` must be a live handle and `out` writable.
 */
enum ClStatus cl_instance_analyze_json(const struct ClInstance *instance,
                                       size_t clique_cap,
                                       uint64_t seed,
                                       char **out);

/**
 * Parses a capacity from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum ClStatus cl_capacity_parse(const char *json, struct ClCapacity **out);

/**
 * # Safety
 * `capacity` must be NULL or a handle from [`cl_capacity_parse`], not yet freed.
 */
void cl_capacity_free(struct ClCapacity *capacity);

/**
 * # Safety
 * `capacity` must be a live handle and `out` writable.
 */
enum ClStatus cl_capacity_is_convex(const struct ClCapacity *capacity, bool *out);

/**
 * Choquet integral of a profile given as `len` rational strings such as "3/4".
 * The result is written as a newly allocated rational string.
 *
 * # Safety
 * `capacity` must be a live handle, `profile` must point to `len` valid
 * strings, and `out` must be writable.
 */
enum ClStatus cl_capacity_choquet(const struct ClCapacity *capacity,
                                  const char *const *profile,
                                  size_t len,
                                  char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COHERENCE_LAB_H */
