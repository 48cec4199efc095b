#ifndef LINKRDS_H
#define LINKRDS_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LrdsStatus {
  LRDS_STATUS_OK = 0,
  LRDS_STATUS_NULL_POINTER = 1,
  LRDS_STATUS_INVALID_UTF8 = 2,
  LRDS_STATUS_INVALID_JSON = 3,
  LRDS_STATUS_INVALID_ARGUMENT = 4,
  LRDS_STATUS_VERIFICATION_FAILED = 5,
  LRDS_STATUS_PANIC = 6,
} LrdsStatus;

/**
 * Opaque construction bundle.
 */
typedef struct LrdsBundle LrdsBundle;

/**
 * Opaque finite group.
 */
typedef struct LrdsGroup LrdsGroup;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next call on the same thread; do not free it.
 */
const char *lrds_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void lrds_string_free(char *s);

/**
 * Parses a group from its JSON form.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
enum LrdsStatus lrds_group_from_json(const char *json, struct LrdsGroup **out);

/**
 * JSON form of a group.
 *
 * # Safety
 * `group` must be a live handle; `out` must be writable.
 */
enum LrdsStatus lrds_group_to_json(const struct LrdsGroup *group, char **out);

/**
 * Order of the group, or 0 for a null handle.
 *
 * # Safety
 * `group` must be null or a live handle.
 */
size_t lrds_group_order(const struct LrdsGroup *group);

/**
 * # Safety
 * `group` must be null or a live handle, not used afterwards.
 */
void lrds_group_free(struct LrdsGroup *group);

/**
 * Builds and verifies a construction. `params` is a JSON object with any of
 * the keys q, r, p, n, t, s, epsilon, labeling, f; null means `{}`.
 *
 * # Safety
 * `family_name` must be a nul-terminated string, `params` null or one, and
 * `out` writable.
 */
enum LrdsStatus lrds_construct(const char *family_name,
                               const char *params,
                               struct LrdsBundle **out);

/**
 * Serialized bundle, byte-identical to the CLI output minus whitespace.
 *
 * # Safety
 * `bundle` must be a live handle; `out` must be writable.
 */
enum LrdsStatus lrds_bundle_to_json(const struct LrdsBundle *bundle, char **out);

/**
 * The bundle's group as a new handle.
 *
 * # Safety
 * `bundle` must be a live handle; `out` must be writable.
 */
enum LrdsStatus lrds_bundle_group(const struct LrdsBundle *bundle, struct LrdsGroup **out);

/**
 * Number of named sets in the bundle, or 0 for a null handle.
 *
 * # Safety
 * `bundle` must be null or a live handle.
 */
size_t lrds_bundle_set_count(const struct LrdsBundle *bundle);

/**
 * # Safety
 * `bundle` must be null or a live handle, not used afterwards.
 */
void lrds_bundle_free(struct LrdsBundle *bundle);

/**
 * Checks that `set` is an RDS relative to `forbidden`. With
 * `forbidden_len == 0` the forbidden subgroup is inferred. On success
 * `certificate` receives the certificate JSON.
 *
 * # Safety
 * Arrays must hold the stated number of elements; `certificate` must be writable.
 */
enum LrdsStatus lrds_verify_rds(const struct LrdsGroup *group,
                                const size_t *set,
                                size_t set_len,
                                const size_t *forbidden,
                                size_t forbidden_len,
                                char **certificate);

/**
 * Checks that `set` is a partial difference set.
 *
 * # Safety
 * `set` must hold `set_len` elements; `certificate` must be writable.
 */
enum LrdsStatus lrds_verify_pds(const struct LrdsGroup *group,
                                const size_t *set,
                                size_t set_len,
                                char **certificate);

/**
 * Checks that the sets (a JSON array of index arrays) form a linked system
 * relative to `forbidden`.
 *
 * # Safety
 * `sets_json` must be a nul-terminated string, `forbidden` must hold
 * `forbidden_len` elements and `certificate` must be writable.
 */
enum LrdsStatus lrds_verify_linked(const struct LrdsGroup *group,
                                   const char *sets_json,
                                   const size_t *forbidden,
                                   size_t forbidden_len,
                                   char **certificate);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LINKRDS_H */
